#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace affalg {

// Coordinate vocabulary: t, base coordinates x1..xn, fibre coordinates
// y1..yk, and momenta p0, p1..pk on the dual side.
enum class VarKind : unsigned char { T, X, Y, P0, P };

struct VarId {
  VarKind kind{VarKind::T};
  int index{0};  // 1-based for X/Y/P, 0 for T and P0

  friend auto operator<=>(const VarId&, const VarId&) = default;
};

VarId var_t();
VarId var_x(int i);
VarId var_y(int a);
VarId var_p0();
VarId var_p(int a);

std::string to_string(VarId v);

struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off);
};

struct EvalError : std::runtime_error {
  explicit EvalError(const std::string& msg);
};

enum class ExprOp : unsigned char {
  Constant,
  Variable,
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // integer exponent
  Neg,
  Sin,
  Cos,
  Exp,
  Ln,
};

// Immutable expression tree with shared subterms.  Factory functions fold
// constants and absorb additive/multiplicative identities, so identities
// that cancel structurally come out as the literal constant 0.
class Expr {
 public:
  Expr();  // constant 0

  static Expr constant(double value);
  static Expr variable(VarId v);

  ExprOp op() const;
  double constant_value() const;  // pre: op() == Constant
  VarId var() const;              // pre: op() == Variable
  int exponent() const;           // pre: op() == Pow
  Expr child0() const;            // pre: non-leaf
  Expr child1() const;            // pre: binary node

  bool is_constant(double value) const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> n);
  static Expr make(ExprOp op, Expr a, Expr b, double value, VarId var, int exponent);

  std::shared_ptr<const Node> node_;

  friend Expr pow(const Expr& base, int exponent);
  friend Expr sin(const Expr& e);
  friend Expr cos(const Expr& e);
  friend Expr exp(const Expr& e);
  friend Expr ln(const Expr& e);
  friend bool same_node(const Expr& a, const Expr& b);
};

Expr pow(const Expr& base, int exponent);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr exp(const Expr& e);
Expr ln(const Expr& e);

// Grammar:
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := atom ('^' integer)?
//   atom   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' atom
// Identifiers: t, x<digits>, y<digits>, p0, p<digits>; functions sin, cos,
// exp, ln.  Note '-x^2' parses as (-x)^2 since the sign binds inside atom;
// the printer emits parentheses so round trips are faithful.
Expr parse(std::string_view text);

// Emits a string that re-parses to an equivalent expression.
std::string to_string(const Expr& e);

// Shortest decimal string that parses back to exactly the same value.
std::string format_double(double value);

Expr diff(const Expr& e, VarId v);

class Env {
 public:
  void set(VarId v, double value);
  const double* find(VarId v) const;

 private:
  std::map<VarId, double> values_;
};

// Throws EvalError on unbound variables, division by zero, ln of a
// non-positive value, and non-finite intermediate results.
double eval(const Expr& e, const Env& env);

Expr subst(const Expr& e, const std::map<VarId, Expr>& replacements);

void collect_vars(const Expr& e, std::set<VarId>& out);
std::set<VarId> free_vars(const Expr& e);

// Exact tree comparison (constants compared bitwise-as-doubles).
bool structurally_equal(const Expr& a, const Expr& b);

struct Interval {
  double lo{-1.0};
  double hi{1.0};
};

// Box domain for randomized zero testing.  The same seed always yields the
// same sample points: every domain variable is drawn each round, in VarId
// order, whether or not the expression mentions it.
struct SampleDomain {
  std::map<VarId, Interval> intervals;
  int samples = 64;
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
  int retry_budget = 8;  // per-sample redraws when a point hits a singularity
};

struct ZeroCheck {
  bool zero{true};
  double residual{0.0};
};

// Randomized zero test: max |e| over sampled points, compared against
// dom.tolerance.  Throws if the expression mentions a variable without an
// interval, or if a sample's retry budget is exhausted on eval errors.
ZeroCheck is_zero(const Expr& e, const SampleDomain& dom);

// Convenience: largest residual of a family of expressions over one domain.
double max_abs_on_samples(const std::vector<Expr>& exprs, const SampleDomain& dom);

// Deterministic uniform sampler used everywhere randomness is needed.
class SampleRng {
 public:
  explicit SampleRng(std::uint64_t seed);
  double uniform(double lo, double hi);  // draw in [lo, hi)
  std::uint64_t next_u64();

 private:
  std::uint64_t state_[4];
};

}  // namespace affalg
