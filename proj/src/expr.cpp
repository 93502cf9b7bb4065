#include "affalg/expr.hpp"

#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace affalg {

VarId var_t() { return {VarKind::T, 0}; }
VarId var_x(int i) { return {VarKind::X, i}; }
VarId var_y(int a) { return {VarKind::Y, a}; }
VarId var_p0() { return {VarKind::P0, 0}; }
VarId var_p(int a) { return {VarKind::P, a}; }

std::string to_string(VarId v) {
  switch (v.kind) {
    case VarKind::T: return "t";
    case VarKind::X: return "x" + std::to_string(v.index);
    case VarKind::Y: return "y" + std::to_string(v.index);
    case VarKind::P0: return "p0";
    case VarKind::P: return "p" + std::to_string(v.index);
  }
  return "?";
}

ParseError::ParseError(const std::string& msg, std::size_t off)
    : std::runtime_error(msg + " (at offset " + std::to_string(off) + ")"), offset(off) {}

EvalError::EvalError(const std::string& msg) : std::runtime_error(msg) {}

struct Expr::Node {
  ExprOp op{ExprOp::Constant};
  double value{0.0};
  VarId var{};
  int exponent{0};
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};

Expr::Expr() {
  static const std::shared_ptr<const Node> zero = std::make_shared<Node>();
  node_ = zero;
}
Expr::Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

Expr Expr::make(ExprOp op, Expr a, Expr b, double value, VarId var, int exponent) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = value;
  n->var = var;
  n->exponent = exponent;
  n->a = std::move(a.node_);
  n->b = std::move(b.node_);
  return Expr(std::move(n));
}

Expr Expr::constant(double value) {
  if (value == 0.0) return Expr();  // normalizes -0.0 as well
  return make(ExprOp::Constant, Expr(), Expr(), value, {}, 0);
}

Expr Expr::variable(VarId v) { return make(ExprOp::Variable, Expr(), Expr(), 0.0, v, 0); }

ExprOp Expr::op() const { return node_->op; }
double Expr::constant_value() const { return node_->value; }
VarId Expr::var() const { return node_->var; }
int Expr::exponent() const { return node_->exponent; }
Expr Expr::child0() const { return Expr(node_->a); }
Expr Expr::child1() const { return Expr(node_->b); }

bool Expr::is_constant(double value) const {
  return node_->op == ExprOp::Constant && node_->value == value;
}

bool same_node(const Expr& a, const Expr& b) { return a.node_ == b.node_; }

Expr operator+(const Expr& a, const Expr& b) {
  if (a.op() == ExprOp::Constant && b.op() == ExprOp::Constant)
    return Expr::constant(a.constant_value() + b.constant_value());
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expr::make(ExprOp::Add, a, b, 0.0, {}, 0);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (same_node(a, b)) return Expr::constant(0.0);
  if (a.op() == ExprOp::Constant && b.op() == ExprOp::Constant)
    return Expr::constant(a.constant_value() - b.constant_value());
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  return Expr::make(ExprOp::Sub, a, b, 0.0, {}, 0);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.op() == ExprOp::Constant && b.op() == ExprOp::Constant)
    return Expr::constant(a.constant_value() * b.constant_value());
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  return Expr::make(ExprOp::Mul, a, b, 0.0, {}, 0);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_constant(1.0)) return a;
  if (b.op() == ExprOp::Constant && b.constant_value() != 0.0) {
    if (a.op() == ExprOp::Constant)
      return Expr::constant(a.constant_value() / b.constant_value());
    if (a.is_constant(0.0)) return Expr::constant(0.0);
  }
  return Expr::make(ExprOp::Div, a, b, 0.0, {}, 0);
}

Expr operator-(const Expr& a) {
  if (a.op() == ExprOp::Constant) return Expr::constant(-a.constant_value());
  if (a.op() == ExprOp::Neg) return a.child0();
  return Expr::make(ExprOp::Neg, a, Expr(), 0.0, {}, 0);
}

Expr pow(const Expr& base, int exponent) {
  if (exponent == 0) return Expr::constant(1.0);
  if (exponent == 1) return base;
  if (base.op() == ExprOp::Constant) {
    double v = base.constant_value();
    if (v != 0.0 || exponent > 0) return Expr::constant(std::pow(v, exponent));
    // 0^negative is left as a node so evaluation reports the singularity
  }
  return Expr::make(ExprOp::Pow, base, Expr(), 0.0, {}, exponent);
}

Expr sin(const Expr& e) {
  if (e.op() == ExprOp::Constant) return Expr::constant(std::sin(e.constant_value()));
  return Expr::make(ExprOp::Sin, e, Expr(), 0.0, {}, 0);
}

Expr cos(const Expr& e) {
  if (e.op() == ExprOp::Constant) return Expr::constant(std::cos(e.constant_value()));
  return Expr::make(ExprOp::Cos, e, Expr(), 0.0, {}, 0);
}

Expr exp(const Expr& e) {
  if (e.op() == ExprOp::Constant) return Expr::constant(std::exp(e.constant_value()));
  return Expr::make(ExprOp::Exp, e, Expr(), 0.0, {}, 0);
}

Expr ln(const Expr& e) {
  if (e.op() == ExprOp::Constant && e.constant_value() > 0.0)
    return Expr::constant(std::log(e.constant_value()));
  return Expr::make(ExprOp::Ln, e, Expr(), 0.0, {}, 0);
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  Expr run() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
      ++pos_;
  }

  bool peek_is(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  bool consume(char c) {
    if (peek_is(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_expr() {
    Expr e = parse_term();
    for (;;) {
      if (consume('+'))
        e = e + parse_term();
      else if (consume('-'))
        e = e - parse_term();
      else
        return e;
    }
  }

  Expr parse_term() {
    Expr e = parse_factor();
    for (;;) {
      if (consume('*'))
        e = e * parse_factor();
      else if (consume('/'))
        e = e / parse_factor();
      else
        return e;
    }
  }

  Expr parse_factor() {
    Expr base = parse_atom();
    if (consume('^')) return pow(base, parse_int_exponent());
    return base;
  }

  int parse_int_exponent() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < s_.size() && s_[pos_] == '-') ++pos_;
    std::size_t digits = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == digits) {
      pos_ = start;
      fail("expected integer exponent");
    }
    int value = 0;
    auto res = std::from_chars(s_.data() + start, s_.data() + pos_, value);
    if (res.ec != std::errc()) {
      pos_ = start;
      fail("integer exponent out of range");
    }
    return value;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail("expected expression");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      if (!consume(')')) fail("expected ')'");
      return e;
    }
    if (c == '-') {
      ++pos_;
      return -parse_atom();
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr parse_number() {
    double value = 0.0;
    auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), value);
    if (res.ec != std::errc()) fail("malformed number");
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    return Expr::constant(value);
  }

  Expr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    std::string name(s_.substr(start, pos_ - start));

    if (name == "sin" || name == "cos" || name == "exp" || name == "ln") {
      if (!consume('(')) fail("expected '(' after function name '" + name + "'");
      Expr arg = parse_expr();
      if (!consume(')')) fail("expected ')'");
      if (name == "sin") return sin(arg);
      if (name == "cos") return cos(arg);
      if (name == "exp") return exp(arg);
      return ln(arg);
    }
    if (name == "t") return Expr::variable(var_t());
    if (name == "p0") return Expr::variable(var_p0());
    if (name.size() > 1 && (name[0] == 'x' || name[0] == 'y' || name[0] == 'p')) {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      if (digits && name[1] != '0') {
        int index = 0;
        std::from_chars(name.data() + 1, name.data() + name.size(), index);
        if (index >= 1) {
          VarKind kind = name[0] == 'x' ? VarKind::X : name[0] == 'y' ? VarKind::Y : VarKind::P;
          return Expr::variable({kind, index});
        }
      }
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).run(); }

// ---------------------------------------------------------------------------
// Printing

std::string format_double(double v) {
  if (v == 0.0) return "0";
  if (std::isfinite(v) && v == std::rint(v) && std::fabs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  double back = 0.0;
  auto res = std::from_chars(buf, buf + std::strlen(buf), back);
  if (res.ec == std::errc() && back == v) return buf;
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

// Precedence levels: additive 10, multiplicative 20, atoms 40.  A child is
// parenthesized when its level is below what the context requires.
int precedence(const Expr& e) {
  switch (e.op()) {
    case ExprOp::Add:
    case ExprOp::Sub:
      return 10;
    case ExprOp::Mul:
    case ExprOp::Div:
      return 20;
    case ExprOp::Pow:
      return 30;
    case ExprOp::Neg:
      return 5;  // always parenthesized inside any operator context
    default:
      return 40;
  }
}

void print(const Expr& e, int min_prec, std::string& out) {
  bool wrap = precedence(e) < min_prec;
  if (wrap) out += '(';
  switch (e.op()) {
    case ExprOp::Constant:
      out += format_double(e.constant_value());
      break;
    case ExprOp::Variable:
      out += to_string(e.var());
      break;
    case ExprOp::Add:
      print(e.child0(), 10, out);
      out += " + ";
      print(e.child1(), 11, out);
      break;
    case ExprOp::Sub:
      print(e.child0(), 10, out);
      out += " - ";
      print(e.child1(), 11, out);
      break;
    case ExprOp::Mul:
      print(e.child0(), 20, out);
      out += "*";
      print(e.child1(), 21, out);
      break;
    case ExprOp::Div:
      print(e.child0(), 20, out);
      out += "/";
      print(e.child1(), 21, out);
      break;
    case ExprOp::Pow:
      print(e.child0(), 40, out);
      out += '^';
      out += std::to_string(e.exponent());
      break;
    case ExprOp::Neg:
      out += '-';
      print(e.child0(), 40, out);
      break;
    case ExprOp::Sin:
    case ExprOp::Cos:
    case ExprOp::Exp:
    case ExprOp::Ln: {
      const char* name = e.op() == ExprOp::Sin   ? "sin"
                         : e.op() == ExprOp::Cos ? "cos"
                         : e.op() == ExprOp::Exp ? "exp"
                                                 : "ln";
      out += name;
      out += '(';
      print(e.child0(), 0, out);
      out += ')';
      break;
    }
  }
  if (wrap) out += ')';
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Calculus and evaluation

Expr diff(const Expr& e, VarId v) {
  switch (e.op()) {
    case ExprOp::Constant:
      return Expr::constant(0.0);
    case ExprOp::Variable:
      return Expr::constant(e.var() == v ? 1.0 : 0.0);
    case ExprOp::Add:
      return diff(e.child0(), v) + diff(e.child1(), v);
    case ExprOp::Sub:
      return diff(e.child0(), v) - diff(e.child1(), v);
    case ExprOp::Mul:
      return diff(e.child0(), v) * e.child1() + e.child0() * diff(e.child1(), v);
    case ExprOp::Div:
      return (diff(e.child0(), v) * e.child1() - e.child0() * diff(e.child1(), v)) /
             pow(e.child1(), 2);
    case ExprOp::Pow:
      return Expr::constant(e.exponent()) * pow(e.child0(), e.exponent() - 1) *
             diff(e.child0(), v);
    case ExprOp::Neg:
      return -diff(e.child0(), v);
    case ExprOp::Sin:
      return cos(e.child0()) * diff(e.child0(), v);
    case ExprOp::Cos:
      return -(sin(e.child0()) * diff(e.child0(), v));
    case ExprOp::Exp:
      return exp(e.child0()) * diff(e.child0(), v);
    case ExprOp::Ln:
      return diff(e.child0(), v) / e.child0();
  }
  throw std::logic_error("unreachable expression op");
}

void Env::set(VarId v, double value) { values_[v] = value; }

const double* Env::find(VarId v) const {
  auto it = values_.find(v);
  return it == values_.end() ? nullptr : &it->second;
}

namespace {

double eval_node(const Expr& e, const Env& env) {
  switch (e.op()) {
    case ExprOp::Constant:
      return e.constant_value();
    case ExprOp::Variable: {
      const double* v = env.find(e.var());
      if (!v) throw EvalError("unbound variable '" + to_string(e.var()) + "'");
      return *v;
    }
    case ExprOp::Add:
      return eval_node(e.child0(), env) + eval_node(e.child1(), env);
    case ExprOp::Sub:
      return eval_node(e.child0(), env) - eval_node(e.child1(), env);
    case ExprOp::Mul:
      return eval_node(e.child0(), env) * eval_node(e.child1(), env);
    case ExprOp::Div: {
      double num = eval_node(e.child0(), env);
      double den = eval_node(e.child1(), env);
      if (den == 0.0) throw EvalError("division by zero in '" + to_string(e) + "'");
      return num / den;
    }
    case ExprOp::Pow: {
      double base = eval_node(e.child0(), env);
      int n = e.exponent();
      if (base == 0.0 && n < 0) throw EvalError("zero raised to negative power in '" + to_string(e) + "'");
      double acc = 1.0;
      double factor = n < 0 ? 1.0 / base : base;
      for (int i = std::abs(n); i > 0; --i) acc *= factor;
      return acc;
    }
    case ExprOp::Neg:
      return -eval_node(e.child0(), env);
    case ExprOp::Sin:
      return std::sin(eval_node(e.child0(), env));
    case ExprOp::Cos:
      return std::cos(eval_node(e.child0(), env));
    case ExprOp::Exp:
      return std::exp(eval_node(e.child0(), env));
    case ExprOp::Ln: {
      double v = eval_node(e.child0(), env);
      if (v <= 0.0) throw EvalError("ln of non-positive value in '" + to_string(e) + "'");
      return std::log(v);
    }
  }
  throw std::logic_error("unreachable expression op");
}

}  // namespace

double eval(const Expr& e, const Env& env) {
  double v = eval_node(e, env);
  if (!std::isfinite(v)) throw EvalError("non-finite result in '" + to_string(e) + "'");
  return v;
}

Expr subst(const Expr& e, const std::map<VarId, Expr>& replacements) {
  switch (e.op()) {
    case ExprOp::Constant:
      return e;
    case ExprOp::Variable: {
      auto it = replacements.find(e.var());
      return it == replacements.end() ? e : it->second;
    }
    case ExprOp::Add:
      return subst(e.child0(), replacements) + subst(e.child1(), replacements);
    case ExprOp::Sub:
      return subst(e.child0(), replacements) - subst(e.child1(), replacements);
    case ExprOp::Mul:
      return subst(e.child0(), replacements) * subst(e.child1(), replacements);
    case ExprOp::Div:
      return subst(e.child0(), replacements) / subst(e.child1(), replacements);
    case ExprOp::Pow:
      return pow(subst(e.child0(), replacements), e.exponent());
    case ExprOp::Neg:
      return -subst(e.child0(), replacements);
    case ExprOp::Sin:
      return sin(subst(e.child0(), replacements));
    case ExprOp::Cos:
      return cos(subst(e.child0(), replacements));
    case ExprOp::Exp:
      return exp(subst(e.child0(), replacements));
    case ExprOp::Ln:
      return ln(subst(e.child0(), replacements));
  }
  throw std::logic_error("unreachable expression op");
}

void collect_vars(const Expr& e, std::set<VarId>& out) {
  switch (e.op()) {
    case ExprOp::Constant:
      return;
    case ExprOp::Variable:
      out.insert(e.var());
      return;
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Div:
      collect_vars(e.child0(), out);
      collect_vars(e.child1(), out);
      return;
    default:
      collect_vars(e.child0(), out);
      return;
  }
}

std::set<VarId> free_vars(const Expr& e) {
  std::set<VarId> out;
  collect_vars(e, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (same_node(a, b)) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case ExprOp::Constant:
      return a.constant_value() == b.constant_value();
    case ExprOp::Variable:
      return a.var() == b.var();
    case ExprOp::Pow:
      return a.exponent() == b.exponent() && structurally_equal(a.child0(), b.child0());
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Div:
      return structurally_equal(a.child0(), b.child0()) &&
             structurally_equal(a.child1(), b.child1());
    default:
      return structurally_equal(a.child0(), b.child0());
  }
}

// ---------------------------------------------------------------------------
// Randomized zero testing

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t rotl64(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

SampleRng::SampleRng(std::uint64_t seed) {
  std::uint64_t s = seed;
  for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t SampleRng::next_u64() {
  std::uint64_t result = rotl64(state_[0] + state_[3], 23) + state_[0];
  std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl64(state_[3], 45);
  return result;
}

double SampleRng::uniform(double lo, double hi) {
  double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

namespace {

Env draw_env(const SampleDomain& dom, SampleRng& rng) {
  Env env;
  for (const auto& [v, iv] : dom.intervals) env.set(v, rng.uniform(iv.lo, iv.hi));
  return env;
}

}  // namespace

ZeroCheck is_zero(const Expr& e, const SampleDomain& dom) {
  for (VarId v : free_vars(e))
    if (!dom.intervals.count(v))
      throw std::invalid_argument("sample domain has no interval for variable '" + to_string(v) +
                                  "'");
  SampleRng rng(dom.seed);
  double residual = 0.0;
  for (int s = 0; s < dom.samples; ++s) {
    int attempts = 0;
    for (;;) {
      Env env = draw_env(dom, rng);
      try {
        double v = std::fabs(eval(e, env));
        if (v > residual) residual = v;
        break;
      } catch (const EvalError& err) {
        if (++attempts > dom.retry_budget)
          throw EvalError(std::string(err.what()) + " (retry budget exhausted)");
      }
    }
  }
  return {residual <= dom.tolerance, residual};
}

double max_abs_on_samples(const std::vector<Expr>& exprs, const SampleDomain& dom) {
  double worst = 0.0;
  for (const Expr& e : exprs) worst = std::max(worst, is_zero(e, dom).residual);
  return worst;
}

}  // namespace affalg
