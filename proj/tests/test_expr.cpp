#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "affalg/expr.hpp"

using namespace affalg;

namespace {

Env env_of(std::initializer_list<std::pair<VarId, double>> vals) {
  Env env;
  for (const auto& [v, x] : vals) env.set(v, x);
  return env;
}

SampleDomain unit_box(std::initializer_list<VarId> vars) {
  SampleDomain dom;
  for (VarId v : vars) dom.intervals[v] = {-1.0, 1.0};
  return dom;
}

}  // namespace

TEST_CASE("parse and evaluate basic arithmetic") {
  Expr e = parse("t + x1*y2");
  Env env = env_of({{var_t(), 1.0}, {var_x(1), 2.0}, {var_y(2), 3.0}});
  CHECK(eval(e, env) == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("operator precedence and associativity") {
  Env env = env_of({{var_x(1), 2.0}});
  CHECK(eval(parse("1 - 2 - 3"), env) == doctest::Approx(-4.0));
  CHECK(eval(parse("12 / 2 / 3"), env) == doctest::Approx(2.0));
  CHECK(eval(parse("2 + 3 * 4"), env) == doctest::Approx(14.0));
  CHECK(eval(parse("(2 + 3) * 4"), env) == doctest::Approx(20.0));
  CHECK(eval(parse("2*x1^3"), env) == doctest::Approx(16.0));
  CHECK(eval(parse("x1^-2"), env) == doctest::Approx(0.25));
  // the unary minus binds inside the atom, before the exponent
  CHECK(eval(parse("-x1^2"), env) == doctest::Approx(4.0));
  CHECK(eval(parse("-(x1^2)"), env) == doctest::Approx(-4.0));
  CHECK(eval(parse("2e2 + 0.5"), env) == doctest::Approx(200.5));
}

TEST_CASE("parse errors carry byte offsets") {
  CHECK_THROWS_AS(parse("x1 +"), ParseError);
  try {
    parse("x1 +");
  } catch (const ParseError& err) {
    CHECK(err.offset == 4);
  }
  try {
    parse("x1 + foo");
  } catch (const ParseError& err) {
    CHECK(err.offset == 5);
    CHECK(std::string(err.what()).find("foo") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("sin x1"), ParseError);
  CHECK_THROWS_AS(parse("(x1"), ParseError);
  CHECK_THROWS_AS(parse("x1 y2"), ParseError);
  CHECK_THROWS_AS(parse("x0"), ParseError);    // indices are 1-based
  CHECK_THROWS_AS(parse("x"), ParseError);
  CHECK_THROWS_AS(parse("x1^x2"), ParseError);  // exponent must be an integer literal
  CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("momentum variables parse") {
  Expr e = parse("p0 + p2^2");
  Env env = env_of({{var_p0(), 1.5}, {var_p(2), 3.0}});
  CHECK(eval(e, env) == doctest::Approx(10.5));
}

TEST_CASE("differentiation") {
  VarId t = var_t();
  Expr e = pow(Expr::variable(t), 2);
  Expr d = diff(e, t);
  Env env = env_of({{t, 3.0}});
  CHECK(eval(d, env) == doctest::Approx(6.0));

  // d/dx1 of sin(x1*x2) = cos(x1*x2)*x2
  Expr s = parse("sin(x1*x2)");
  Expr ds = diff(s, var_x(1));
  Env env2 = env_of({{var_x(1), 0.7}, {var_x(2), -1.3}});
  CHECK(eval(ds, env2) == doctest::Approx(std::cos(0.7 * -1.3) * -1.3));

  // quotient and log rules
  Expr q = parse("x1/x2");
  CHECK(eval(diff(q, var_x(2)), env2) == doctest::Approx(-0.7 / (1.3 * 1.3)));
  Expr l = parse("ln(x1)");
  CHECK(eval(diff(l, var_x(1)), env2) == doctest::Approx(1.0 / 0.7));

  // derivative w.r.t. an absent variable folds to the literal 0
  CHECK(diff(parse("x1*x2"), var_y(1)).is_constant(0.0));
}

TEST_CASE("evaluation errors") {
  CHECK_THROWS_AS(eval(parse("1/x1"), env_of({{var_x(1), 0.0}})), EvalError);
  CHECK_THROWS_AS(eval(parse("ln(x1)"), env_of({{var_x(1), -2.0}})), EvalError);
  CHECK_THROWS_AS(eval(parse("x1 + y1"), env_of({{var_x(1), 1.0}})), EvalError);
  CHECK_THROWS_AS(eval(parse("x1^-1"), env_of({{var_x(1), 0.0}})), EvalError);
}

TEST_CASE("randomized zero test accepts trig identity") {
  Expr e = parse("sin(t)^2 + cos(t)^2 - 1");
  SampleDomain dom = unit_box({var_t()});
  auto r = is_zero(e, dom);
  CHECK(r.zero);
  CHECK(r.residual <= 1e-12);
}

TEST_CASE("randomized zero test rejects near-zero but nonzero expression") {
  Expr e = parse("0.001 * x1");
  SampleDomain dom = unit_box({var_x(1)});
  auto r = is_zero(e, dom);
  CHECK_FALSE(r.zero);
  CHECK(r.residual > 1e-5);
}

TEST_CASE("zero test is deterministic in the seed") {
  Expr e = parse("x1*x2 + sin(t)");
  SampleDomain dom = unit_box({var_t(), var_x(1), var_x(2)});
  double r1 = is_zero(e, dom).residual;
  double r2 = is_zero(e, dom).residual;
  CHECK(r1 == r2);
  dom.seed = 7;
  double r3 = is_zero(e, dom).residual;
  CHECK(r3 != r1);  // different seed, different sample set
}

TEST_CASE("zero test draws the same points for different expressions") {
  // x1 and (x1 + x2) - x2 share sample points, so residuals agree exactly
  SampleDomain dom = unit_box({var_x(1), var_x(2)});
  double ra = is_zero(parse("x1"), dom).residual;
  double rb = is_zero(parse("(x1 + x2) - x2"), dom).residual;
  CHECK(ra == doctest::Approx(rb).epsilon(1e-12));
}

TEST_CASE("zero test requires intervals for all free variables") {
  SampleDomain dom = unit_box({var_x(1)});
  CHECK_THROWS_AS(is_zero(parse("x1 + x2"), dom), std::invalid_argument);
}

TEST_CASE("zero test retries sampling across singularities") {
  // 1/x1 has a pole at 0; drawn points avoid it almost surely, and the
  // expression is genuinely nonzero
  SampleDomain dom = unit_box({var_x(1)});
  auto r = is_zero(parse("1/x1"), dom);
  CHECK_FALSE(r.zero);
}

TEST_CASE("print parse round trip preserves evaluation") {
  const char* cases[] = {
      "t + x1*y2",
      "1 - 2 - x1",
      "x1/(x2 + 3)",
      "-(x1^2) + sin(x2)*cos(t)",
      "exp(x1) - ln(x2 + 5)",
      "(x1 + x2)^3",
      "2.5*x1^-2",
      "-x1",
      "x1 - -3",
  };
  SampleDomain dom = unit_box({var_t(), var_x(1), var_x(2), var_y(2)});
  dom.intervals[var_x(2)] = {0.5, 2.0};  // keep ln and the pole away from 0
  for (const char* text : cases) {
    CAPTURE(text);
    Expr e = parse(text);
    Expr back = parse(to_string(e));
    auto r = is_zero(e - back, dom);
    CHECK(r.zero);
  }
}

TEST_CASE("round trip of generated trees") {
  // structure built through factories, including shapes the printer must
  // parenthesize to keep: (-x)^2, nested negation, right-nested subtraction
  Expr x = Expr::variable(var_x(1));
  Expr y = Expr::variable(var_x(2));
  std::vector<Expr> cases = {
      pow(-x, 2) - x,
      x - (y - Expr::constant(1.0)),
      -(x * y),
      pow(x + y, 3) / (x - y + Expr::constant(10.0)),
      Expr::constant(0.1) + Expr::constant(0.2) * x,
  };
  SampleDomain dom = unit_box({var_x(1), var_x(2)});
  for (const Expr& e : cases) {
    CAPTURE(to_string(e));
    Expr back = parse(to_string(e));
    CHECK(is_zero(e - back, dom).zero);
  }
}

TEST_CASE("constant folding and identity absorption") {
  Expr x = Expr::variable(var_x(1));
  CHECK((Expr::constant(2.0) + Expr::constant(3.0)).is_constant(5.0));
  CHECK((x * Expr::constant(0.0)).is_constant(0.0));
  CHECK(structurally_equal(x + Expr::constant(0.0), x));
  CHECK(structurally_equal(x * Expr::constant(1.0), x));
  CHECK((x - x).is_constant(0.0));
  CHECK(pow(x, 0).is_constant(1.0));
  CHECK(structurally_equal(pow(x, 1), x));
  CHECK(structurally_equal(-(-x), x));
  // division by the constant 0 is preserved, not folded
  Expr bad = Expr::constant(1.0) / Expr::constant(0.0);
  CHECK(bad.op() == ExprOp::Div);
}

TEST_CASE("substitution") {
  Expr e = parse("y1^2 + x1*y2");
  std::map<VarId, Expr> repl;
  repl[var_y(1)] = parse("x2 + 1");
  repl[var_y(2)] = parse("x1");
  Expr s = subst(e, repl);
  CHECK(free_vars(s).count(var_y(1)) == 0);
  CHECK(free_vars(s).count(var_y(2)) == 0);
  Env env = env_of({{var_x(1), 2.0}, {var_x(2), 3.0}});
  CHECK(eval(s, env) == doctest::Approx(16.0 + 4.0));
}

TEST_CASE("free variable collection") {
  auto vars = free_vars(parse("t + x2*sin(y1) + p0"));
  CHECK(vars.size() == 4);
  CHECK(vars.count(var_t()) == 1);
  CHECK(vars.count(var_x(2)) == 1);
  CHECK(vars.count(var_y(1)) == 1);
  CHECK(vars.count(var_p0()) == 1);
}
