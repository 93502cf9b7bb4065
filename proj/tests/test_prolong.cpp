#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "affalg/prolong.hpp"
#include "testutil.hpp"

using namespace affalg;
using namespace affalg::testing;

TEST_CASE("prolongation lays out the block structure") {
  AffineAlgebroid alg = rich_algebroid();
  const int n = alg.base_dim();
  const int k = alg.fibre_dim();
  AffineAlgebroid lifted = prolong(alg);
  CHECK(lifted.base_dim() == n + k);
  CHECK(lifted.fibre_dim() == 2 * k);

  for (int g = 1; g <= k; ++g)
    for (int a = 1; a <= k; ++a) {
      CHECK(structurally_equal(lifted.c0(g, a), alg.c0(g, a)));
      for (int b = 1; b <= k; ++b)
        CHECK(structurally_equal(lifted.c(g, a, b), alg.c(g, a, b)));
    }
  // vertical directions commute and feed nothing back
  CHECK(lifted.c(1, 1, k + 1).is_constant(0.0));
  CHECK(lifted.c(k + 1, 1, 2).is_constant(0.0));
  CHECK(lifted.c0(k + 1, 1).is_constant(0.0));
  CHECK(lifted.c0(1, k + 1).is_constant(0.0));

  for (int i = 1; i <= n; ++i) {
    CHECK(structurally_equal(lifted.lambda(i), alg.lambda(i)));
    for (int b = 1; b <= k; ++b) {
      CHECK(structurally_equal(lifted.rho(i, b), alg.rho(i, b)));
      CHECK(lifted.rho(i, k + b).is_constant(0.0));
    }
  }
  for (int j = 1; j <= k; ++j) {
    CHECK(lifted.lambda(n + j).is_constant(0.0));
    for (int b = 1; b <= k; ++b) {
      CHECK(lifted.rho(n + j, b).is_constant(0.0));
      CHECK(lifted.rho(n + j, k + b).is_constant(j == b ? 1.0 : 0.0));
    }
  }

  // the lifted domain bounds every new coordinate
  const SampleDomain& dom = lifted.domain();
  CHECK(dom.intervals.count(var_x(n + k)) == 1);
  CHECK(dom.intervals.count(var_y(2 * k)) == 1);
}

TEST_CASE("prolongation preserves validity") {
  for (const AffineAlgebroid& alg :
       {jet_algebroid(), so3_algebroid(), rich_algebroid(), nonlinear_algebroid()}) {
    AxiomReport report = prolong(alg).check_axioms();
    CAPTURE(alg.base_dim());
    CAPTURE(alg.fibre_dim());
    CHECK(report.pass);
    for (const AxiomCheck& c : report.checks) CHECK(c.residual <= 1e-9);
  }
}

TEST_CASE("prolongation inherits broken anchor data") {
  AxiomReport report = prolong(broken_anchor_algebroid()).check_axioms();
  CHECK_FALSE(report.pass);
  CHECK(report.find("anchor_compat_mixed")->residual >= 0.5);
}

TEST_CASE("prolongation inherits a broken cyclic identity") {
  AxiomReport report = prolong(broken_jacobi_algebroid()).check_axioms();
  CHECK_FALSE(report.pass);
  CHECK(report.find("jacobi_cyclic")->residual > 1e-3);
}

TEST_CASE("dynamics lift to an affine section and back without loss") {
  AffineAlgebroid alg = jet_algebroid();
  const int n = alg.base_dim();
  const int k = alg.fibre_dim();
  std::vector<Expr> force{parse("y2^2 - x1"), parse("t*y1")};
  PseudoSode sode(alg, force);
  Section s = sode_as_section(sode);
  REQUIRE(s.is_affine());
  REQUIRE(s.components.size() == static_cast<std::size_t>(2 * k));

  // horizontal part names the aliased fibre coordinates verbatim
  for (int a = 1; a <= k; ++a)
    CHECK(structurally_equal(s.components[static_cast<std::size_t>(a - 1)],
                             Expr::variable(var_x(n + a))));

  // renaming the base aliases back restores the force exactly
  std::map<VarId, Expr> back;
  for (int j = 1; j <= k; ++j) back[var_x(n + j)] = Expr::variable(var_y(j));
  for (int a = 1; a <= k; ++a)
    CHECK(structurally_equal(subst(s.components[static_cast<std::size_t>(k + a - 1)], back),
                             force[static_cast<std::size_t>(a - 1)]));
}

TEST_CASE("the lifted section's anchor is the dynamics vector field") {
  AffineAlgebroid alg = rich_algebroid();
  const int n = alg.base_dim();
  const int k = alg.fibre_dim();
  AffineAlgebroid lifted = prolong(alg);
  std::vector<Expr> force{parse("y1*y2"), parse("x1 - y2")};
  PseudoSode sode(alg, force);
  Section s = sode_as_section(sode);

  std::map<VarId, Expr> rename;
  for (int j = 1; j <= k; ++j) rename[var_y(j)] = Expr::variable(var_x(n + j));

  std::vector<Expr> coeffs = lifted.anchor_coefficients(s);
  REQUIRE(coeffs.size() == static_cast<std::size_t>(1 + n + k));
  CHECK(coeffs[0].is_constant(1.0));
  for (int i = 1; i <= n; ++i) {
    Expr expect = alg.lambda(i);
    for (int a = 1; a <= k; ++a)
      expect = expect + alg.rho(i, a) * Expr::variable(var_x(n + a));
    CHECK(is_zero(coeffs[static_cast<std::size_t>(i)] - expect, lifted.domain()).zero);
  }
  for (int j = 1; j <= k; ++j)
    CHECK(is_zero(coeffs[static_cast<std::size_t>(n + j)] -
                      subst(force[static_cast<std::size_t>(j - 1)], rename),
                  lifted.domain())
              .zero);
}

TEST_CASE("callback dynamics cannot be lifted") {
  AffineAlgebroid alg = jet_algebroid();
  PseudoSode sode(alg, [](double, const std::vector<double>&, const std::vector<double>& y) {
    return y;
  });
  CHECK_THROWS_AS(sode_as_section(sode), std::invalid_argument);
}

TEST_CASE("lifted bracket properties hold for valid data and fail for broken anchors") {
  CHECK(prolonged_bracket_check(jet_algebroid(), 4, 7).pass);
  CHECK(prolonged_bracket_check(so3_algebroid(), 4, 7).pass);
  CHECK(prolonged_bracket_check(rich_algebroid(), 3, 7).pass);

  BracketCheck broken = prolonged_bracket_check(broken_anchor_algebroid(), 4, 7);
  CHECK_FALSE(broken.pass);
  CHECK(broken.residual > 1e-3);
  CHECK_THROWS_AS(prolonged_bracket_check(jet_algebroid(), 0, 7), std::invalid_argument);
}
