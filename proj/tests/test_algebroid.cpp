#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "affalg/algebroid.hpp"
#include "testutil.hpp"

using namespace affalg;
using namespace affalg::testing;

namespace {

double component_residual(const AffineAlgebroid& alg, const std::vector<Expr>& exprs) {
  return max_abs_on_samples(exprs, alg.domain());
}

bool components_vanish(const AffineAlgebroid& alg, const Section& s) {
  return component_residual(alg, s.components) <= alg.domain().tolerance;
}

}  // namespace

TEST_CASE("construction rejects non-skew structure functions") {
  int n = 0, k = 2;
  auto c = zero_c(k);
  c[0][0][1] = Expr::constant(1.0);
  c[0][1][0] = Expr::constant(1.0);  // symmetric, not skew
  CHECK_THROWS_AS(AffineAlgebroid(n, k, c, zero_matrix(k, k), {}, {}, make_domain(n, k)),
                  std::invalid_argument);
  c[0][1][0] = Expr::constant(-1.0);
  CHECK_NOTHROW(AffineAlgebroid(n, k, c, zero_matrix(k, k), {}, {}, make_domain(n, k)));

  auto diag = zero_c(k);
  diag[1][0][0] = Expr::constant(1.0);  // nonzero diagonal entry
  CHECK_THROWS_AS(AffineAlgebroid(n, k, diag, zero_matrix(k, k), {}, {}, make_domain(n, k)),
                  std::invalid_argument);
}

TEST_CASE("antisymmetrize policy projects out the symmetric part") {
  int n = 0, k = 2;
  auto c = zero_c(k);
  c[0][0][1] = Expr::constant(3.0);
  c[0][1][0] = Expr::constant(1.0);
  AffineAlgebroid alg(n, k, c, zero_matrix(k, k), {}, {}, make_domain(n, k),
                      AffineAlgebroid::SkewPolicy::Antisymmetrize);
  CHECK(eval(alg.c(1, 1, 2), Env()) == doctest::Approx(1.0));
  CHECK(eval(alg.c(1, 2, 1), Env()) == doctest::Approx(-1.0));
}

TEST_CASE("construction rejects fibre variables in structure data") {
  int n = 1, k = 1;
  auto rho = zero_matrix(n, k);
  rho[0][0] = Expr::variable(var_y(1));
  CHECK_THROWS_AS(
      AffineAlgebroid(n, k, zero_c(k), zero_matrix(k, k), std::vector<Expr>(n), rho,
                      make_domain(n, k)),
      std::invalid_argument);

  auto rho2 = zero_matrix(n, k);
  rho2[0][0] = Expr::variable(var_x(2));  // out of range for n = 1
  CHECK_THROWS_AS(
      AffineAlgebroid(n, k, zero_c(k), zero_matrix(k, k), std::vector<Expr>(n), rho2,
                      make_domain(n, k)),
      std::invalid_argument);
}

TEST_CASE("valid example data passes the axiom checks") {
  for (const AffineAlgebroid& alg :
       {jet_algebroid(), so3_algebroid(), scaled_rotation_algebroid(), nonlinear_algebroid(),
        drifting_algebroid(), rich_algebroid()}) {
    AxiomReport report = alg.check_axioms();
    CAPTURE(alg.base_dim());
    CAPTURE(alg.fibre_dim());
    for (const auto& check : report.checks) {
      CAPTURE(check.name);
      CHECK(check.residual <= 1e-9);
    }
    CHECK(report.pass);
  }
}

TEST_CASE("time-dependent anchor breaks only the mixed compatibility") {
  AxiomReport report = broken_anchor_algebroid().check_axioms();
  CHECK_FALSE(report.pass);
  CHECK(report.find("anchor_compat_mixed")->residual >= 0.5);
  CHECK(report.find("anchor_compat_vector")->pass);
  CHECK(report.find("jacobi_mixed")->pass);
  CHECK(report.find("jacobi_cyclic")->pass);
}

TEST_CASE("sheared rotation constants break only the cyclic Jacobi identity") {
  AxiomReport report = broken_jacobi_algebroid().check_axioms();
  CHECK_FALSE(report.pass);
  CHECK(report.find("jacobi_cyclic")->residual > 0.5);
  CHECK(report.find("anchor_compat_mixed")->pass);
  CHECK(report.find("anchor_compat_vector")->pass);
  CHECK(report.find("jacobi_mixed")->pass);
}

TEST_CASE("basis brackets reproduce the structure functions") {
  AffineAlgebroid alg = rich_algebroid();
  int k = alg.fibre_dim();
  for (int a = 1; a <= k; ++a) {
    Section mixed = alg.bracket(e0_section(k), basis_section(k, a));
    for (int g = 1; g <= k; ++g)
      CHECK(is_zero(mixed.components[g - 1] - alg.c0(g, a), alg.domain()).zero);
    for (int b = 1; b <= k; ++b) {
      Section vv = alg.bracket(basis_section(k, a), basis_section(k, b));
      for (int g = 1; g <= k; ++g)
        CHECK(is_zero(vv.components[g - 1] - alg.c(g, a, b), alg.domain()).zero);
    }
  }
}

TEST_CASE("brackets are antisymmetric for every kind combination") {
  AffineAlgebroid alg = rich_algebroid();
  SampleRng rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    Section z1 = random_section(rng, alg, Section::Kind::Affine);
    Section z2 = random_section(rng, alg, Section::Kind::Affine);
    Section v1 = random_section(rng, alg, Section::Kind::Vector);
    Section v2 = random_section(rng, alg, Section::Kind::Vector);
    CHECK(components_vanish(alg, add(alg.bracket(z1, z2), alg.bracket(z2, z1))));
    CHECK(components_vanish(alg, add(alg.bracket(z1, v1), alg.bracket(v1, z1))));
    CHECK(components_vanish(alg, add(alg.bracket(v1, v2), alg.bracket(v2, v1))));
  }
}

TEST_CASE("bracket is additive in a vector slot") {
  AffineAlgebroid alg = rich_algebroid();
  SampleRng rng(12);
  Section z = random_section(rng, alg, Section::Kind::Affine);
  Section v1 = random_section(rng, alg, Section::Kind::Vector);
  Section v2 = random_section(rng, alg, Section::Kind::Vector);
  Section lhs = alg.bracket(z, add(v1, v2));
  Section rhs = add(alg.bracket(z, v1), alg.bracket(z, v2));
  CHECK(components_vanish(alg, difference(lhs, rhs)));

  // shifting an affine argument by a vector adds the vector bracket
  Section z2 = random_section(rng, alg, Section::Kind::Affine);
  Section shifted = alg.bracket(z, add(z2, v1));
  Section expected = add(alg.bracket(z, z2), alg.bracket(z, v1));
  CHECK(components_vanish(alg, difference(shifted, expected)));
}

TEST_CASE("bracket satisfies the Leibniz rule in the vector slot") {
  AffineAlgebroid alg = rich_algebroid();
  SampleRng rng(13);
  Section z = random_section(rng, alg, Section::Kind::Affine);
  Section v = random_section(rng, alg, Section::Kind::Vector);
  Expr f = random_poly(rng, base_vars(alg));
  Section lhs = alg.bracket(z, scale(f, v));
  Section rhs = add(scale(f, alg.bracket(z, v)), scale(alg.anchor_apply(z, f), v));
  CHECK(components_vanish(alg, difference(lhs, rhs)));
}

TEST_CASE("cyclic Jacobi sum vanishes exactly when the axioms hold") {
  SampleRng rng(14);
  auto jacobiator = [](const AffineAlgebroid& alg, SampleRng& r) {
    Section z1 = random_section(r, alg, Section::Kind::Affine);
    Section z2 = random_section(r, alg, Section::Kind::Affine);
    Section z3 = random_section(r, alg, Section::Kind::Affine);
    Section sum = add(add(alg.bracket(alg.bracket(z1, z2), z3),
                          alg.bracket(alg.bracket(z2, z3), z1)),
                      alg.bracket(alg.bracket(z3, z1), z2));
    return max_abs_on_samples(sum.components, alg.domain());
  };
  for (const AffineAlgebroid& alg : {jet_algebroid(), so3_algebroid(), rich_algebroid()})
    for (int trial = 0; trial < 4; ++trial) CHECK(jacobiator(alg, rng) <= 1e-9);

  AffineAlgebroid broken = broken_jacobi_algebroid();
  double worst = 0.0;
  for (int trial = 0; trial < 4; ++trial) worst = std::max(worst, jacobiator(broken, rng));
  CHECK(worst > 1e-3);
}

TEST_CASE("anchor coefficients are affine in the section") {
  AffineAlgebroid alg = rich_algebroid();
  SampleRng rng(15);
  Section z = random_section(rng, alg, Section::Kind::Affine);
  Section v = random_section(rng, alg, Section::Kind::Vector);
  auto lhs = alg.anchor_coefficients(add(z, v));
  auto az = alg.anchor_coefficients(z);
  auto av = alg.anchor_coefficients(v);
  for (std::size_t m = 0; m < lhs.size(); ++m)
    CHECK(is_zero(lhs[m] - az[m] - av[m], alg.domain()).zero);
}

TEST_CASE("anchor homomorphism defect detects the broken anchor") {
  SampleRng rng(16);
  for (const AffineAlgebroid& alg : {jet_algebroid(), rich_algebroid(), nonlinear_algebroid()}) {
    Section z1 = random_section(rng, alg, Section::Kind::Affine);
    Section z2 = random_section(rng, alg, Section::Kind::Affine);
    CHECK(component_residual(alg, alg.anchor_mismatch(z1, z2)) <= 1e-9);
  }
  AffineAlgebroid broken = broken_anchor_algebroid();
  Section e0 = e0_section(broken.fibre_dim());
  Section e1 = basis_section(broken.fibre_dim(), 1);
  CHECK(component_residual(broken, broken.anchor_mismatch(e0, e1)) >= 0.5);
}

TEST_CASE("identity fibre transform returns identical structure data") {
  AffineAlgebroid alg = rich_algebroid();
  int k = alg.fibre_dim();
  std::vector<std::vector<Expr>> identity = zero_matrix(k, k);
  for (int a = 0; a < k; ++a) identity[a][a] = Expr::constant(1.0);
  std::vector<Expr> no_shift(static_cast<std::size_t>(k));
  AffineAlgebroid moved = alg.transform_fibre(identity, no_shift, identity);
  for (int g = 1; g <= k; ++g)
    for (int a = 1; a <= k; ++a) {
      CHECK(structurally_equal(moved.c0(g, a), alg.c0(g, a)));
      for (int b = 1; b <= k; ++b) CHECK(structurally_equal(moved.c(g, a, b), alg.c(g, a, b)));
    }
  for (int i = 1; i <= alg.base_dim(); ++i) {
    CHECK(structurally_equal(moved.lambda(i), alg.lambda(i)));
    for (int a = 1; a <= k; ++a) CHECK(structurally_equal(moved.rho(i, a), alg.rho(i, a)));
  }
}

TEST_CASE("fibre transforms preserve validity") {
  AffineAlgebroid jet = jet_algebroid();
  Expr one = Expr::constant(1.0);
  Expr t = Expr::variable(var_t());
  Expr x1 = Expr::variable(var_x(1));
  Expr x2 = Expr::variable(var_x(2));
  // unipotent with polynomial entries, so the inverse is exact
  std::vector<std::vector<Expr>> a_mat{{one, t * x2}, {Expr(), one}};
  std::vector<std::vector<Expr>> a_inv{{one, -(t * x2)}, {Expr(), one}};
  std::vector<Expr> b_shift{x1 * x2, -x1};
  AffineAlgebroid moved = jet.transform_fibre(a_mat, b_shift, a_inv);
  CHECK(moved.check_axioms().pass);

  // a wrong inverse is rejected
  std::vector<std::vector<Expr>> bad_inv{{one, t * x2}, {Expr(), one}};
  CHECK_THROWS_AS(jet.transform_fibre(a_mat, b_shift, bad_inv), std::invalid_argument);
}

TEST_CASE("base transforms preserve validity and reject bad inverses") {
  AffineAlgebroid alg = rich_algebroid();
  Expr x1 = Expr::variable(var_x(1));
  Expr x2 = Expr::variable(var_x(2));
  // shear x1' = x1 + x2^2, x2' = x2
  std::vector<Expr> fwd{x1 + pow(x2, 2), x2};
  std::vector<Expr> bwd{x1 - pow(x2, 2), x2};
  AffineAlgebroid moved = alg.transform_base(fwd, bwd);
  CHECK(moved.check_axioms().pass);

  std::vector<Expr> wrong{x1 + pow(x2, 2), x2};
  CHECK_THROWS_AS(alg.transform_base(fwd, wrong), std::invalid_argument);
}

TEST_CASE("base transform of the trivial jet reproduces known anchor data") {
  // x1' = x1 + t shifts lambda by the time derivative of the change
  AffineAlgebroid alg = nonlinear_algebroid();
  Expr x1 = Expr::variable(var_x(1));
  Expr t = Expr::variable(var_t());
  AffineAlgebroid moved = alg.transform_base({x1 + t}, {x1 - t});
  CHECK(is_zero(moved.lambda(1) - Expr::constant(1.0), moved.domain()).zero);
  // rho' = 1 + (x1' - t)^2 after substitution
  Expr expected = Expr::constant(1.0) + pow(x1 - t, 2);
  CHECK(is_zero(moved.rho(1, 1) - expected, moved.domain()).zero);
  CHECK(moved.check_axioms().pass);
}

TEST_CASE("section kind mismatches are rejected") {
  AffineAlgebroid alg = jet_algebroid();
  Section z = e0_section(alg.fibre_dim());
  Section v = basis_section(alg.fibre_dim(), 1);
  CHECK_THROWS_AS(add(z, z), std::invalid_argument);
  CHECK_THROWS_AS(difference(v, z), std::invalid_argument);
  CHECK_THROWS_AS(scale(Expr::constant(2.0), z), std::invalid_argument);
  Section wrong = Section::vector({Expr::constant(1.0)});
  CHECK_THROWS_AS(alg.bracket(z, wrong), std::invalid_argument);
}
