#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "affalg/lagrange.hpp"
#include "testutil.hpp"

using namespace affalg;
using namespace affalg::testing;

namespace {

AffineAlgebroid line_jet() {
  return AffineAlgebroid(1, 1, zero_c(1), zero_matrix(1, 1), {Expr()},
                         {{Expr::constant(1.0)}}, make_domain(1, 1));
}

std::vector<Expr> zero_force(int k) { return std::vector<Expr>(static_cast<std::size_t>(k)); }

double euler_energy(const std::vector<double>& y) {
  return 0.5 * (1.0 * y[0] * y[0] + 2.0 * y[1] * y[1] + 3.0 * y[2] * y[2]);
}

Expr euler_lagrangian() {
  Expr y1 = Expr::variable(var_y(1));
  Expr y2 = Expr::variable(var_y(2));
  Expr y3 = Expr::variable(var_y(3));
  return Expr::constant(0.5) * (y1 * y1 + Expr::constant(2.0) * y2 * y2 +
                                Expr::constant(3.0) * y3 * y3);
}

}  // namespace

TEST_CASE("vector field combines anchor transport with the force") {
  AffineAlgebroid alg = jet_algebroid();
  PseudoSode sode(alg, {parse("y2"), parse("-x1")});
  auto [dx, dy] = sode_vector_field(sode, 0.25, {2.0, 3.0}, {0.5, -1.5});
  CHECK(dx[0] == doctest::Approx(0.5));
  CHECK(dx[1] == doctest::Approx(-1.5));
  CHECK(dy[0] == doctest::Approx(-1.5));
  CHECK(dy[1] == doctest::Approx(-2.0));
}

TEST_CASE("force validation") {
  AffineAlgebroid alg = jet_algebroid();
  CHECK_THROWS_AS(PseudoSode(alg, {parse("y1")}), std::invalid_argument);
  CHECK_THROWS_AS(PseudoSode(alg, {parse("y3"), parse("0")}), std::invalid_argument);
  CHECK_THROWS_AS(PseudoSode(alg, {parse("p1"), parse("0")}), std::invalid_argument);
  PseudoSode sode(alg, zero_force(2));
  CHECK_THROWS_AS(sode_vector_field(sode, 0.0, {1.0}, {0.0, 0.0}), std::invalid_argument);
  PseudoSode bad(alg, [](double, const std::vector<double>&, const std::vector<double>&) {
    return std::vector<double>{1.0};
  });
  CHECK_THROWS_AS(sode_vector_field(bad, 0.0, {0.0, 0.0}, {0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("integration reproduces straight lines exactly") {
  AffineAlgebroid alg = jet_algebroid();
  PseudoSode sode(alg, zero_force(2));
  Trajectory traj = integrate(sode, 0.0, 1.0, 0.125, {1.0, -2.0}, {0.5, 0.25});
  REQUIRE(traj.points.size() == 9);
  const TrajectoryPoint& last = traj.points.back();
  CHECK(last.t == doctest::Approx(1.0));
  CHECK(last.x[0] == doctest::Approx(1.5));
  CHECK(last.x[1] == doctest::Approx(-1.75));
  CHECK(last.y[0] == doctest::Approx(0.5));
}

TEST_CASE("integration is exact on polynomial flows") {
  // base speed t + y with frozen fibre integrates to x0 + t^2/2 + y0 t
  AffineAlgebroid alg = drifting_algebroid();
  PseudoSode sode(alg, zero_force(1));
  Trajectory traj = integrate(sode, 0.0, 2.0, 0.25, {0.5}, {1.5});
  CHECK(traj.points.back().x[0] == doctest::Approx(0.5 + 2.0 + 3.0).epsilon(1e-12));
}

TEST_CASE("final step shrinks to land on the end time") {
  AffineAlgebroid alg = line_jet();
  PseudoSode sode(alg, zero_force(1));
  Trajectory traj = integrate(sode, 0.0, 0.35, 0.1, {0.0}, {1.0});
  REQUIRE(traj.points.size() == 5);
  CHECK(traj.points[3].t == doctest::Approx(0.3));
  CHECK(traj.points.back().t == 0.35);

  Trajectory exact = integrate(sode, 0.0, 0.3, 0.1, {0.0}, {1.0});
  REQUIRE(exact.points.size() == 4);
  CHECK(exact.points.back().t == 0.3);

  CHECK_THROWS_AS(integrate(sode, 0.0, 1.0, 0.0, {0.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(integrate(sode, 1.0, 0.0, 0.1, {0.0}, {1.0}), std::invalid_argument);
  Trajectory still = integrate(sode, 0.5, 0.5, 0.1, {0.0}, {1.0});
  CHECK(still.points.size() == 1);
}

TEST_CASE("admissibility residual vanishes for integrated flows and flags fakes") {
  AffineAlgebroid alg = line_jet();
  Expr L = Expr::constant(0.5) * (parse("y1^2") - parse("x1^2"));
  PseudoSode sode = lagrange_sode(alg, L);
  Trajectory traj = integrate(sode, 0.0, 1.0, 0.01, {1.0}, {0.0});
  CHECK(admissibility_residual(sode, traj) < 1e-3);

  // base coordinate frozen while the fibre claims unit speed
  Trajectory fake;
  for (int r = 0; r < 5; ++r)
    fake.points.push_back({0.1 * r, {1.0}, {1.0}});
  CHECK(admissibility_residual(sode, fake) == doctest::Approx(1.0));

  Trajectory tiny;
  tiny.points.push_back({0.0, {0.0}, {0.0}});
  tiny.points.push_back({0.1, {0.0}, {0.0}});
  CHECK_THROWS_AS(admissibility_residual(sode, tiny), std::invalid_argument);
}

TEST_CASE("admissibility residual shrinks at second order in the step") {
  AffineAlgebroid alg = line_jet();
  Expr L = Expr::constant(0.5) * (parse("y1^2") - parse("x1^2"));
  PseudoSode sode = lagrange_sode(alg, L);
  double coarse = admissibility_residual(sode, integrate(sode, 0.0, 1.0, 0.01, {1.0}, {0.0}));
  double fine = admissibility_residual(sode, integrate(sode, 0.0, 1.0, 0.005, {1.0}, {0.0}));
  CHECK(fine * 3.5 <= coarse);
}

TEST_CASE("hessian and source terms of a lagrangian") {
  AffineAlgebroid alg = line_jet();
  Expr L = Expr::constant(0.5) * (parse("y1^2") - parse("x1^2"));
  auto w = hessian(alg, L);
  REQUIRE(w.size() == 1);
  CHECK(is_zero(w[0][0] - Expr::constant(1.0), alg.domain()).zero);
  auto rhs = lagrange_rhs(alg, L);
  REQUIRE(rhs.size() == 1);
  CHECK(is_zero(rhs[0] + Expr::variable(var_x(1)), alg.domain()).zero);
  CHECK_THROWS_AS(hessian(alg, parse("p0 + y1")), std::invalid_argument);
}

TEST_CASE("rigid body force law comes out in closed form") {
  AffineAlgebroid alg = so3_algebroid();
  PseudoSode sode = lagrange_sode(alg, euler_lagrangian());
  REQUIRE(sode.force.size() == 3);
  Expr y1 = Expr::variable(var_y(1));
  Expr y2 = Expr::variable(var_y(2));
  Expr y3 = Expr::variable(var_y(3));
  CHECK(is_zero(sode.force[0] + y2 * y3, alg.domain()).zero);
  CHECK(is_zero(sode.force[1] - y3 * y1, alg.domain()).zero);
  CHECK(is_zero(sode.force[2] + Expr::constant(1.0 / 3.0) * y1 * y2, alg.domain()).zero);
}

TEST_CASE("rigid body flow conserves energy and satisfies the momentum equation") {
  AffineAlgebroid alg = so3_algebroid();
  PseudoSode sode = lagrange_sode(alg, euler_lagrangian());
  std::vector<double> y0{1.0, 0.5, -0.25};
  Trajectory traj = integrate(sode, 0.0, 1.0, 1e-3, {}, y0);
  double e0 = euler_energy(y0);
  double drift = 0.0;
  for (const TrajectoryPoint& p : traj.points)
    drift = std::max(drift, std::abs(euler_energy(p.y) - e0));
  CHECK(drift <= 1e-9);
  CHECK(lagrange_residual(alg, euler_lagrangian(), traj) <= 1e-5);
}

TEST_CASE("oscillator dynamics from a potential") {
  AffineAlgebroid alg = line_jet();
  Expr L = Expr::constant(0.5) * (parse("y1^2") - parse("x1^2"));
  PseudoSode sode = lagrange_sode(alg, L);
  REQUIRE(sode.force.size() == 1);
  CHECK(is_zero(sode.force[0] + Expr::variable(var_x(1)), alg.domain()).zero);
  Trajectory traj = integrate(sode, 0.0, 1.0, 1e-3, {1.0}, {0.0});
  CHECK(traj.points.back().x[0] == doctest::Approx(std::cos(1.0)).epsilon(1e-9));
  CHECK(traj.points.back().y[0] == doctest::Approx(-std::sin(1.0)).epsilon(1e-9));
  CHECK(lagrange_residual(alg, L, traj) <= 1e-5);
}

TEST_CASE("degenerate lagrangians are rejected with the offending sample") {
  AffineAlgebroid alg = line_jet();
  CHECK_THROWS_AS(lagrange_sode(alg, parse("y1")), SingularHessian);
  try {
    lagrange_sode(alg, parse("y1"));
    FAIL("expected SingularHessian");
  } catch (const SingularHessian& e) {
    CHECK(e.determinant == doctest::Approx(0.0));
    CHECK_FALSE(e.sample.empty());
  }

  AffineAlgebroid plane = jet_algebroid();
  CHECK_THROWS_AS(lagrange_sode(plane, parse("0.5*y1^2")), SingularHessian);
}

TEST_CASE("larger fibres fall back to a numeric force") {
  // three rotation generators extended by one central direction
  auto c = zero_c(4);
  auto set_skew = [&](int g, int a, int b, double v) {
    c[static_cast<std::size_t>(g - 1)][static_cast<std::size_t>(a - 1)]
     [static_cast<std::size_t>(b - 1)] = Expr::constant(v);
    c[static_cast<std::size_t>(g - 1)][static_cast<std::size_t>(b - 1)]
     [static_cast<std::size_t>(a - 1)] = Expr::constant(-v);
  };
  set_skew(3, 1, 2, 1.0);
  set_skew(1, 2, 3, 1.0);
  set_skew(2, 3, 1, 1.0);
  AffineAlgebroid alg(0, 4, c, zero_matrix(4, 4), {}, {}, make_domain(0, 4));
  REQUIRE(alg.check_axioms().pass);

  Expr L;
  double inertia[4] = {1.0, 2.0, 3.0, 4.0};
  for (int a = 1; a <= 4; ++a) {
    Expr ya = Expr::variable(var_y(a));
    L = L + Expr::constant(0.5 * inertia[a - 1]) * ya * ya;
  }
  PseudoSode sode = lagrange_sode(alg, L);
  CHECK(sode.force.empty());
  REQUIRE(static_cast<bool>(sode.force_fn));

  std::vector<double> y{0.7, -0.3, 0.2, 0.9};
  auto f = sode.force_fn(0.0, {}, y);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == doctest::Approx(-y[1] * y[2]));
  CHECK(f[1] == doctest::Approx(y[2] * y[0]));
  CHECK(f[2] == doctest::Approx(-y[0] * y[1] / 3.0));
  CHECK(f[3] == doctest::Approx(0.0));
}
