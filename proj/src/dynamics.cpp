#include "affalg/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace affalg {

namespace {

void check_state_sizes(const AffineAlgebroid& alg, const std::vector<double>& x,
                       const std::vector<double>& y) {
  if (x.size() != static_cast<std::size_t>(alg.base_dim()))
    throw std::invalid_argument("base point has wrong dimension");
  if (y.size() != static_cast<std::size_t>(alg.fibre_dim()))
    throw std::invalid_argument("fibre point has wrong dimension");
}

Env state_env(double t, const std::vector<double>& x, const std::vector<double>& y) {
  Env env;
  env.set(var_t(), t);
  for (std::size_t i = 0; i < x.size(); ++i) env.set(var_x(static_cast<int>(i) + 1), x[i]);
  for (std::size_t a = 0; a < y.size(); ++a) env.set(var_y(static_cast<int>(a) + 1), y[a]);
  return env;
}

}  // namespace

PseudoSode::PseudoSode(AffineAlgebroid alg, std::vector<Expr> symbolic_force)
    : algebroid(std::move(alg)), force(std::move(symbolic_force)) {
  if (force.size() != static_cast<std::size_t>(algebroid.fibre_dim()))
    throw std::invalid_argument("force must have one component per fibre coordinate");
  for (const Expr& f : force)
    for (VarId v : free_vars(f)) {
      bool ok = v.kind == VarKind::T ||
                (v.kind == VarKind::X && v.index <= algebroid.base_dim()) ||
                (v.kind == VarKind::Y && v.index <= algebroid.fibre_dim());
      if (!ok) throw std::invalid_argument("force may only use t, base and fibre coordinates");
    }
}

PseudoSode::PseudoSode(AffineAlgebroid alg,
                       std::function<std::vector<double>(double, const std::vector<double>&,
                                                         const std::vector<double>&)>
                           fn)
    : algebroid(std::move(alg)), force_fn(std::move(fn)) {
  if (!force_fn) throw std::invalid_argument("force callback must not be empty");
}

std::pair<std::vector<double>, std::vector<double>> sode_vector_field(
    const PseudoSode& sode, double t, const std::vector<double>& x, const std::vector<double>& y) {
  const AffineAlgebroid& alg = sode.algebroid;
  check_state_sizes(alg, x, y);
  Env env = state_env(t, x, y);

  std::vector<double> dx(x.size(), 0.0);
  for (int i = 1; i <= alg.base_dim(); ++i) {
    double v = eval(alg.lambda(i), env);
    for (int a = 1; a <= alg.fibre_dim(); ++a)
      v += eval(alg.rho(i, a), env) * y[static_cast<std::size_t>(a - 1)];
    dx[static_cast<std::size_t>(i - 1)] = v;
  }

  std::vector<double> dy;
  if (!sode.force.empty()) {
    dy.reserve(sode.force.size());
    for (const Expr& f : sode.force) dy.push_back(eval(f, env));
  } else {
    dy = sode.force_fn(t, x, y);
    if (dy.size() != y.size())
      throw std::invalid_argument("force callback returned wrong number of components");
  }
  return {std::move(dx), std::move(dy)};
}

Trajectory integrate(const PseudoSode& sode, double t0, double t1, double h,
                     const std::vector<double>& x0, const std::vector<double>& y0) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  if (t1 < t0) throw std::invalid_argument("integration interval is reversed");
  check_state_sizes(sode.algebroid, x0, y0);

  Trajectory traj;
  std::vector<double> x = x0;
  std::vector<double> y = y0;
  traj.points.push_back({t0, x, y});
  if (t1 == t0) return traj;

  const std::size_t nx = x.size();
  const std::size_t ny = y.size();
  auto axpy = [](const std::vector<double>& base, double c, const std::vector<double>& d) {
    std::vector<double> out(base.size());
    for (std::size_t q = 0; q < base.size(); ++q) out[q] = base[q] + c * d[q];
    return out;
  };

  const double span = t1 - t0;
  long steps_taken = 0;
  double t = t0;
  while (t < t1) {
    // keep full steps on the exact grid t0 + m*h; only the last step may shrink
    double next = t0 + static_cast<double>(steps_taken + 1) * h;
    double step = next < t1 - 1e-12 * std::max(1.0, std::abs(span)) ? next - t : t1 - t;

    auto [k1x, k1y] = sode_vector_field(sode, t, x, y);
    auto [k2x, k2y] =
        sode_vector_field(sode, t + step / 2, axpy(x, step / 2, k1x), axpy(y, step / 2, k1y));
    auto [k3x, k3y] =
        sode_vector_field(sode, t + step / 2, axpy(x, step / 2, k2x), axpy(y, step / 2, k2y));
    auto [k4x, k4y] = sode_vector_field(sode, t + step, axpy(x, step, k3x), axpy(y, step, k3y));

    for (std::size_t q = 0; q < nx; ++q)
      x[q] += step / 6.0 * (k1x[q] + 2.0 * k2x[q] + 2.0 * k3x[q] + k4x[q]);
    for (std::size_t q = 0; q < ny; ++q)
      y[q] += step / 6.0 * (k1y[q] + 2.0 * k2y[q] + 2.0 * k3y[q] + k4y[q]);

    ++steps_taken;
    double planned = t0 + static_cast<double>(steps_taken) * h;
    t = planned < t1 ? planned : t1;
    traj.points.push_back({t, x, y});
  }
  return traj;
}

double admissibility_residual(const PseudoSode& sode, const Trajectory& traj) {
  const std::size_t m = traj.points.size();
  if (m < 3) throw std::invalid_argument("need at least three trajectory points");
  const AffineAlgebroid& alg = sode.algebroid;

  double worst = 0.0;
  for (std::size_t r = 1; r + 1 < m; ++r) {
    const TrajectoryPoint& pm = traj.points[r - 1];
    const TrajectoryPoint& p0 = traj.points[r];
    const TrajectoryPoint& pp = traj.points[r + 1];
    double ta = pm.t - p0.t;
    double tb = pp.t - p0.t;
    if (ta == 0.0 || tb == 0.0 || ta == tb)
      throw std::invalid_argument("trajectory times must be strictly increasing");

    Env env = state_env(p0.t, p0.x, p0.y);
    for (int i = 1; i <= alg.base_dim(); ++i) {
      // derivative of the quadratic through the three samples, exact on nonuniform grids
      double xm = pm.x[static_cast<std::size_t>(i - 1)];
      double x0 = p0.x[static_cast<std::size_t>(i - 1)];
      double xp = pp.x[static_cast<std::size_t>(i - 1)];
      double deriv = -xm * tb / (ta * (ta - tb)) - x0 * (ta + tb) / (ta * tb) -
                     xp * ta / (tb * (tb - ta));

      double anchor = eval(alg.lambda(i), env);
      for (int a = 1; a <= alg.fibre_dim(); ++a)
        anchor += eval(alg.rho(i, a), env) * p0.y[static_cast<std::size_t>(a - 1)];
      worst = std::max(worst, std::abs(deriv - anchor));
    }
  }
  return worst;
}

}  // namespace affalg
