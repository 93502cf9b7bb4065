#pragma once

#include <functional>
#include <vector>

#include "affalg/algebroid.hpp"

namespace affalg {

// Second-order-like dynamics on the total space of an algebroid: the base flows with
// the anchor of the current fibre point while the fibre moves under a force law.
// Either a symbolic force (expressions in t, x, y) or a plain callback can drive it.
struct PseudoSode {
  AffineAlgebroid algebroid;
  std::vector<Expr> force;  // one expression per fibre coordinate, may be empty
  std::function<std::vector<double>(double t, const std::vector<double>& x,
                                    const std::vector<double>& y)>
      force_fn;  // used when force is empty

  PseudoSode(AffineAlgebroid alg, std::vector<Expr> symbolic_force);
  PseudoSode(AffineAlgebroid alg,
             std::function<std::vector<double>(double, const std::vector<double>&,
                                               const std::vector<double>&)>
                 fn);
};

struct TrajectoryPoint {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> y;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
};

// Right-hand side at a state: returns (dx/dt, dy/dt); dt/dt is identically one.
std::pair<std::vector<double>, std::vector<double>> sode_vector_field(
    const PseudoSode& sode, double t, const std::vector<double>& x, const std::vector<double>& y);

// Classical fourth-order Runge-Kutta with fixed step h from t0 to t1.  The final step is
// shortened so the trajectory ends exactly at t1.  Records every step including both ends.
Trajectory integrate(const PseudoSode& sode, double t0, double t1, double h,
                     const std::vector<double>& x0, const std::vector<double>& y0);

// How far the base velocity deviates from the anchor of the current fibre point,
// measured with central differences on the recorded trajectory (one-sided rows skipped).
// Needs at least three points.
double admissibility_residual(const PseudoSode& sode, const Trajectory& traj);

}  // namespace affalg
