#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "affalg/dynamics.hpp"

namespace affalg {

// Raised when the fibre Hessian of a Lagrangian fails to be invertible somewhere
// on the sampled domain.  Carries the offending sample point.
struct SingularHessian : std::runtime_error {
  SingularHessian(const std::string& msg, std::vector<std::pair<VarId, double>> worst,
                  double det)
      : std::runtime_error(msg), sample(std::move(worst)), determinant(det) {}
  std::vector<std::pair<VarId, double>> sample;
  double determinant = 0.0;
};

// Second derivatives of the Lagrangian in the fibre directions, index [a-1][b-1].
std::vector<std::vector<Expr>> hessian(const AffineAlgebroid& alg, const Expr& lagrangian);

// Right-hand side of the linear system that determines the force law, one entry per
// fibre coordinate.
std::vector<Expr> lagrange_rhs(const AffineAlgebroid& alg, const Expr& lagrangian);

// Builds the dynamics generated by a regular Lagrangian.  Small fibres get a symbolic
// force via the adjugate; larger fibres solve the Hessian system numerically per state.
// Throws SingularHessian when the Hessian determinant drops below
// 1e-10 * max(1, largest Hessian entry)^k on the sample set.
PseudoSode lagrange_sode(const AffineAlgebroid& alg, const Expr& lagrangian);

// Largest violation of the evolution equation for the fibre momenta along a recorded
// trajectory, using three-point derivatives in time.  Needs at least three points.
double lagrange_residual(const AffineAlgebroid& alg, const Expr& lagrangian,
                         const Trajectory& traj);

}  // namespace affalg
