#pragma once

#include "affalg/algebroid.hpp"

namespace affalg {

// Linear bracket on functions of time, base point and momenta (t, x^i, p0, p_a).
// Structure data of the algebroid fixes the brackets of the coordinates; everything
// else follows from skewness and the derivation rule in each slot.
class PoissonSpace {
 public:
  explicit PoissonSpace(AffineAlgebroid alg, Interval momentum_bounds = {-1.0, 1.0});

  const AffineAlgebroid& algebroid() const { return alg_; }

  // bracket of two coordinate variables; throws on fibre variables
  Expr coordinate_bracket(VarId u, VarId v) const;

  // bracket of two functions of (t, x, p0, p), extended as a derivation in each slot
  Expr bracket(const Expr& f, const Expr& g) const;

  // momentum pairing of a section: affine sections pick up the distinguished momentum
  Expr hat(const Section& s) const;

  // sampling domain over (t, x, p0, p); fibre intervals are replaced by momentum bounds
  const SampleDomain& phase_domain() const { return phase_; }

  // worst cyclic-sum residual of the bracket over random polynomial triples
  double jacobi_residual(int trials, uint64_t seed) const;

  // worst cyclic-sum residual over every triple of phase coordinates
  double coordinate_jacobi_residual() const;

 private:
  AffineAlgebroid alg_;
  SampleDomain phase_;
};

}  // namespace affalg
