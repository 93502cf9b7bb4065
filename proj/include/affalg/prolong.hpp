#pragma once

#include "affalg/dynamics.hpp"

namespace affalg {

// Lifts an algebroid to its prolongation: the fibre coordinates join the base as new
// position coordinates x^{n+1}..x^{n+k}, and the lifted fibre splits into a horizontal
// copy of the original directions followed by a vertical copy (fibre velocities).
// Horizontal basis index a sits at position a, vertical index a at position k + a.
AffineAlgebroid prolong(const AffineAlgebroid& alg);

// Rewrites a dynamics law on the original algebroid as an affine section of the
// prolongation.  The horizontal components report the current fibre point and the
// vertical ones the force, both with fibre coordinates renamed to their base aliases.
Section sode_as_section(const PseudoSode& sode);

struct BracketCheck {
  double residual = 0.0;
  bool pass = false;
};

// Property check tying the lifted bracket to its anchor image: for random sections and
// scalar multipliers it compares the derivation rule of the bracket against the
// commutator of the anchor vector fields.  Large residuals expose inconsistent
// structure data on the original algebroid.
BracketCheck prolonged_bracket_check(const AffineAlgebroid& alg, int trials, uint64_t seed);

}  // namespace affalg
