#pragma once

#include <functional>
#include <vector>

#include "affalg/form.hpp"

namespace affalg {

// A form seen purely through its evaluations: degree plus an evaluator over
// sections of either kind.  This is what lets the evaluative differential be
// iterated without reference to coefficient tables.
struct FormFunc {
  int degree{0};
  std::function<Expr(const std::vector<Section>&)> eval;
};

FormFunc as_func(const AffineAlgebroid& alg, const Form& w);

// Evaluative exterior derivative: alternating anchor derivatives of the
// evaluations plus alternating bracket insertions.  Vector arguments are
// resolved by the difference of two affine evaluations against e0, so the
// result can be fed back into d_eval.
FormFunc d_eval(const AffineAlgebroid& alg, FormFunc w);

struct D2Defect {
  Expr lhs;  // d_eval applied twice, evaluated on the arguments
  Expr rhs;  // anchor-mismatch double sum plus cyclic-Jacobiator triple sum
};

// The two sides agree for any skew structure data with the derivation
// property, whether or not the compatibility and Jacobi identities hold;
// on a valid algebroid both vanish.  Arguments must be affine sections,
// degree + 2 of them.
D2Defect d2_defect(const AffineAlgebroid& alg, const Form& w, const std::vector<Section>& args);

}  // namespace affalg
