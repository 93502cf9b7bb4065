#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "affalg/algebroid.hpp"
#include "affalg/expr.hpp"

namespace affalg {

// Strictly ascending list of fibre indices in 1..k.
using MultiIndex = std::vector<int>;

struct CanonicalIndex {
  int sign{1};  // 0 when an index repeats
  MultiIndex idx;
};

CanonicalIndex canonicalize(MultiIndex idx);

// Merge two ascending disjoint index lists; the sign is the parity of the
// shuffle interleaving them.  Empty result when the lists share an index.
std::optional<std::pair<int, MultiIndex>> merge_disjoint(const MultiIndex& a,
                                                         const MultiIndex& b);

// Degree-K form on sections, stored as two skew coefficient tables over
// ascending multi-indices:
//   zero_table    keys of size K-1, the e0-slot coefficients
//   vector_table  keys of size K, the purely linear coefficients
// A degree-0 form is a single vector_table entry with the empty key.
// Coefficients are Exprs over the base coordinates (t, x).  Degrees above
// k+1 are representable only as the zero form.
class Form {
 public:
  Form(int fibre_dim, int degree);

  static Form function(int fibre_dim, const Expr& f);  // degree 0
  static Form e0(int fibre_dim);                       // the canonical 1-form
  static Form basis(int fibre_dim, int alpha);         // dual of e_alpha

  int degree() const { return degree_; }
  int fibre_dim() const { return k_; }
  bool is_zero_form() const { return zero_.empty() && vector_.empty(); }

  // Assign one coefficient; the index is canonicalized and the sign applied.
  // Repeated indices are rejected, literal zeros erase the entry.
  void set_zero_part(const MultiIndex& idx, const Expr& value);
  void set_vector_part(const MultiIndex& idx, const Expr& value);

  // Signed lookup for any index order; absent and repeated-index lookups
  // return the literal 0.
  Expr zero_part(const MultiIndex& idx) const;
  Expr vector_part(const MultiIndex& idx) const;

  const std::map<MultiIndex, Expr>& zero_table() const { return zero_; }
  const std::map<MultiIndex, Expr>& vector_table() const { return vector_; }

  // Accumulate into a table; used by the form algebra.
  void bump_zero(const MultiIndex& idx, const Expr& delta);
  void bump_vector(const MultiIndex& idx, const Expr& delta);

 private:
  int k_;
  int degree_;
  std::map<MultiIndex, Expr> zero_;
  std::map<MultiIndex, Expr> vector_;

  void check_index(const MultiIndex& idx, int size) const;
};

// Views of the two coefficient tables of a form.
struct FormDecomposition {
  const std::map<MultiIndex, Expr>& zero_part;
  const std::map<MultiIndex, Expr>& vector_part;
};

FormDecomposition decompose(const Form& w);

Form add(const Form& a, const Form& b);
Form scale(const Expr& f, const Form& w);

// Graded wedge; a degree sum above k+1 yields the zero form of that degree.
Form wedge(const Form& a, const Form& b);

// Contraction in the first slot.  Affine sections also pick up the e0-slot
// coefficients; degree-0 contraction is an error.
Form contract(const AffineAlgebroid& alg, const Form& w, const Section& s);

// Evaluate on degree-many sections of either kind, with e0 as reference.
Expr eval_form(const AffineAlgebroid& alg, const Form& w, const std::vector<Section>& args);

// Same value computed relative to an arbitrary affine reference section;
// the result is independent of the choice.
Expr eval_form_with_reference(const AffineAlgebroid& alg, const Form& w,
                              const std::vector<Section>& args, const Section& reference);

// Exterior derivative assembled from the coordinate rules for functions and
// basis 1-forms, extended by the graded Leibniz rule.
Form d_coord(const AffineAlgebroid& alg, const Form& w);

// Lie derivative along an affine or vector section via the Cartan formula.
Form lie(const AffineAlgebroid& alg, const Section& s, const Form& w);

// Lie derivative of a section is the bracket.
Section lie_section(const AffineAlgebroid& alg, const Section& s, const Section& target);

// Largest sampled residual over all coefficients of the form.
double max_coefficient_residual(const AffineAlgebroid& alg, const Form& w);

// Form of the given degree whose coefficients are random polynomials in the base
// variables of total degree at most max_poly_degree.
Form random_form(SampleRng& rng, const AffineAlgebroid& alg, int degree,
                 int max_poly_degree = 2);

}  // namespace affalg
