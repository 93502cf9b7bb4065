#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "affalg/expr.hpp"

namespace affalg {

// Section of the affine bundle (kind Affine) or of its linear model bundle
// (kind Vector).  Components are Exprs over (t, x1..xn); components[a-1] is
// the coefficient of the a-th fibre basis section.  An affine section is
// e0 + components, a vector section is plain components.
struct Section {
  enum class Kind { Affine, Vector };
  Kind kind{Kind::Vector};
  std::vector<Expr> components;

  static Section affine(std::vector<Expr> comps);
  static Section vector(std::vector<Expr> comps);
  bool is_affine() const { return kind == Kind::Affine; }
};

Section e0_section(int k);                 // the reference affine section
Section basis_section(int k, int alpha);   // vector basis section, 1-based

// affine+vector, vector+affine, vector+vector (affine+affine is rejected)
Section add(const Section& a, const Section& b);
// affine-affine and vector-vector give a vector; affine-vector stays affine
Section difference(const Section& a, const Section& b);
// scaling is only defined for vector sections
Section scale(const Expr& f, const Section& s);

struct AxiomCheck {
  std::string name;
  double residual{0.0};
  bool pass{true};
  double wall_ms{0.0};
};

struct AxiomReport {
  std::vector<AxiomCheck> checks;
  double tolerance{0.0};
  bool pass{true};

  const AxiomCheck* find(std::string_view name) const;
};

// Affine Lie algebroid structure data in coordinates: base (t, x1..xn),
// fibre dimension k, bracket structure functions c (skew in the lower pair)
// and c0, anchor coefficients lambda and rho.  All entries are Exprs over
// (t, x) only.  The sample domain drives every randomized zero check.
class AffineAlgebroid {
 public:
  enum class SkewPolicy { Reject, Antisymmetrize };

  // c[g-1][a-1][b-1] is the e_g coefficient of the bracket of e_a with e_b;
  // c0[b-1][a-1] the e_b coefficient of the bracket of e0 with e_a;
  // lam[i-1] and rho[i-1][a-1] the d/dx^i anchor coefficients of e0 and e_a.
  AffineAlgebroid(int n, int k,
                  std::vector<std::vector<std::vector<Expr>>> c,
                  std::vector<std::vector<Expr>> c0,
                  std::vector<Expr> lam,
                  std::vector<std::vector<Expr>> rho,
                  SampleDomain dom,
                  SkewPolicy policy = SkewPolicy::Reject);

  int base_dim() const { return n_; }
  int fibre_dim() const { return k_; }
  const SampleDomain& domain() const { return dom_; }

  // 1-based accessors mirroring the coordinate names
  const Expr& c(int g, int a, int b) const;
  const Expr& c0(int b, int a) const;
  const Expr& lambda(int i) const;
  const Expr& rho(int i, int a) const;

  // Derivation along the anchor image of a section: for affine s this is
  // d/dt + (lambda^i + rho^i_a s^a) d/dx^i applied to f, for vector s just
  // rho^i_a s^a d/dx^i.
  Expr anchor_apply(const Section& s, const Expr& f) const;

  // Coefficients (d/dt, d/dx^1 .. d/dx^n) of the anchor image; size n+1.
  std::vector<Expr> anchor_coefficients(const Section& s) const;

  // Bracket of two sections; the result is always a vector section.
  // Affine-affine pairs are reduced through the difference of the arguments,
  // mixed pairs use the derivation property of the e0 action.
  Section bracket(const Section& s1, const Section& s2) const;

  // Residuals of the four structure identities, each maximized over all
  // index tuples and sample points:
  //   anchor_compat_mixed   anchors intertwine the e0/vector brackets
  //   anchor_compat_vector  anchors intertwine the vector/vector brackets
  //   jacobi_mixed          Jacobi identity with one e0 slot
  //   jacobi_cyclic         cyclic Jacobi identity on vector sections
  AxiomReport check_axioms() const;

  // Componentwise defect of the anchor homomorphism property on a concrete
  // pair of sections: rho([s1,s2]) minus the commutator of the anchor
  // images, as d/dx^i coefficients (size n).
  std::vector<Expr> anchor_mismatch(const Section& s1, const Section& s2) const;

  // Structure data in new fibre coordinates yb^a = A^a_b(t,x) y^b + B^a(t,x).
  // a_inv must be the pointwise matrix inverse of a_mat; this is verified on
  // the sample domain.  a_mat[b-1][a-1] is A^b_a.
  AffineAlgebroid transform_fibre(const std::vector<std::vector<Expr>>& a_mat,
                                  const std::vector<Expr>& b_shift,
                                  const std::vector<std::vector<Expr>>& a_inv) const;

  // Structure data in new base coordinates x'^j = x_new[j-1](t, x), with
  // x_new_inv the inverse substitution expressing x in terms of (t, x').
  // The two substitutions are verified to compose to the identity on the
  // sample domain.  Intervals for the primed coordinates are kept as-is.
  AffineAlgebroid transform_base(const std::vector<Expr>& x_new,
                                 const std::vector<Expr>& x_new_inv) const;

 private:
  int n_;
  int k_;
  std::vector<std::vector<std::vector<Expr>>> c_;
  std::vector<std::vector<Expr>> c0_;
  std::vector<Expr> lam_;
  std::vector<std::vector<Expr>> rho_;
  SampleDomain dom_;

  void validate_section(const Section& s) const;
};

}  // namespace affalg
