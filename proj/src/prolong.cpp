#include "affalg/prolong.hpp"

#include <map>
#include <stdexcept>

namespace affalg {

AffineAlgebroid prolong(const AffineAlgebroid& alg) {
  const int n = alg.base_dim();
  const int k = alg.fibre_dim();
  const int n1 = n + k;
  const int k1 = 2 * k;

  // horizontal copies occupy fibre slots 1..k, vertical ones k+1..2k
  std::vector<std::vector<std::vector<Expr>>> c1(
      static_cast<std::size_t>(k1),
      std::vector<std::vector<Expr>>(static_cast<std::size_t>(k1),
                                     std::vector<Expr>(static_cast<std::size_t>(k1))));
  for (int g = 1; g <= k; ++g)
    for (int a = 1; a <= k; ++a)
      for (int b = 1; b <= k; ++b)
        c1[static_cast<std::size_t>(g - 1)][static_cast<std::size_t>(a - 1)]
          [static_cast<std::size_t>(b - 1)] = alg.c(g, a, b);

  std::vector<std::vector<Expr>> c01(static_cast<std::size_t>(k1),
                                     std::vector<Expr>(static_cast<std::size_t>(k1)));
  for (int b = 1; b <= k; ++b)
    for (int a = 1; a <= k; ++a)
      c01[static_cast<std::size_t>(b - 1)][static_cast<std::size_t>(a - 1)] = alg.c0(b, a);

  std::vector<Expr> lam1(static_cast<std::size_t>(n1));
  for (int i = 1; i <= n; ++i) lam1[static_cast<std::size_t>(i - 1)] = alg.lambda(i);

  std::vector<std::vector<Expr>> rho1(static_cast<std::size_t>(n1),
                                      std::vector<Expr>(static_cast<std::size_t>(k1)));
  for (int i = 1; i <= n; ++i)
    for (int b = 1; b <= k; ++b)
      rho1[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(b - 1)] = alg.rho(i, b);
  for (int j = 1; j <= k; ++j)
    rho1[static_cast<std::size_t>(n + j - 1)][static_cast<std::size_t>(k + j - 1)] =
        Expr::constant(1.0);

  SampleDomain dom = alg.domain();
  SampleDomain dom1 = dom;
  dom1.intervals.clear();
  dom1.intervals[var_t()] = dom.intervals.at(var_t());
  for (int i = 1; i <= n; ++i) dom1.intervals[var_x(i)] = dom.intervals.at(var_x(i));
  for (int j = 1; j <= k; ++j) {
    Interval iv = dom.intervals.at(var_y(j));
    dom1.intervals[var_x(n + j)] = iv;
    dom1.intervals[var_y(j)] = iv;
    dom1.intervals[var_y(k + j)] = iv;
  }
  return AffineAlgebroid(n1, k1, c1, c01, lam1, rho1, dom1);
}

Section sode_as_section(const PseudoSode& sode) {
  if (sode.force.empty())
    throw std::invalid_argument("only a symbolic force can be lifted to a section");
  const int n = sode.algebroid.base_dim();
  const int k = sode.algebroid.fibre_dim();

  std::map<VarId, Expr> rename;
  for (int j = 1; j <= k; ++j) rename[var_y(j)] = Expr::variable(var_x(n + j));

  std::vector<Expr> comps(static_cast<std::size_t>(2 * k));
  for (int a = 1; a <= k; ++a) {
    comps[static_cast<std::size_t>(a - 1)] = Expr::variable(var_x(n + a));
    comps[static_cast<std::size_t>(k + a - 1)] =
        subst(sode.force[static_cast<std::size_t>(a - 1)], rename);
  }
  return Section::affine(std::move(comps));
}

namespace {

Expr random_poly_over(SampleRng& rng, const std::vector<VarId>& vars) {
  Expr out = Expr::constant(rng.uniform(-1.0, 1.0));
  for (VarId v : vars)
    out = out + Expr::constant(rng.uniform(-1.0, 1.0)) * Expr::variable(v);
  if (!vars.empty()) {
    VarId a = vars[static_cast<std::size_t>(rng.uniform(0.0, 0.999) *
                                            static_cast<double>(vars.size()))];
    VarId b = vars[static_cast<std::size_t>(rng.uniform(0.0, 0.999) *
                                            static_cast<double>(vars.size()))];
    out = out + Expr::constant(rng.uniform(-1.0, 1.0)) * Expr::variable(a) * Expr::variable(b);
  }
  return out;
}

Section random_section_over(SampleRng& rng, const AffineAlgebroid& alg,
                            const std::vector<VarId>& vars, Section::Kind kind) {
  std::vector<Expr> comps(static_cast<std::size_t>(alg.fibre_dim()));
  for (Expr& c : comps) c = random_poly_over(rng, vars);
  return kind == Section::Kind::Affine ? Section::affine(std::move(comps))
                                       : Section::vector(std::move(comps));
}

}  // namespace

BracketCheck prolonged_bracket_check(const AffineAlgebroid& alg, int trials, uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  AffineAlgebroid lifted = prolong(alg);

  std::vector<VarId> vars;
  vars.push_back(var_t());
  for (int i = 1; i <= lifted.base_dim(); ++i) vars.push_back(var_x(i));

  SampleRng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Section::Kind first =
        rng.uniform(0.0, 1.0) < 0.5 ? Section::Kind::Affine : Section::Kind::Vector;
    Section z1 = random_section_over(rng, lifted, vars, first);
    Section z2 = random_section_over(rng, lifted, vars, Section::Kind::Vector);
    Expr f = random_poly_over(rng, vars);

    // derivation rule of the bracket in its vector slot
    Section lhs = lifted.bracket(z1, scale(f, z2));
    Section rhs = add(scale(f, lifted.bracket(z1, z2)),
                      scale(lifted.anchor_apply(z1, f), z2));
    std::vector<Expr> defects;
    for (int a = 0; a < lifted.fibre_dim(); ++a)
      defects.push_back(lhs.components[static_cast<std::size_t>(a)] -
                        rhs.components[static_cast<std::size_t>(a)]);

    // the anchor must send brackets to commutators of the image vector fields
    Section w1 = random_section_over(rng, lifted, vars, first);
    Section w2 = random_section_over(
        rng, lifted, vars,
        first == Section::Kind::Affine ? Section::Kind::Vector : Section::Kind::Affine);
    for (Expr& e : lifted.anchor_mismatch(w1, w2)) defects.push_back(std::move(e));

    worst = std::max(worst, max_abs_on_samples(defects, lifted.domain()));
  }

  BracketCheck out;
  out.residual = worst;
  out.pass = worst <= lifted.domain().tolerance;
  return out;
}

}  // namespace affalg
