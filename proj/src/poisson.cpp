#include "affalg/poisson.hpp"

#include <stdexcept>

namespace affalg {

PoissonSpace::PoissonSpace(AffineAlgebroid alg, Interval momentum_bounds)
    : alg_(std::move(alg)) {
  phase_ = alg_.domain();
  phase_.intervals.clear();
  phase_.intervals[var_t()] = alg_.domain().intervals.at(var_t());
  for (int i = 1; i <= alg_.base_dim(); ++i)
    phase_.intervals[var_x(i)] = alg_.domain().intervals.at(var_x(i));
  phase_.intervals[var_p0()] = momentum_bounds;
  for (int a = 1; a <= alg_.fibre_dim(); ++a) phase_.intervals[var_p(a)] = momentum_bounds;
}

Expr PoissonSpace::coordinate_bracket(VarId u, VarId v) const {
  auto momentum_of = [&](int b) {
    Expr out;
    for (int g = 1; g <= alg_.fibre_dim(); ++g)
      out = out + alg_.c0(g, b) * Expr::variable(var_p(g));
    return out;
  };
  auto pair_of = [&](int a, int b) {
    Expr out;
    for (int g = 1; g <= alg_.fibre_dim(); ++g)
      out = out + alg_.c(g, a, b) * Expr::variable(var_p(g));
    return out;
  };
  auto check = [&](VarId w) {
    if (w.kind == VarKind::Y)
      throw std::invalid_argument("fibre variables do not live on the momentum space");
    if (w.kind == VarKind::X && w.index > alg_.base_dim())
      throw std::invalid_argument("base coordinate out of range");
    if (w.kind == VarKind::P && w.index > alg_.fibre_dim())
      throw std::invalid_argument("momentum coordinate out of range");
  };
  check(u);
  check(v);

  if (u.kind == VarKind::P0) {
    if (v.kind == VarKind::T) return Expr::constant(1.0);
    if (v.kind == VarKind::X) return alg_.lambda(v.index);
    if (v.kind == VarKind::P) return momentum_of(v.index);
    return Expr();  // p0 with itself
  }
  if (u.kind == VarKind::P) {
    if (v.kind == VarKind::X) return alg_.rho(v.index, u.index);
    if (v.kind == VarKind::P) return pair_of(u.index, v.index);
    if (v.kind == VarKind::T) return Expr();
    // v is p0: flip the defining row
    return Expr::constant(-1.0) * momentum_of(u.index);
  }
  // u is t or x: nonzero only against momenta
  if (v.kind == VarKind::P0 || v.kind == VarKind::P)
    return Expr::constant(-1.0) * coordinate_bracket(v, u);
  return Expr();
}

Expr PoissonSpace::bracket(const Expr& f, const Expr& g) const {
  Expr out;
  for (VarId u : free_vars(f))
    for (VarId v : free_vars(g)) {
      Expr table = coordinate_bracket(u, v);
      if (table.is_constant(0.0)) continue;
      out = out + diff(f, u) * diff(g, v) * table;
    }
  return out;
}

Expr PoissonSpace::hat(const Section& s) const {
  if (s.components.size() != static_cast<std::size_t>(alg_.fibre_dim()))
    throw std::invalid_argument("section does not match the fibre dimension");
  Expr out = s.is_affine() ? Expr::variable(var_p0()) : Expr();
  for (int a = 1; a <= alg_.fibre_dim(); ++a)
    out = out + Expr::variable(var_p(a)) * s.components[static_cast<std::size_t>(a - 1)];
  return out;
}

double PoissonSpace::coordinate_jacobi_residual() const {
  std::vector<VarId> vars;
  for (const auto& [v, iv] : phase_.intervals) vars.push_back(v);

  double worst = 0.0;
  for (std::size_t i = 0; i < vars.size(); ++i)
    for (std::size_t j = i + 1; j < vars.size(); ++j)
      for (std::size_t l = j + 1; l < vars.size(); ++l) {
        Expr f = Expr::variable(vars[i]);
        Expr g = Expr::variable(vars[j]);
        Expr h = Expr::variable(vars[l]);
        Expr cyc = bracket(f, bracket(g, h)) + bracket(g, bracket(h, f)) +
                   bracket(h, bracket(f, g));
        worst = std::max(worst, max_abs_on_samples({cyc}, phase_));
      }
  return worst;
}

double PoissonSpace::jacobi_residual(int trials, uint64_t seed) const {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  std::vector<VarId> vars;
  for (const auto& [v, iv] : phase_.intervals) vars.push_back(v);

  SampleRng rng(seed);
  auto poly = [&]() {
    Expr out = Expr::constant(rng.uniform(-1.0, 1.0));
    for (VarId v : vars)
      out = out + Expr::constant(rng.uniform(-1.0, 1.0)) * Expr::variable(v);
    VarId a = vars[static_cast<std::size_t>(rng.uniform(0.0, 0.999) *
                                            static_cast<double>(vars.size()))];
    VarId b = vars[static_cast<std::size_t>(rng.uniform(0.0, 0.999) *
                                            static_cast<double>(vars.size()))];
    out = out + Expr::constant(rng.uniform(-1.0, 1.0)) * Expr::variable(a) * Expr::variable(b);
    return out;
  };

  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Expr f = poly(), g = poly(), h = poly();
    Expr cyc = bracket(f, bracket(g, h)) + bracket(g, bracket(h, f)) +
               bracket(h, bracket(f, g));
    worst = std::max(worst, max_abs_on_samples({cyc}, phase_));
  }
  return worst;
}

}  // namespace affalg
