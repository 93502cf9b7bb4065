#include "affalg/algebroid.hpp"

#include <chrono>
#include <stdexcept>

namespace affalg {

Section Section::affine(std::vector<Expr> comps) {
  return {Kind::Affine, std::move(comps)};
}

Section Section::vector(std::vector<Expr> comps) {
  return {Kind::Vector, std::move(comps)};
}

Section e0_section(int k) {
  return Section::affine(std::vector<Expr>(static_cast<std::size_t>(k)));
}

Section basis_section(int k, int alpha) {
  if (alpha < 1 || alpha > k) throw std::invalid_argument("basis section index out of range");
  std::vector<Expr> comps(static_cast<std::size_t>(k));
  comps[alpha - 1] = Expr::constant(1.0);
  return Section::vector(std::move(comps));
}

namespace {

void require_same_size(const Section& a, const Section& b) {
  if (a.components.size() != b.components.size())
    throw std::invalid_argument("section fibre dimensions differ");
}

}  // namespace

Section add(const Section& a, const Section& b) {
  require_same_size(a, b);
  if (a.is_affine() && b.is_affine())
    throw std::invalid_argument("cannot add two affine sections");
  Section out;
  out.kind = (a.is_affine() || b.is_affine()) ? Section::Kind::Affine : Section::Kind::Vector;
  out.components.reserve(a.components.size());
  for (std::size_t i = 0; i < a.components.size(); ++i)
    out.components.push_back(a.components[i] + b.components[i]);
  return out;
}

Section difference(const Section& a, const Section& b) {
  require_same_size(a, b);
  if (!a.is_affine() && b.is_affine())
    throw std::invalid_argument("cannot subtract an affine section from a vector section");
  Section out;
  out.kind = (a.is_affine() && !b.is_affine()) ? Section::Kind::Affine : Section::Kind::Vector;
  out.components.reserve(a.components.size());
  for (std::size_t i = 0; i < a.components.size(); ++i)
    out.components.push_back(a.components[i] - b.components[i]);
  return out;
}

Section scale(const Expr& f, const Section& s) {
  if (s.is_affine()) throw std::invalid_argument("cannot scale an affine section");
  Section out;
  out.kind = Section::Kind::Vector;
  out.components.reserve(s.components.size());
  for (const Expr& comp : s.components) out.components.push_back(f * comp);
  return out;
}

const AxiomCheck* AxiomReport::find(std::string_view name) const {
  for (const auto& check : checks)
    if (check.name == name) return &check;
  return nullptr;
}

namespace {

Expr dt(const Expr& e) { return diff(e, var_t()); }
Expr dx(const Expr& e, int i) { return diff(e, var_x(i)); }

void check_vocabulary(const Expr& e, int n, const char* what) {
  for (VarId v : free_vars(e)) {
    bool ok = v.kind == VarKind::T || (v.kind == VarKind::X && v.index >= 1 && v.index <= n);
    if (!ok)
      throw std::invalid_argument(std::string(what) + " entry '" + to_string(e) +
                                  "' uses variable '" + to_string(v) +
                                  "' outside the base coordinates");
  }
}

}  // namespace

AffineAlgebroid::AffineAlgebroid(int n, int k,
                                 std::vector<std::vector<std::vector<Expr>>> c,
                                 std::vector<std::vector<Expr>> c0,
                                 std::vector<Expr> lam,
                                 std::vector<std::vector<Expr>> rho,
                                 SampleDomain dom,
                                 SkewPolicy policy)
    : n_(n), k_(k), c_(std::move(c)), c0_(std::move(c0)), lam_(std::move(lam)),
      rho_(std::move(rho)), dom_(std::move(dom)) {
  if (n_ < 0 || k_ < 1) throw std::invalid_argument("need n >= 0 and k >= 1");

  auto size_error = [](const char* what) {
    throw std::invalid_argument(std::string("structure data '") + what + "' has the wrong shape");
  };
  if (c_.size() != static_cast<std::size_t>(k_)) size_error("c");
  for (const auto& plane : c_) {
    if (plane.size() != static_cast<std::size_t>(k_)) size_error("c");
    for (const auto& row : plane)
      if (row.size() != static_cast<std::size_t>(k_)) size_error("c");
  }
  if (c0_.size() != static_cast<std::size_t>(k_)) size_error("c0");
  for (const auto& row : c0_)
    if (row.size() != static_cast<std::size_t>(k_)) size_error("c0");
  if (lam_.size() != static_cast<std::size_t>(n_)) size_error("lambda");
  if (rho_.size() != static_cast<std::size_t>(n_)) size_error("rho");
  for (const auto& row : rho_)
    if (row.size() != static_cast<std::size_t>(k_)) size_error("rho");

  for (const auto& plane : c_)
    for (const auto& row : plane)
      for (const Expr& e : row) check_vocabulary(e, n_, "c");
  for (const auto& row : c0_)
    for (const Expr& e : row) check_vocabulary(e, n_, "c0");
  for (const Expr& e : lam_) check_vocabulary(e, n_, "lambda");
  for (const auto& row : rho_)
    for (const Expr& e : row) check_vocabulary(e, n_, "rho");

  if (!dom_.intervals.count(var_t()))
    throw std::invalid_argument("sample domain must bound t");
  for (int i = 1; i <= n_; ++i)
    if (!dom_.intervals.count(var_x(i)))
      throw std::invalid_argument("sample domain must bound x" + std::to_string(i));
  for (int a = 1; a <= k_; ++a)
    if (!dom_.intervals.count(var_y(a)))
      throw std::invalid_argument("sample domain must bound y" + std::to_string(a));

  if (policy == SkewPolicy::Antisymmetrize) {
    auto orig = c_;
    const Expr half = Expr::constant(0.5);
    for (int g = 0; g < k_; ++g)
      for (int a = 0; a < k_; ++a)
        for (int b = 0; b < k_; ++b)
          c_[g][a][b] = half * (orig[g][a][b] - orig[g][b][a]);
  } else {
    for (int g = 1; g <= k_; ++g)
      for (int a = 1; a <= k_; ++a)
        for (int b = a; b <= k_; ++b) {
          auto r = is_zero(c_[g - 1][a - 1][b - 1] + c_[g - 1][b - 1][a - 1], dom_);
          if (!r.zero)
            throw std::invalid_argument("structure functions are not skew symmetric (residual " +
                                        std::to_string(r.residual) + " at c indices " +
                                        std::to_string(g) + "," + std::to_string(a) + "," +
                                        std::to_string(b) + ")");
        }
  }
}

const Expr& AffineAlgebroid::c(int g, int a, int b) const { return c_[g - 1][a - 1][b - 1]; }
const Expr& AffineAlgebroid::c0(int b, int a) const { return c0_[b - 1][a - 1]; }
const Expr& AffineAlgebroid::lambda(int i) const { return lam_[i - 1]; }
const Expr& AffineAlgebroid::rho(int i, int a) const { return rho_[i - 1][a - 1]; }

void AffineAlgebroid::validate_section(const Section& s) const {
  if (s.components.size() != static_cast<std::size_t>(k_))
    throw std::invalid_argument("section has wrong fibre dimension");
  for (const Expr& e : s.components) check_vocabulary(e, n_, "section");
}

Expr AffineAlgebroid::anchor_apply(const Section& s, const Expr& f) const {
  validate_section(s);
  Expr out = s.is_affine() ? dt(f) : Expr();
  for (int i = 1; i <= n_; ++i) {
    Expr coef = s.is_affine() ? lambda(i) : Expr();
    for (int a = 1; a <= k_; ++a) coef = coef + rho(i, a) * s.components[a - 1];
    out = out + coef * dx(f, i);
  }
  return out;
}

std::vector<Expr> AffineAlgebroid::anchor_coefficients(const Section& s) const {
  validate_section(s);
  std::vector<Expr> out;
  out.reserve(static_cast<std::size_t>(n_) + 1);
  out.push_back(Expr::constant(s.is_affine() ? 1.0 : 0.0));
  for (int i = 1; i <= n_; ++i) {
    Expr coef = s.is_affine() ? lambda(i) : Expr();
    for (int a = 1; a <= k_; ++a) coef = coef + rho(i, a) * s.components[a - 1];
    out.push_back(coef);
  }
  return out;
}

Section AffineAlgebroid::bracket(const Section& s1, const Section& s2) const {
  validate_section(s1);
  validate_section(s2);

  if (s1.is_affine() && s2.is_affine()) return bracket(s1, difference(s2, s1));
  if (!s1.is_affine() && s2.is_affine()) {
    Section out = bracket(s2, s1);
    for (Expr& comp : out.components) comp = -comp;
    return out;
  }

  std::vector<Expr> out(static_cast<std::size_t>(k_));
  if (s1.is_affine()) {
    // derivation of the vector argument along the e0-anchored flow, plus the
    // c0 and c structure terms, minus the back-reaction on the affine part
    for (int g = 1; g <= k_; ++g) {
      Expr comp = anchor_apply(s1, s2.components[g - 1]) - anchor_apply(s2, s1.components[g - 1]);
      for (int b = 1; b <= k_; ++b) {
        comp = comp + c0(g, b) * s2.components[b - 1];
        for (int a = 1; a <= k_; ++a)
          comp = comp + c(g, a, b) * s1.components[a - 1] * s2.components[b - 1];
      }
      out[g - 1] = comp;
    }
  } else {
    for (int g = 1; g <= k_; ++g) {
      Expr comp = anchor_apply(s1, s2.components[g - 1]) - anchor_apply(s2, s1.components[g - 1]);
      for (int a = 1; a <= k_; ++a)
        for (int b = 1; b <= k_; ++b)
          comp = comp + c(g, a, b) * s1.components[a - 1] * s2.components[b - 1];
      out[g - 1] = comp;
    }
  }
  return Section::vector(std::move(out));
}

AxiomReport AffineAlgebroid::check_axioms() const {
  std::vector<Expr> anchor_mixed, anchor_vector, jac_mixed, jac_cyclic;

  for (int b = 1; b <= k_; ++b)
    for (int j = 1; j <= n_; ++j) {
      Expr e = dt(rho(j, b));
      for (int i = 1; i <= n_; ++i)
        e = e + lambda(i) * dx(rho(j, b), i) - rho(i, b) * dx(lambda(j), i);
      for (int a = 1; a <= k_; ++a) e = e - c0(a, b) * rho(j, a);
      anchor_mixed.push_back(e);
    }

  for (int a = 1; a <= k_; ++a)
    for (int b = a + 1; b <= k_; ++b)
      for (int j = 1; j <= n_; ++j) {
        Expr e;
        for (int i = 1; i <= n_; ++i)
          e = e + rho(i, a) * dx(rho(j, b), i) - rho(i, b) * dx(rho(j, a), i);
        for (int g = 1; g <= k_; ++g) e = e - c(g, a, b) * rho(j, g);
        anchor_vector.push_back(e);
      }

  for (int a = 1; a <= k_; ++a)
    for (int b = a + 1; b <= k_; ++b)
      for (int mu = 1; mu <= k_; ++mu) {
        Expr e = dt(c(mu, a, b));
        for (int i = 1; i <= n_; ++i) {
          e = e + lambda(i) * dx(c(mu, a, b), i);
          e = e - (rho(i, a) * dx(c0(mu, b), i) - rho(i, b) * dx(c0(mu, a), i));
        }
        for (int g = 1; g <= k_; ++g) {
          e = e + c(g, a, b) * c0(mu, g);
          e = e - (c(mu, a, g) * c0(g, b) - c(mu, b, g) * c0(g, a));
        }
        jac_mixed.push_back(e);
      }

  for (int a = 1; a <= k_; ++a)
    for (int b = a + 1; b <= k_; ++b)
      for (int g = b + 1; g <= k_; ++g)
        for (int mu = 1; mu <= k_; ++mu) {
          Expr e;
          const int cyc[3][3] = {{a, b, g}, {b, g, a}, {g, a, b}};
          for (const auto& idx : cyc) {
            for (int i = 1; i <= n_; ++i) e = e + rho(i, idx[0]) * dx(c(mu, idx[1], idx[2]), i);
            for (int nu = 1; nu <= k_; ++nu) e = e + c(mu, idx[0], nu) * c(nu, idx[1], idx[2]);
          }
          jac_cyclic.push_back(e);
        }

  AxiomReport report;
  report.tolerance = dom_.tolerance;
  auto push = [&](const char* name, const std::vector<Expr>& family) {
    auto start = std::chrono::steady_clock::now();
    double residual = max_abs_on_samples(family, dom_);
    double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    report.checks.push_back({name, residual, residual <= dom_.tolerance, wall_ms});
  };
  push("anchor_compat_mixed", anchor_mixed);
  push("anchor_compat_vector", anchor_vector);
  push("jacobi_mixed", jac_mixed);
  push("jacobi_cyclic", jac_cyclic);
  report.pass = true;
  for (const auto& check : report.checks) report.pass = report.pass && check.pass;
  return report;
}

std::vector<Expr> AffineAlgebroid::anchor_mismatch(const Section& s1, const Section& s2) const {
  Section br = bracket(s1, s2);
  std::vector<Expr> a1 = anchor_coefficients(s1);
  std::vector<Expr> a2 = anchor_coefficients(s2);

  auto apply = [&](const std::vector<Expr>& coeffs, const Expr& f) {
    Expr out = coeffs[0] * dt(f);
    for (int i = 1; i <= n_; ++i) out = out + coeffs[i] * dx(f, i);
    return out;
  };

  std::vector<Expr> out(static_cast<std::size_t>(n_));
  for (int m = 1; m <= n_; ++m) {
    Expr rho_br;
    for (int g = 1; g <= k_; ++g) rho_br = rho_br + rho(m, g) * br.components[g - 1];
    Expr commutator = apply(a1, a2[m]) - apply(a2, a1[m]);
    out[m - 1] = rho_br - commutator;
  }
  return out;
}

AffineAlgebroid AffineAlgebroid::transform_fibre(
    const std::vector<std::vector<Expr>>& a_mat,
    const std::vector<Expr>& b_shift,
    const std::vector<std::vector<Expr>>& a_inv) const {
  auto k = static_cast<std::size_t>(k_);
  if (a_mat.size() != k || a_inv.size() != k || b_shift.size() != k)
    throw std::invalid_argument("fibre transform has the wrong shape");
  for (const auto& row : a_mat)
    if (row.size() != k) throw std::invalid_argument("fibre transform has the wrong shape");
  for (const auto& row : a_inv)
    if (row.size() != k) throw std::invalid_argument("fibre transform has the wrong shape");

  for (int a = 0; a < k_; ++a)
    for (int b = 0; b < k_; ++b) {
      Expr entry;
      for (int g = 0; g < k_; ++g) entry = entry + a_mat[a][g] * a_inv[g][b];
      Expr expected = Expr::constant(a == b ? 1.0 : 0.0);
      auto r = is_zero(entry - expected, dom_);
      if (!r.zero)
        throw std::invalid_argument("a_inv is not the inverse of a_mat (residual " +
                                    std::to_string(r.residual) + ")");
    }

  // rho_new^i_g = rho^i_a (A^-1)^a_g, lambda_new^i = lambda^i - B^a rho_new^i_a
  std::vector<std::vector<Expr>> rho_new(static_cast<std::size_t>(n_),
                                         std::vector<Expr>(k));
  std::vector<Expr> lam_new(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    for (int g = 0; g < k_; ++g) {
      Expr entry;
      for (int a = 0; a < k_; ++a) entry = entry + rho_[i][a] * a_inv[a][g];
      rho_new[i][g] = entry;
    }
    Expr shift;
    for (int a = 0; a < k_; ++a) shift = shift + b_shift[a] * rho_new[i][a];
    lam_new[i] = lam_[i] - shift;
  }

  // c_new^m_{gn} = (c^g'_{ab} A^m_g' - rho^i_a dA^m_b/dx^i + rho^i_b dA^m_a/dx^i)
  //               (A^-1)^a_g (A^-1)^b_n
  std::vector<std::vector<std::vector<Expr>>> c_new(
      k, std::vector<std::vector<Expr>>(k, std::vector<Expr>(k)));
  for (int m = 0; m < k_; ++m)
    for (int a = 0; a < k_; ++a)
      for (int b = 0; b < k_; ++b) {
        Expr r_ab;
        for (int g = 0; g < k_; ++g) r_ab = r_ab + c_[g][a][b] * a_mat[m][g];
        for (int i = 0; i < n_; ++i)
          r_ab = r_ab - rho_[i][a] * dx(a_mat[m][b], i + 1) + rho_[i][b] * dx(a_mat[m][a], i + 1);
        for (int g = 0; g < k_; ++g)
          for (int nu = 0; nu < k_; ++nu)
            c_new[m][g][nu] = c_new[m][g][nu] + r_ab * a_inv[a][g] * a_inv[b][nu];
      }

  // c0_new^a_m = (c0^g_b A^a_g - c_new^a_{gn} B^g A^n_b - dA^a_b/dt
  //              - lambda^i dA^a_b/dx^i + rho^i_b dB^a/dx^i) (A^-1)^b_m
  std::vector<std::vector<Expr>> c0_new(k, std::vector<Expr>(k));
  for (int a = 0; a < k_; ++a)
    for (int b = 0; b < k_; ++b) {
      Expr s_ab;
      for (int g = 0; g < k_; ++g) s_ab = s_ab + c0_[g][b] * a_mat[a][g];
      for (int g = 0; g < k_; ++g)
        for (int nu = 0; nu < k_; ++nu)
          s_ab = s_ab - c_new[a][g][nu] * b_shift[g] * a_mat[nu][b];
      s_ab = s_ab - dt(a_mat[a][b]);
      for (int i = 0; i < n_; ++i)
        s_ab = s_ab - lam_[i] * dx(a_mat[a][b], i + 1) + rho_[i][b] * dx(b_shift[a], i + 1);
      for (int m = 0; m < k_; ++m) c0_new[a][m] = c0_new[a][m] + s_ab * a_inv[b][m];
    }

  return AffineAlgebroid(n_, k_, std::move(c_new), std::move(c0_new), std::move(lam_new),
                         std::move(rho_new), dom_, SkewPolicy::Reject);
}

AffineAlgebroid AffineAlgebroid::transform_base(const std::vector<Expr>& x_new,
                                                const std::vector<Expr>& x_new_inv) const {
  auto n = static_cast<std::size_t>(n_);
  if (x_new.size() != n || x_new_inv.size() != n)
    throw std::invalid_argument("base transform has the wrong shape");
  for (const Expr& e : x_new) check_vocabulary(e, n_, "x_new");
  for (const Expr& e : x_new_inv) check_vocabulary(e, n_, "x_new_inv");

  std::map<VarId, Expr> to_old;  // substitutes x (primed) by the inverse map
  std::map<VarId, Expr> to_new;
  for (int i = 1; i <= n_; ++i) {
    to_old[var_x(i)] = x_new_inv[i - 1];
    to_new[var_x(i)] = x_new[i - 1];
  }
  for (int j = 1; j <= n_; ++j) {
    auto fwd = is_zero(subst(x_new[j - 1], to_old) - Expr::variable(var_x(j)), dom_);
    auto bwd = is_zero(subst(x_new_inv[j - 1], to_new) - Expr::variable(var_x(j)), dom_);
    if (!fwd.zero || !bwd.zero)
      throw std::invalid_argument("x_new and x_new_inv do not compose to the identity (residual " +
                                  std::to_string(std::max(fwd.residual, bwd.residual)) + ")");
  }

  std::vector<std::vector<Expr>> rho_new(n, std::vector<Expr>(static_cast<std::size_t>(k_)));
  std::vector<Expr> lam_new(n);
  for (int j = 1; j <= n_; ++j) {
    for (int a = 1; a <= k_; ++a) {
      Expr entry;
      for (int i = 1; i <= n_; ++i) entry = entry + rho(i, a) * dx(x_new[j - 1], i);
      rho_new[j - 1][a - 1] = subst(entry, to_old);
    }
    Expr entry = dt(x_new[j - 1]);
    for (int i = 1; i <= n_; ++i) entry = entry + lambda(i) * dx(x_new[j - 1], i);
    lam_new[j - 1] = subst(entry, to_old);
  }

  auto c_new = c_;
  for (auto& plane : c_new)
    for (auto& row : plane)
      for (Expr& e : row) e = subst(e, to_old);
  auto c0_new = c0_;
  for (auto& row : c0_new)
    for (Expr& e : row) e = subst(e, to_old);

  return AffineAlgebroid(n_, k_, std::move(c_new), std::move(c0_new), std::move(lam_new),
                         std::move(rho_new), dom_, SkewPolicy::Reject);
}

}  // namespace affalg
