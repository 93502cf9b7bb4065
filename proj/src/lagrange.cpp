#include "affalg/lagrange.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace affalg {

namespace {

void check_lagrangian(const AffineAlgebroid& alg, const Expr& lagrangian) {
  for (VarId v : free_vars(lagrangian)) {
    bool ok = v.kind == VarKind::T || (v.kind == VarKind::X && v.index <= alg.base_dim()) ||
              (v.kind == VarKind::Y && v.index <= alg.fibre_dim());
    if (!ok)
      throw std::invalid_argument("lagrangian may only use t, base and fibre coordinates");
  }
}

Expr det_small(const std::vector<std::vector<Expr>>& m) {
  const std::size_t k = m.size();
  if (k == 1) return m[0][0];
  if (k == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

std::vector<std::vector<Expr>> adjugate_small(const std::vector<std::vector<Expr>>& m) {
  const std::size_t k = m.size();
  std::vector<std::vector<Expr>> adj(k, std::vector<Expr>(k));
  if (k == 1) {
    adj[0][0] = Expr::constant(1.0);
    return adj;
  }
  if (k == 2) {
    adj[0][0] = m[1][1];
    adj[0][1] = Expr::constant(-1.0) * m[0][1];
    adj[1][0] = Expr::constant(-1.0) * m[1][0];
    adj[1][1] = m[0][0];
    return adj;
  }
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      std::size_t r1 = (r + 1) % 3, r2 = (r + 2) % 3;
      std::size_t c1 = (c + 1) % 3, c2 = (c + 2) % 3;
      // cofactor of (c, r) lands at (r, c) in the adjugate; the cyclic shift keeps signs
      adj[r][c] = m[c1][r1] * m[c2][r2] - m[c1][r2] * m[c2][r1];
    }
  return adj;
}

// LU with partial pivoting; returns false when a pivot collapses
bool lu_solve(std::vector<std::vector<double>> a, std::vector<double> b,
              std::vector<double>& out, double* det = nullptr) {
  const std::size_t k = a.size();
  double d = 1.0;
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (piv != col) {
      std::swap(a[piv], a[col]);
      std::swap(b[piv], b[col]);
      d = -d;
    }
    double p = a[col][col];
    d *= p;
    if (p == 0.0 || !std::isfinite(p)) {
      if (det) *det = 0.0;
      return false;
    }
    for (std::size_t r = col + 1; r < k; ++r) {
      double factor = a[r][col] / p;
      for (std::size_t c = col; c < k; ++c) a[r][c] -= factor * a[col][c];
      b[r] -= factor * b[col];
    }
  }
  out.assign(k, 0.0);
  for (std::size_t r = k; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < k; ++c) s -= a[r][c] * out[c];
    out[r] = s / a[r][r];
  }
  if (det) *det = d;
  return true;
}

double lu_det(std::vector<std::vector<double>> a) {
  const std::size_t k = a.size();
  double d = 1.0;
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (piv != col) {
      std::swap(a[piv], a[col]);
      d = -d;
    }
    double p = a[col][col];
    if (p == 0.0) return 0.0;
    d *= p;
    for (std::size_t r = col + 1; r < k; ++r) {
      double factor = a[r][col] / p;
      for (std::size_t c = col; c < k; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  return d;
}

std::vector<std::vector<double>> eval_matrix(const std::vector<std::vector<Expr>>& m,
                                             const Env& env) {
  std::vector<std::vector<double>> out(m.size(), std::vector<double>(m.size(), 0.0));
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m.size(); ++c) out[r][c] = eval(m[r][c], env);
  return out;
}

void reject_singular_hessian(const AffineAlgebroid& alg,
                             const std::vector<std::vector<Expr>>& w) {
  const SampleDomain& dom = alg.domain();
  const std::size_t k = w.size();
  SampleRng rng(dom.seed);

  double max_entry = 0.0;
  double min_det = std::numeric_limits<double>::infinity();
  std::vector<std::pair<VarId, double>> worst;
  for (int s = 0; s < dom.samples; ++s) {
    Env env;
    std::vector<std::pair<VarId, double>> point;
    for (const auto& [v, iv] : dom.intervals) {
      double value = rng.uniform(iv.lo, iv.hi);
      env.set(v, value);
      point.emplace_back(v, value);
    }
    auto numeric = eval_matrix(w, env);
    for (const auto& row : numeric)
      for (double e : row) max_entry = std::max(max_entry, std::abs(e));
    double d = std::abs(lu_det(numeric));
    if (d < min_det) {
      min_det = d;
      worst = point;
    }
  }

  double threshold = 1e-10 * std::pow(std::max(1.0, max_entry), static_cast<double>(k));
  if (!(min_det > threshold)) {
    std::ostringstream msg;
    msg << "fibre hessian of the lagrangian is singular (|det| = " << min_det
        << ", threshold " << threshold << ") near";
    for (const auto& [v, value] : worst) msg << ' ' << to_string(v) << '=' << value;
    throw SingularHessian(msg.str(), worst, min_det);
  }
}

}  // namespace

std::vector<std::vector<Expr>> hessian(const AffineAlgebroid& alg, const Expr& lagrangian) {
  check_lagrangian(alg, lagrangian);
  const int k = alg.fibre_dim();
  std::vector<std::vector<Expr>> w(static_cast<std::size_t>(k),
                                   std::vector<Expr>(static_cast<std::size_t>(k)));
  for (int a = 1; a <= k; ++a) {
    Expr da = diff(lagrangian, var_y(a));
    for (int b = 1; b <= k; ++b)
      w[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(b - 1)] = diff(da, var_y(b));
  }
  return w;
}

std::vector<Expr> lagrange_rhs(const AffineAlgebroid& alg, const Expr& lagrangian) {
  check_lagrangian(alg, lagrangian);
  const int n = alg.base_dim();
  const int k = alg.fibre_dim();
  std::vector<Expr> rhs(static_cast<std::size_t>(k));
  for (int a = 1; a <= k; ++a) {
    Expr da = diff(lagrangian, var_y(a));
    Expr total;
    for (int i = 1; i <= n; ++i) total = total + alg.rho(i, a) * diff(lagrangian, var_x(i));
    for (int g = 1; g <= k; ++g) {
      Expr coeff = alg.c0(g, a);
      for (int b = 1; b <= k; ++b)
        coeff = coeff - alg.c(g, a, b) * Expr::variable(var_y(b));
      total = total + coeff * diff(lagrangian, var_y(g));
    }
    total = total - diff(da, var_t());
    for (int i = 1; i <= n; ++i) {
      Expr speed = alg.lambda(i);
      for (int b = 1; b <= k; ++b)
        speed = speed + alg.rho(i, b) * Expr::variable(var_y(b));
      total = total - speed * diff(da, var_x(i));
    }
    rhs[static_cast<std::size_t>(a - 1)] = total;
  }
  return rhs;
}

PseudoSode lagrange_sode(const AffineAlgebroid& alg, const Expr& lagrangian) {
  const int k = alg.fibre_dim();
  auto w = hessian(alg, lagrangian);
  auto rhs = lagrange_rhs(alg, lagrangian);
  reject_singular_hessian(alg, w);

  if (k <= 3) {
    Expr det = det_small(w);
    auto adj = adjugate_small(w);
    std::vector<Expr> force(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) {
      Expr num;
      for (int b = 0; b < k; ++b)
        num = num + adj[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] *
                        rhs[static_cast<std::size_t>(b)];
      force[static_cast<std::size_t>(a)] = num / det;
    }
    return PseudoSode(alg, std::move(force));
  }

  auto fn = [w, rhs](double t, const std::vector<double>& x,
                     const std::vector<double>& y) -> std::vector<double> {
    Env env;
    env.set(var_t(), t);
    for (std::size_t i = 0; i < x.size(); ++i) env.set(var_x(static_cast<int>(i) + 1), x[i]);
    for (std::size_t a = 0; a < y.size(); ++a) env.set(var_y(static_cast<int>(a) + 1), y[a]);
    std::vector<double> b(rhs.size());
    for (std::size_t a = 0; a < rhs.size(); ++a) b[a] = eval(rhs[a], env);
    std::vector<double> out;
    if (!lu_solve(eval_matrix(w, env), std::move(b), out))
      throw EvalError("fibre hessian is singular along the trajectory");
    return out;
  };
  return PseudoSode(alg, std::move(fn));
}

double lagrange_residual(const AffineAlgebroid& alg, const Expr& lagrangian,
                         const Trajectory& traj) {
  check_lagrangian(alg, lagrangian);
  if (traj.points.size() < 3)
    throw std::invalid_argument("need at least three trajectory points");
  const int n = alg.base_dim();
  const int k = alg.fibre_dim();

  std::vector<Expr> momentum(static_cast<std::size_t>(k));
  std::vector<Expr> target(static_cast<std::size_t>(k));
  for (int a = 1; a <= k; ++a) {
    momentum[static_cast<std::size_t>(a - 1)] = diff(lagrangian, var_y(a));
    Expr tg;
    for (int i = 1; i <= n; ++i) tg = tg + alg.rho(i, a) * diff(lagrangian, var_x(i));
    for (int g = 1; g <= k; ++g) {
      Expr coeff = alg.c0(g, a);
      for (int b = 1; b <= k; ++b)
        coeff = coeff - alg.c(g, a, b) * Expr::variable(var_y(b));
      tg = tg + coeff * diff(lagrangian, var_y(g));
    }
    target[static_cast<std::size_t>(a - 1)] = tg;
  }

  auto env_at = [&](const TrajectoryPoint& p) {
    Env env;
    env.set(var_t(), p.t);
    for (std::size_t i = 0; i < p.x.size(); ++i)
      env.set(var_x(static_cast<int>(i) + 1), p.x[i]);
    for (std::size_t a = 0; a < p.y.size(); ++a)
      env.set(var_y(static_cast<int>(a) + 1), p.y[a]);
    return env;
  };

  double worst = 0.0;
  for (std::size_t r = 1; r + 1 < traj.points.size(); ++r) {
    const TrajectoryPoint& pm = traj.points[r - 1];
    const TrajectoryPoint& p0 = traj.points[r];
    const TrajectoryPoint& pp = traj.points[r + 1];
    double ta = pm.t - p0.t;
    double tb = pp.t - p0.t;
    Env em = env_at(pm), e0 = env_at(p0), ep = env_at(pp);
    for (int a = 0; a < k; ++a) {
      double gm = eval(momentum[static_cast<std::size_t>(a)], em);
      double g0 = eval(momentum[static_cast<std::size_t>(a)], e0);
      double gp = eval(momentum[static_cast<std::size_t>(a)], ep);
      double deriv = -gm * tb / (ta * (ta - tb)) - g0 * (ta + tb) / (ta * tb) -
                     gp * ta / (tb * (tb - ta));
      double expect = eval(target[static_cast<std::size_t>(a)], e0);
      worst = std::max(worst, std::abs(deriv - expect));
    }
  }
  return worst;
}

}  // namespace affalg
