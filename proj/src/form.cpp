#include "affalg/form.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace affalg {

CanonicalIndex canonicalize(MultiIndex idx) {
  int sign = 1;
  for (std::size_t i = 1; i < idx.size(); ++i)
    for (std::size_t j = i; j > 0 && idx[j - 1] > idx[j]; --j) {
      std::swap(idx[j - 1], idx[j]);
      sign = -sign;
    }
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (idx[i - 1] == idx[i]) return {0, std::move(idx)};
  return {sign, std::move(idx)};
}

std::optional<std::pair<int, MultiIndex>> merge_disjoint(const MultiIndex& a,
                                                         const MultiIndex& b) {
  MultiIndex merged;
  merged.reserve(a.size() + b.size());
  std::size_t ia = 0, ib = 0;
  int sign = 1;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] == b[ib]) return std::nullopt;
    if (a[ia] < b[ib]) {
      merged.push_back(a[ia++]);
    } else {
      // b[ib] jumps over every remaining element of a
      if ((a.size() - ia) % 2 == 1) sign = -sign;
      merged.push_back(b[ib++]);
    }
  }
  while (ia < a.size()) merged.push_back(a[ia++]);
  while (ib < b.size()) merged.push_back(b[ib++]);
  return std::make_pair(sign, std::move(merged));
}

Form::Form(int fibre_dim, int degree) : k_(fibre_dim), degree_(degree) {
  if (k_ < 1) throw std::invalid_argument("form needs fibre dimension >= 1");
  if (degree_ < 0) throw std::invalid_argument("form degree must be non-negative");
}

Form Form::function(int fibre_dim, const Expr& f) {
  Form w(fibre_dim, 0);
  w.set_vector_part({}, f);
  return w;
}

Form Form::e0(int fibre_dim) {
  Form w(fibre_dim, 1);
  w.set_zero_part({}, Expr::constant(1.0));
  return w;
}

Form Form::basis(int fibre_dim, int alpha) {
  Form w(fibre_dim, 1);
  w.set_vector_part({alpha}, Expr::constant(1.0));
  return w;
}

void Form::check_index(const MultiIndex& idx, int size) const {
  if (static_cast<int>(idx.size()) != size)
    throw std::invalid_argument("multi-index size does not match the form degree");
  for (int i : idx)
    if (i < 1 || i > k_) throw std::invalid_argument("multi-index entry out of range");
}

void Form::set_zero_part(const MultiIndex& idx, const Expr& value) {
  if (degree_ == 0) throw std::invalid_argument("degree-0 forms have no e0-slot table");
  check_index(idx, degree_ - 1);
  auto canon = canonicalize(idx);
  if (canon.sign == 0) throw std::invalid_argument("multi-index has a repeated entry");
  Expr stored = canon.sign < 0 ? -value : value;
  if (stored.is_constant(0.0))
    zero_.erase(canon.idx);
  else
    zero_[std::move(canon.idx)] = stored;
}

void Form::set_vector_part(const MultiIndex& idx, const Expr& value) {
  check_index(idx, degree_);
  auto canon = canonicalize(idx);
  if (canon.sign == 0) throw std::invalid_argument("multi-index has a repeated entry");
  Expr stored = canon.sign < 0 ? -value : value;
  if (stored.is_constant(0.0))
    vector_.erase(canon.idx);
  else
    vector_[std::move(canon.idx)] = stored;
}

namespace {

Expr signed_lookup(const std::map<MultiIndex, Expr>& table, const MultiIndex& idx) {
  auto canon = canonicalize(idx);
  if (canon.sign == 0) return Expr();
  auto it = table.find(canon.idx);
  if (it == table.end()) return Expr();
  return canon.sign < 0 ? -it->second : it->second;
}

void bump(std::map<MultiIndex, Expr>& table, const MultiIndex& idx, const Expr& delta) {
  auto canon = canonicalize(idx);
  if (canon.sign == 0) return;
  Expr signed_delta = canon.sign < 0 ? -delta : delta;
  auto it = table.find(canon.idx);
  Expr updated = it == table.end() ? signed_delta : it->second + signed_delta;
  if (updated.is_constant(0.0)) {
    if (it != table.end()) table.erase(it);
  } else if (it == table.end()) {
    table.emplace(std::move(canon.idx), std::move(updated));
  } else {
    it->second = std::move(updated);
  }
}

}  // namespace

Expr Form::zero_part(const MultiIndex& idx) const {
  if (degree_ == 0) return Expr();
  check_index(idx, degree_ - 1);
  return signed_lookup(zero_, idx);
}

Expr Form::vector_part(const MultiIndex& idx) const {
  check_index(idx, degree_);
  return signed_lookup(vector_, idx);
}

void Form::bump_zero(const MultiIndex& idx, const Expr& delta) {
  if (degree_ == 0) throw std::invalid_argument("degree-0 forms have no e0-slot table");
  check_index(idx, degree_ - 1);
  bump(zero_, idx, delta);
}

void Form::bump_vector(const MultiIndex& idx, const Expr& delta) {
  check_index(idx, degree_);
  bump(vector_, idx, delta);
}

FormDecomposition decompose(const Form& w) { return {w.zero_table(), w.vector_table()}; }

namespace {

void require_compatible(const Form& a, const Form& b) {
  if (a.fibre_dim() != b.fibre_dim())
    throw std::invalid_argument("forms live over different fibre dimensions");
}

void validate_form(const AffineAlgebroid& alg, const Form& w) {
  if (w.fibre_dim() != alg.fibre_dim())
    throw std::invalid_argument("form fibre dimension does not match the algebroid");
}

void validate_arg(const AffineAlgebroid& alg, const Section& s) {
  if (s.components.size() != static_cast<std::size_t>(alg.fibre_dim()))
    throw std::invalid_argument("section has wrong fibre dimension");
}

}  // namespace

Form add(const Form& a, const Form& b) {
  require_compatible(a, b);
  if (a.degree() != b.degree()) throw std::invalid_argument("cannot add forms of different degree");
  Form out = a;
  for (const auto& [idx, e] : b.zero_table()) out.bump_zero(idx, e);
  for (const auto& [idx, e] : b.vector_table()) out.bump_vector(idx, e);
  return out;
}

Form scale(const Expr& f, const Form& w) {
  Form out(w.fibre_dim(), w.degree());
  for (const auto& [idx, e] : w.zero_table()) out.bump_zero(idx, f * e);
  for (const auto& [idx, e] : w.vector_table()) out.bump_vector(idx, f * e);
  return out;
}

Form wedge(const Form& a, const Form& b) {
  require_compatible(a, b);
  const int ka = a.degree();
  Form out(a.fibre_dim(), ka + b.degree());

  for (const auto& [ia, ea] : a.vector_table())
    for (const auto& [ib, eb] : b.vector_table())
      if (auto m = merge_disjoint(ia, ib))
        out.bump_vector(m->second, Expr::constant(m->first) * ea * eb);

  // e0-slot: zero_part(a) against vector_part(b), plus the graded swap
  for (const auto& [ia, ea] : a.zero_table())
    for (const auto& [ib, eb] : b.vector_table())
      if (auto m = merge_disjoint(ia, ib))
        out.bump_zero(m->second, Expr::constant(m->first) * ea * eb);

  const double swap_sign = ka % 2 == 0 ? 1.0 : -1.0;
  for (const auto& [ia, ea] : a.vector_table())
    for (const auto& [ib, eb] : b.zero_table())
      if (auto m = merge_disjoint(ia, ib))
        out.bump_zero(m->second, Expr::constant(swap_sign * m->first) * ea * eb);

  return out;
}

Form contract(const AffineAlgebroid& alg, const Form& w, const Section& s) {
  validate_form(alg, w);
  validate_arg(alg, s);
  if (w.degree() == 0) throw std::invalid_argument("cannot contract a degree-0 form");

  Form out(w.fibre_dim(), w.degree() - 1);

  // distribute the contracted slot over each table entry
  for (const auto& [idx, e] : w.vector_table())
    for (std::size_t r = 0; r < idx.size(); ++r) {
      MultiIndex rest;
      rest.reserve(idx.size() - 1);
      for (std::size_t q = 0; q < idx.size(); ++q)
        if (q != r) rest.push_back(idx[q]);
      double sign = r % 2 == 0 ? 1.0 : -1.0;
      out.bump_vector(rest, Expr::constant(sign) * s.components[idx[r] - 1] * e);
    }

  if (w.degree() >= 2)
    for (const auto& [idx, e] : w.zero_table())
      for (std::size_t r = 0; r < idx.size(); ++r) {
        MultiIndex rest;
        rest.reserve(idx.size() - 1);
        for (std::size_t q = 0; q < idx.size(); ++q)
          if (q != r) rest.push_back(idx[q]);
        double sign = r % 2 == 0 ? -1.0 : 1.0;
        out.bump_zero(rest, Expr::constant(sign) * s.components[idx[r] - 1] * e);
      }

  if (s.is_affine())
    for (const auto& [idx, e] : w.zero_table()) out.bump_vector(idx, e);

  return out;
}

namespace {

// Skew multilinear evaluation of one table on component columns: for every
// table entry, the minor determinant of the component matrix it selects.
Expr eval_minor(const MultiIndex& rows, const std::vector<const std::vector<Expr>*>& cols,
                std::size_t col0) {
  if (rows.empty()) return Expr::constant(1.0);
  Expr out;
  MultiIndex rest;
  rest.reserve(rows.size() - 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rest.clear();
    for (std::size_t q = 0; q < rows.size(); ++q)
      if (q != r) rest.push_back(rows[q]);
    Expr entry = cols[col0]->at(static_cast<std::size_t>(rows[r] - 1));
    Expr term = entry * eval_minor(rest, cols, col0 + 1);
    out = r % 2 == 0 ? out + term : out - term;
  }
  return out;
}

Expr eval_table(const std::map<MultiIndex, Expr>& table,
                const std::vector<const std::vector<Expr>*>& cols) {
  Expr out;
  for (const auto& [idx, e] : table) out = out + e * eval_minor(idx, cols, 0);
  return out;
}

}  // namespace

Expr eval_form(const AffineAlgebroid& alg, const Form& w, const std::vector<Section>& args) {
  return eval_form_with_reference(alg, w, args, e0_section(alg.fibre_dim()));
}

Expr eval_form_with_reference(const AffineAlgebroid& alg, const Form& w,
                              const std::vector<Section>& args, const Section& reference) {
  validate_form(alg, w);
  if (!reference.is_affine())
    throw std::invalid_argument("reference section must be affine");
  validate_arg(alg, reference);
  if (args.size() != static_cast<std::size_t>(w.degree()))
    throw std::invalid_argument("argument count does not match the form degree");

  // components relative to the reference: affine arguments are shifted
  std::vector<std::vector<Expr>> shifted;
  shifted.reserve(args.size());
  for (const Section& s : args) {
    validate_arg(alg, s);
    std::vector<Expr> comps = s.components;
    if (s.is_affine())
      for (std::size_t a = 0; a < comps.size(); ++a)
        comps[a] = comps[a] - reference.components[a];
    shifted.push_back(std::move(comps));
  }

  std::vector<const std::vector<Expr>*> cols;
  cols.reserve(args.size());
  for (const auto& comps : shifted) cols.push_back(&comps);
  Expr out = eval_table(w.vector_table(), cols);

  for (std::size_t i = 0; i < args.size(); ++i) {
    if (!args[i].is_affine()) continue;
    std::vector<const std::vector<Expr>*> rest;
    rest.reserve(args.size() - 1);
    for (std::size_t j = 0; j < args.size(); ++j)
      if (j != i) rest.push_back(&shifted[j]);
    Expr zero_term = eval_table(w.zero_table(), rest);
    // the e0-slot operator relative to the reference also sees its components
    std::vector<const std::vector<Expr>*> with_ref;
    with_ref.reserve(args.size());
    with_ref.push_back(&reference.components);
    for (const auto* comps : rest) with_ref.push_back(comps);
    Expr term = zero_term + eval_table(w.vector_table(), with_ref);
    out = i % 2 == 0 ? out + term : out - term;
  }
  return out;
}

namespace {

Form d_function(const AffineAlgebroid& alg, const Expr& f) {
  const int k = alg.fibre_dim();
  Form out(k, 1);
  Expr drift = diff(f, var_t());
  for (int i = 1; i <= alg.base_dim(); ++i) drift = drift + alg.lambda(i) * diff(f, var_x(i));
  out.set_zero_part({}, drift);
  for (int a = 1; a <= k; ++a) {
    Expr slope;
    for (int i = 1; i <= alg.base_dim(); ++i) slope = slope + alg.rho(i, a) * diff(f, var_x(i));
    out.set_vector_part({a}, slope);
  }
  return out;
}

Form d_basis(const AffineAlgebroid& alg, int alpha) {
  const int k = alg.fibre_dim();
  Form out(k, 2);
  for (int b = 1; b <= k; ++b) out.set_zero_part({b}, -alg.c0(alpha, b));
  for (int b = 1; b <= k; ++b)
    for (int g = b + 1; g <= k; ++g) out.set_vector_part({b, g}, -alg.c(alpha, b, g));
  return out;
}

Form wedge_chain(int k, const MultiIndex& idx) {
  Form out = Form::function(k, Expr::constant(1.0));
  for (int i : idx) out = wedge(out, Form::basis(k, i));
  return out;
}

// d(e^{i1} ^ ... ^ e^{im}) by the graded Leibniz rule
Form d_chain(const AffineAlgebroid& alg, const MultiIndex& idx) {
  const int k = alg.fibre_dim();
  Form out(k, static_cast<int>(idx.size()) + 1);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    MultiIndex before(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(r));
    MultiIndex after(idx.begin() + static_cast<std::ptrdiff_t>(r) + 1, idx.end());
    Form piece = wedge(wedge_chain(k, before), wedge(d_basis(alg, idx[r]), wedge_chain(k, after)));
    if (r % 2 == 1) piece = scale(Expr::constant(-1.0), piece);
    out = add(out, piece);
  }
  return out;
}

}  // namespace

Form d_coord(const AffineAlgebroid& alg, const Form& w) {
  validate_form(alg, w);
  const int k = alg.fibre_dim();
  Form out(k, w.degree() + 1);
  const Form e0f = Form::e0(k);

  for (const auto& [idx, coeff] : w.zero_table()) {
    Form base = wedge(e0f, wedge_chain(k, idx));
    out = add(out, wedge(d_function(alg, coeff), base));
    // d(e0 ^ e^I) = -e0 ^ d(e^I)
    out = add(out, scale(-coeff, wedge(e0f, d_chain(alg, idx))));
  }
  for (const auto& [idx, coeff] : w.vector_table()) {
    out = add(out, wedge(d_function(alg, coeff), wedge_chain(k, idx)));
    out = add(out, scale(coeff, d_chain(alg, idx)));
  }
  return out;
}

Form lie(const AffineAlgebroid& alg, const Section& s, const Form& w) {
  if (w.degree() == 0) return contract(alg, d_coord(alg, w), s);
  return add(contract(alg, d_coord(alg, w), s), d_coord(alg, contract(alg, w, s)));
}

Section lie_section(const AffineAlgebroid& alg, const Section& s, const Section& target) {
  return alg.bracket(s, target);
}

double max_coefficient_residual(const AffineAlgebroid& alg, const Form& w) {
  validate_form(alg, w);
  std::vector<Expr> entries;
  for (const auto& [idx, e] : w.zero_table()) entries.push_back(e);
  for (const auto& [idx, e] : w.vector_table()) entries.push_back(e);
  return max_abs_on_samples(entries, alg.domain());
}

namespace {

Expr random_poly_in(SampleRng& rng, const std::vector<VarId>& vars, int max_degree) {
  Expr out = Expr::constant(rng.uniform(-1.0, 1.0));
  if (max_degree >= 1)
    for (VarId v : vars)
      out = out + Expr::constant(rng.uniform(-1.0, 1.0)) * Expr::variable(v);
  if (max_degree >= 2 && !vars.empty()) {
    auto pick = [&] {
      return vars[static_cast<std::size_t>(rng.uniform(0.0, 0.999) *
                                           static_cast<double>(vars.size()))];
    };
    VarId a = pick();
    VarId b = pick();
    out = out + Expr::constant(rng.uniform(-1.0, 1.0)) * Expr::variable(a) * Expr::variable(b);
  }
  return out;
}

// ascending multi-indices of the given size drawn from 1..k
void each_ascending(int k, int size, const std::function<void(const MultiIndex&)>& fn) {
  if (size > k) return;
  MultiIndex idx(static_cast<std::size_t>(size));
  for (int i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i + 1;
  for (;;) {
    fn(idx);
    int pos = size - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == k - (size - 1 - pos)) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int q = pos + 1; q < size; ++q)
      idx[static_cast<std::size_t>(q)] = idx[static_cast<std::size_t>(q - 1)] + 1;
  }
}

}  // namespace

Form random_form(SampleRng& rng, const AffineAlgebroid& alg, int degree, int max_poly_degree) {
  const int k = alg.fibre_dim();
  Form w(k, degree);
  if (degree > k + 1) return w;

  std::vector<VarId> vars;
  vars.push_back(var_t());
  for (int i = 1; i <= alg.base_dim(); ++i) vars.push_back(var_x(i));

  if (degree >= 1)
    each_ascending(k, degree - 1, [&](const MultiIndex& idx) {
      w.set_zero_part(idx, random_poly_in(rng, vars, max_poly_degree));
    });
  if (degree <= k)
    each_ascending(k, degree, [&](const MultiIndex& idx) {
      w.set_vector_part(idx, random_poly_in(rng, vars, max_poly_degree));
    });
  return w;
}

}  // namespace affalg
