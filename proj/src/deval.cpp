#include "affalg/deval.hpp"

#include <stdexcept>

namespace affalg {

FormFunc as_func(const AffineAlgebroid& alg, const Form& w) {
  FormFunc out;
  out.degree = w.degree();
  out.eval = [alg, w](const std::vector<Section>& args) { return eval_form(alg, w, args); };
  return out;
}

namespace {

std::vector<Section> erase_at(const std::vector<Section>& args, std::size_t i) {
  std::vector<Section> out;
  out.reserve(args.size() - 1);
  for (std::size_t q = 0; q < args.size(); ++q)
    if (q != i) out.push_back(args[q]);
  return out;
}

Expr eval_affine_core(const AffineAlgebroid& alg, const FormFunc& w,
                      const std::vector<Section>& args) {
  Expr total;
  for (std::size_t i = 0; i < args.size(); ++i) {
    Expr term = alg.anchor_apply(args[i], w.eval(erase_at(args, i)));
    total = i % 2 == 0 ? total + term : total - term;
  }
  for (std::size_t i = 0; i < args.size(); ++i)
    for (std::size_t j = i + 1; j < args.size(); ++j) {
      std::vector<Section> rest;
      rest.reserve(args.size() - 1);
      rest.push_back(alg.bracket(args[i], args[j]));
      for (std::size_t q = 0; q < args.size(); ++q)
        if (q != i && q != j) rest.push_back(args[q]);
      Expr term = w.eval(rest);
      total = (i + j) % 2 == 0 ? total + term : total - term;
    }
  return total;
}

}  // namespace

FormFunc d_eval(const AffineAlgebroid& alg, FormFunc w) {
  FormFunc out;
  out.degree = w.degree + 1;
  out.eval = [alg, w](const std::vector<Section>& args) {
    if (args.size() != static_cast<std::size_t>(w.degree) + 1)
      throw std::invalid_argument("argument count does not match the form degree");
    // resolve vector arguments one at a time against the reference section
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i].is_affine()) continue;
      Section reference = e0_section(static_cast<int>(args[i].components.size()));
      std::vector<Section> plus = args;
      plus[i] = add(reference, args[i]);
      std::vector<Section> base = args;
      base[i] = reference;
      FormFunc self{w.degree + 1,
                    [alg, w](const std::vector<Section>& inner) {
                      return d_eval(alg, w).eval(inner);
                    }};
      return self.eval(plus) - self.eval(base);
    }
    return eval_affine_core(alg, w, args);
  };
  return out;
}

D2Defect d2_defect(const AffineAlgebroid& alg, const Form& w, const std::vector<Section>& args) {
  if (args.size() != static_cast<std::size_t>(w.degree()) + 2)
    throw std::invalid_argument("need degree + 2 arguments");
  for (const Section& s : args)
    if (!s.is_affine()) throw std::invalid_argument("arguments must be affine sections");

  D2Defect out;
  out.lhs = d_eval(alg, d_eval(alg, as_func(alg, w))).eval(args);

  Expr rhs;
  const std::size_t m = args.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      std::vector<Section> rest;
      for (std::size_t q = 0; q < m; ++q)
        if (q != i && q != j) rest.push_back(args[q]);
      Expr inner = eval_form(alg, w, rest);
      std::vector<Expr> mismatch = alg.anchor_mismatch(args[i], args[j]);
      Expr term;
      for (int d = 1; d <= alg.base_dim(); ++d)
        term = term + mismatch[static_cast<std::size_t>(d - 1)] * diff(inner, var_x(d));
      rhs = (i + j) % 2 == 0 ? rhs + term : rhs - term;
    }

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      for (std::size_t l = j + 1; l < m; ++l) {
        Section cyc = add(add(alg.bracket(args[i], alg.bracket(args[j], args[l])),
                              alg.bracket(args[j], alg.bracket(args[l], args[i]))),
                          alg.bracket(args[l], alg.bracket(args[i], args[j])));
        std::vector<Section> rest;
        rest.push_back(cyc);
        for (std::size_t q = 0; q < m; ++q)
          if (q != i && q != j && q != l) rest.push_back(args[q]);
        Expr term = eval_form(alg, w, rest);
        // the cyclic term enters with the sign opposite to the one-based (-1)^(i+j+l)
        rhs = (i + j + l) % 2 == 0 ? rhs + term : rhs - term;
      }

  out.rhs = rhs;
  return out;
}

}  // namespace affalg
