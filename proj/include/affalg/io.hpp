#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "affalg/dynamics.hpp"
#include "affalg/form.hpp"

namespace affalg {

// Algebroid description files: {n, k, lambda, rho, C, C0, domain, samples, tol, seed}.
// Structure entries are expression strings; C[g][a][b] and C0[b][a] use upper index
// first; domain maps coordinate names to [lo, hi] pairs and must cover t, every x and
// every y.  samples, tol and seed are optional (64, 1e-9, 0).
AffineAlgebroid load_spec_json(const nlohmann::json& j);
AffineAlgebroid load_spec(const std::string& path);
nlohmann::ordered_json save_spec(const AffineAlgebroid& alg);

// Forms travel as {degree, coeff0: {"1,3": "expr"}, coeffB: {...}}.  Keys are
// comma-joined ascending indices (empty string for the empty index); anything
// non-canonical is rejected.
Form form_from_json(const nlohmann::json& j, int fibre_dim);
nlohmann::ordered_json form_to_json(const Form& w);

// Sections travel as {"kind": "affine"|"vector", "components": ["expr", ...]}.
Section section_from_json(const nlohmann::json& j, int fibre_dim);
nlohmann::ordered_json section_to_json(const Section& s);

// Header t,x1..xn,y1..yk then one row per recorded step.
std::string trajectory_csv(const Trajectory& traj);

// Command-line driver.  Subcommands: validate, bracket, d, d2check, lie, simulate,
// lagrange, prolong, poisson.  Reports go to `out` as JSON, diagnostics to `err`.
// Returns 0 on pass, 1 when a check fails, 2 on usage or input errors.  The
// environment variable AFFALG_SEED overrides the seed of any loaded spec.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace affalg
