#include "affalg/io.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "affalg/lagrange.hpp"
#include "affalg/poisson.hpp"
#include "affalg/prolong.hpp"

namespace affalg {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

Expr parse_entry(const json& v, const std::string& where) {
  if (!v.is_string())
    throw std::invalid_argument(where + ": expected an expression string");
  try {
    return parse(v.get<std::string>());
  } catch (const ParseError& e) {
    throw std::invalid_argument(where + ": " + e.what());
  }
}

const json& member(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return *it;
}

int int_member(const json& j, const char* key) {
  const json& v = member(j, key);
  if (!v.is_number_integer())
    throw std::invalid_argument(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

VarId domain_var(const std::string& name) {
  if (name == "t") return var_t();
  if (name.size() >= 2 && (name[0] == 'x' || name[0] == 'y') && name[1] != '0') {
    int idx = 0;
    auto res = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
    if (res.ec == std::errc() && res.ptr == name.data() + name.size() && idx >= 1)
      return name[0] == 'x' ? var_x(idx) : var_y(idx);
  }
  throw std::invalid_argument("domain key '" + name + "' is not a coordinate name");
}

std::string index_key(const MultiIndex& idx) {
  std::string out;
  for (std::size_t q = 0; q < idx.size(); ++q) {
    if (q > 0) out += ',';
    out += std::to_string(idx[q]);
  }
  return out;
}

MultiIndex parse_index_key(const std::string& key, int expected_size, const char* table) {
  MultiIndex idx;
  if (!key.empty()) {
    std::size_t pos = 0;
    while (pos <= key.size()) {
      std::size_t comma = key.find(',', pos);
      std::string token = key.substr(pos, comma == std::string::npos ? comma : comma - pos);
      if (token.empty() || (token.size() > 1 && token[0] == '0'))
        throw std::invalid_argument(std::string(table) + " key '" + key +
                                    "' is not a canonical index list");
      int value = 0;
      auto res = std::from_chars(token.data(), token.data() + token.size(), value);
      if (res.ec != std::errc() || res.ptr != token.data() + token.size() || value < 1)
        throw std::invalid_argument(std::string(table) + " key '" + key +
                                    "' is not a canonical index list");
      if (!idx.empty() && value <= idx.back())
        throw std::invalid_argument(std::string(table) + " key '" + key +
                                    "' must be strictly ascending");
      idx.push_back(value);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  if (static_cast<int>(idx.size()) != expected_size)
    throw std::invalid_argument(std::string(table) + " key '" + key +
                                "' has the wrong number of indices");
  return idx;
}

// the immutable algebroid is reassembled entry by entry when only the domain changes
AffineAlgebroid with_domain(const AffineAlgebroid& alg, SampleDomain dom) {
  const int n = alg.base_dim();
  const int k = alg.fibre_dim();
  std::vector<std::vector<std::vector<Expr>>> c(
      static_cast<std::size_t>(k),
      std::vector<std::vector<Expr>>(static_cast<std::size_t>(k),
                                     std::vector<Expr>(static_cast<std::size_t>(k))));
  std::vector<std::vector<Expr>> c0(static_cast<std::size_t>(k),
                                    std::vector<Expr>(static_cast<std::size_t>(k)));
  for (int g = 1; g <= k; ++g)
    for (int a = 1; a <= k; ++a) {
      c0[static_cast<std::size_t>(g - 1)][static_cast<std::size_t>(a - 1)] = alg.c0(g, a);
      for (int b = 1; b <= k; ++b)
        c[static_cast<std::size_t>(g - 1)][static_cast<std::size_t>(a - 1)]
         [static_cast<std::size_t>(b - 1)] = alg.c(g, a, b);
    }
  std::vector<Expr> lam(static_cast<std::size_t>(n));
  std::vector<std::vector<Expr>> rho(static_cast<std::size_t>(n),
                                     std::vector<Expr>(static_cast<std::size_t>(k)));
  for (int i = 1; i <= n; ++i) {
    lam[static_cast<std::size_t>(i - 1)] = alg.lambda(i);
    for (int a = 1; a <= k; ++a)
      rho[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(a - 1)] = alg.rho(i, a);
  }
  return AffineAlgebroid(n, k, c, c0, lam, rho, std::move(dom));
}

void check_base_vocabulary(const AffineAlgebroid& alg, const Expr& e, const std::string& what) {
  for (VarId v : free_vars(e)) {
    bool ok = v.kind == VarKind::T || (v.kind == VarKind::X && v.index <= alg.base_dim());
    if (!ok)
      throw std::invalid_argument(what + " may only use t and base coordinates, found " +
                                  to_string(v));
  }
}

}  // namespace

AffineAlgebroid load_spec_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("spec must be a JSON object");
  const int n = int_member(j, "n");
  const int k = int_member(j, "k");
  if (n < 0) throw std::invalid_argument("n must be nonnegative");
  if (k < 1) throw std::invalid_argument("k must be positive");

  auto array_of = [](const json& v, std::size_t size, const std::string& where) -> const json& {
    if (!v.is_array() || v.size() != size)
      throw std::invalid_argument(where + ": expected an array of length " +
                                  std::to_string(size));
    return v;
  };

  const json& jlam = array_of(member(j, "lambda"), static_cast<std::size_t>(n), "lambda");
  std::vector<Expr> lam;
  for (int i = 0; i < n; ++i)
    lam.push_back(parse_entry(jlam[static_cast<std::size_t>(i)],
                              "lambda[" + std::to_string(i) + "]"));

  const json& jrho = array_of(member(j, "rho"), static_cast<std::size_t>(n), "rho");
  std::vector<std::vector<Expr>> rho;
  for (int i = 0; i < n; ++i) {
    std::string where = "rho[" + std::to_string(i) + "]";
    const json& row = array_of(jrho[static_cast<std::size_t>(i)], static_cast<std::size_t>(k),
                               where);
    std::vector<Expr> out;
    for (int a = 0; a < k; ++a)
      out.push_back(parse_entry(row[static_cast<std::size_t>(a)],
                                where + "[" + std::to_string(a) + "]"));
    rho.push_back(std::move(out));
  }

  const json& jc = array_of(member(j, "C"), static_cast<std::size_t>(k), "C");
  std::vector<std::vector<std::vector<Expr>>> c;
  for (int g = 0; g < k; ++g) {
    std::string wg = "C[" + std::to_string(g) + "]";
    const json& block = array_of(jc[static_cast<std::size_t>(g)], static_cast<std::size_t>(k),
                                 wg);
    std::vector<std::vector<Expr>> rows;
    for (int a = 0; a < k; ++a) {
      std::string wa = wg + "[" + std::to_string(a) + "]";
      const json& row = array_of(block[static_cast<std::size_t>(a)],
                                 static_cast<std::size_t>(k), wa);
      std::vector<Expr> out;
      for (int b = 0; b < k; ++b)
        out.push_back(parse_entry(row[static_cast<std::size_t>(b)],
                                  wa + "[" + std::to_string(b) + "]"));
      rows.push_back(std::move(out));
    }
    c.push_back(std::move(rows));
  }

  const json& jc0 = array_of(member(j, "C0"), static_cast<std::size_t>(k), "C0");
  std::vector<std::vector<Expr>> c0;
  for (int b = 0; b < k; ++b) {
    std::string where = "C0[" + std::to_string(b) + "]";
    const json& row = array_of(jc0[static_cast<std::size_t>(b)], static_cast<std::size_t>(k),
                               where);
    std::vector<Expr> out;
    for (int a = 0; a < k; ++a)
      out.push_back(parse_entry(row[static_cast<std::size_t>(a)],
                                where + "[" + std::to_string(a) + "]"));
    c0.push_back(std::move(out));
  }

  const json& jdom = member(j, "domain");
  if (!jdom.is_object()) throw std::invalid_argument("domain must be an object");
  SampleDomain dom;
  for (auto it = jdom.begin(); it != jdom.end(); ++it) {
    VarId v = domain_var(it.key());
    bool known = v.kind == VarKind::T || (v.kind == VarKind::X && v.index <= n) ||
                 (v.kind == VarKind::Y && v.index <= k);
    if (!known)
      throw std::invalid_argument("domain key '" + it.key() + "' is out of range");
    const json& iv = it.value();
    if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number())
      throw std::invalid_argument("domain['" + it.key() + "'] must be [lo, hi]");
    double lo = iv[0].get<double>();
    double hi = iv[1].get<double>();
    if (!(lo <= hi))
      throw std::invalid_argument("domain['" + it.key() + "'] bounds are reversed");
    dom.intervals[v] = Interval{lo, hi};
  }
  auto need = [&](VarId v) {
    if (dom.intervals.find(v) == dom.intervals.end())
      throw std::invalid_argument("domain is missing an interval for " + to_string(v));
  };
  need(var_t());
  for (int i = 1; i <= n; ++i) need(var_x(i));
  for (int a = 1; a <= k; ++a) need(var_y(a));

  if (j.contains("samples")) {
    dom.samples = int_member(j, "samples");
    if (dom.samples < 1) throw std::invalid_argument("samples must be positive");
  }
  if (j.contains("tol")) {
    const json& v = j["tol"];
    if (!v.is_number()) throw std::invalid_argument("tol must be a number");
    dom.tolerance = v.get<double>();
    if (!(dom.tolerance > 0.0)) throw std::invalid_argument("tol must be positive");
  }
  if (j.contains("seed")) {
    const json& v = j["seed"];
    if (!v.is_number_integer()) throw std::invalid_argument("seed must be an integer");
    dom.seed = static_cast<std::uint64_t>(v.get<long long>());
  }

  return AffineAlgebroid(n, k, c, c0, lam, rho, std::move(dom));
}

AffineAlgebroid load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open spec file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  try {
    return load_spec_json(j);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

ordered_json save_spec(const AffineAlgebroid& alg) {
  const int n = alg.base_dim();
  const int k = alg.fibre_dim();
  ordered_json j;
  j["n"] = n;
  j["k"] = k;

  ordered_json lam = ordered_json::array();
  for (int i = 1; i <= n; ++i) lam.push_back(to_string(alg.lambda(i)));
  j["lambda"] = std::move(lam);

  ordered_json rho = ordered_json::array();
  for (int i = 1; i <= n; ++i) {
    ordered_json row = ordered_json::array();
    for (int a = 1; a <= k; ++a) row.push_back(to_string(alg.rho(i, a)));
    rho.push_back(std::move(row));
  }
  j["rho"] = std::move(rho);

  ordered_json c = ordered_json::array();
  for (int g = 1; g <= k; ++g) {
    ordered_json block = ordered_json::array();
    for (int a = 1; a <= k; ++a) {
      ordered_json row = ordered_json::array();
      for (int b = 1; b <= k; ++b) row.push_back(to_string(alg.c(g, a, b)));
      block.push_back(std::move(row));
    }
    c.push_back(std::move(block));
  }
  j["C"] = std::move(c);

  ordered_json c0 = ordered_json::array();
  for (int b = 1; b <= k; ++b) {
    ordered_json row = ordered_json::array();
    for (int a = 1; a <= k; ++a) row.push_back(to_string(alg.c0(b, a)));
    c0.push_back(std::move(row));
  }
  j["C0"] = std::move(c0);

  const SampleDomain& dom = alg.domain();
  ordered_json jdom = ordered_json::object();
  for (const auto& [v, iv] : dom.intervals)
    jdom[to_string(v)] = ordered_json::array({iv.lo, iv.hi});
  j["domain"] = std::move(jdom);
  j["samples"] = dom.samples;
  j["tol"] = dom.tolerance;
  j["seed"] = static_cast<long long>(dom.seed);
  return j;
}

Form form_from_json(const json& j, int fibre_dim) {
  if (!j.is_object()) throw std::invalid_argument("form must be a JSON object");
  const int degree = int_member(j, "degree");
  Form w(fibre_dim, degree);
  if (j.contains("coeff0")) {
    const json& table = j["coeff0"];
    if (!table.is_object()) throw std::invalid_argument("coeff0 must be an object");
    for (auto it = table.begin(); it != table.end(); ++it) {
      MultiIndex idx = parse_index_key(it.key(), degree - 1, "coeff0");
      w.set_zero_part(idx, parse_entry(it.value(), "coeff0['" + it.key() + "']"));
    }
  }
  if (j.contains("coeffB")) {
    const json& table = j["coeffB"];
    if (!table.is_object()) throw std::invalid_argument("coeffB must be an object");
    for (auto it = table.begin(); it != table.end(); ++it) {
      MultiIndex idx = parse_index_key(it.key(), degree, "coeffB");
      w.set_vector_part(idx, parse_entry(it.value(), "coeffB['" + it.key() + "']"));
    }
  }
  return w;
}

ordered_json form_to_json(const Form& w) {
  ordered_json j;
  j["degree"] = w.degree();
  ordered_json zero = ordered_json::object();
  for (const auto& [idx, e] : w.zero_table()) zero[index_key(idx)] = to_string(e);
  ordered_json vec = ordered_json::object();
  for (const auto& [idx, e] : w.vector_table()) vec[index_key(idx)] = to_string(e);
  j["coeff0"] = std::move(zero);
  j["coeffB"] = std::move(vec);
  return j;
}

Section section_from_json(const json& j, int fibre_dim) {
  if (!j.is_object()) throw std::invalid_argument("section must be a JSON object");
  const json& kind = member(j, "kind");
  if (!kind.is_string() ||
      (kind.get<std::string>() != "affine" && kind.get<std::string>() != "vector"))
    throw std::invalid_argument("section kind must be \"affine\" or \"vector\"");
  const json& comps = member(j, "components");
  if (!comps.is_array() || comps.size() != static_cast<std::size_t>(fibre_dim))
    throw std::invalid_argument("section needs " + std::to_string(fibre_dim) +
                                " components");
  std::vector<Expr> out;
  for (std::size_t q = 0; q < comps.size(); ++q)
    out.push_back(parse_entry(comps[q], "components[" + std::to_string(q) + "]"));
  return kind.get<std::string>() == "affine" ? Section::affine(std::move(out))
                                             : Section::vector(std::move(out));
}

ordered_json section_to_json(const Section& s) {
  ordered_json j;
  j["kind"] = s.is_affine() ? "affine" : "vector";
  ordered_json comps = ordered_json::array();
  for (const Expr& e : s.components) comps.push_back(to_string(e));
  j["components"] = std::move(comps);
  return j;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t";
  if (!traj.points.empty()) {
    for (std::size_t i = 1; i <= traj.points.front().x.size(); ++i)
      out += ",x" + std::to_string(i);
    for (std::size_t a = 1; a <= traj.points.front().y.size(); ++a)
      out += ",y" + std::to_string(a);
  }
  out += '\n';
  for (const TrajectoryPoint& p : traj.points) {
    out += format_double(p.t);
    for (double v : p.x) out += ',' + format_double(v);
    for (double v : p.y) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

namespace {

AffineAlgebroid load_for_cli(const std::string& path) {
  AffineAlgebroid alg = load_spec(path);
  const char* env = std::getenv("AFFALG_SEED");
  if (env == nullptr || *env == '\0') return alg;
  long long value = 0;
  std::string text(env);
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::invalid_argument("AFFALG_SEED must be an integer, got '" + text + "'");
  SampleDomain dom = alg.domain();
  dom.seed = static_cast<std::uint64_t>(value);
  return with_domain(alg, std::move(dom));
}

json parse_inline_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(what) + ": " + e.what());
  }
}

void emit(std::ostream& out, const ordered_json& j) { out << j.dump(2) << '\n'; }

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open output file: " + path);
  f << content;
  if (!f) throw std::invalid_argument("failed writing output file: " + path);
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("affalg");
  for (const std::string& s : args) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"affine algebroid toolkit"};
  app.require_subcommand(1);
  bool timings = false;
  app.add_flag("--timings", timings, "attach wall-clock timings to reports");

  std::string spec_path;
  std::string first_json, second_json, form_json_text, section_json_text;
  std::string lagrangian_text, out_path;
  std::vector<std::string> force_text;
  std::vector<double> init;
  int degree = 1;
  int trials = 20;
  double t0 = 0.0, t1 = 1.0, step = 1e-3;

  auto* validate_cmd = app.add_subcommand("validate", "check the structure identities");
  validate_cmd->add_option("spec", spec_path, "algebroid spec file")->required();

  auto* bracket_cmd = app.add_subcommand("bracket", "bracket of two sections");
  bracket_cmd->add_option("spec", spec_path)->required();
  bracket_cmd->add_option("--first", first_json, "section JSON")->required();
  bracket_cmd->add_option("--second", second_json, "section JSON")->required();

  auto* d_cmd = app.add_subcommand("d", "exterior derivative of a form");
  d_cmd->add_option("spec", spec_path)->required();
  d_cmd->add_option("--form", form_json_text, "form JSON")->required();

  auto* d2_cmd = app.add_subcommand("d2check", "residual of the squared derivative");
  d2_cmd->add_option("spec", spec_path)->required();
  d2_cmd->add_option("--degree", degree, "form degree to draw");
  d2_cmd->add_option("--trials", trials, "number of random forms");

  auto* lie_cmd = app.add_subcommand("lie", "Lie derivative of a form along a section");
  lie_cmd->add_option("spec", spec_path)->required();
  lie_cmd->add_option("--form", form_json_text, "form JSON")->required();
  lie_cmd->add_option("--section", section_json_text, "section JSON")->required();

  auto* sim_cmd = app.add_subcommand("simulate", "integrate a dynamics law");
  sim_cmd->add_option("spec", spec_path)->required();
  sim_cmd->add_option("--force", force_text, "force expression per fibre coordinate")
      ->required();
  sim_cmd->add_option("--init", init, "initial x then y values")->required();
  sim_cmd->add_option("--t0", t0, "start time");
  sim_cmd->add_option("--t1", t1, "end time")->required();
  sim_cmd->add_option("--step", step, "step size")->required();
  sim_cmd->add_option("--out", out_path, "trajectory CSV path");

  auto* lag_cmd = app.add_subcommand("lagrange", "dynamics generated by a Lagrangian");
  lag_cmd->add_option("spec", spec_path)->required();
  lag_cmd->add_option("--L", lagrangian_text, "Lagrangian expression")->required();
  lag_cmd->add_option("--init", init, "initial x then y values");
  lag_cmd->add_option("--t0", t0, "start time");
  lag_cmd->add_option("--t1", t1, "end time");
  lag_cmd->add_option("--step", step, "step size");
  lag_cmd->add_option("--out", out_path, "trajectory CSV path");

  auto* prolong_cmd = app.add_subcommand("prolong", "emit the prolonged algebroid spec");
  prolong_cmd->add_option("spec", spec_path)->required();

  auto* poisson_cmd = app.add_subcommand("poisson", "momentum-space bracket report");
  poisson_cmd->add_option("spec", spec_path)->required();
  poisson_cmd->add_option("--trials", trials, "random polynomial triples");

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 2;
  }

  try {
    Stopwatch clock;

    if (*validate_cmd) {
      AffineAlgebroid alg = load_for_cli(spec_path);
      AxiomReport report = alg.check_axioms();
      ordered_json j;
      j["command"] = "validate";
      j["spec"] = spec_path;
      j["samples"] = alg.domain().samples;
      j["seed"] = static_cast<long long>(alg.domain().seed);
      j["tolerance"] = report.tolerance;
      j["pass"] = report.pass;
      ordered_json checks = ordered_json::array();
      for (const AxiomCheck& c : report.checks) {
        ordered_json e;
        e["name"] = c.name;
        e["residual"] = c.residual;
        e["tolerance"] = report.tolerance;
        e["pass"] = c.pass;
        // per-check timing is opt-in so default report bytes stay reproducible
        if (timings) e["wall_time_ms"] = c.wall_ms;
        checks.push_back(std::move(e));
      }
      j["checks"] = std::move(checks);
      if (timings) j["wall_time_ms"] = clock.ms();
      emit(out, j);
      return report.pass ? 0 : 1;
    }

    if (*bracket_cmd) {
      AffineAlgebroid alg = load_for_cli(spec_path);
      Section s1 = section_from_json(parse_inline_json(first_json, "--first"),
                                     alg.fibre_dim());
      Section s2 = section_from_json(parse_inline_json(second_json, "--second"),
                                     alg.fibre_dim());
      for (const Expr& e : s1.components) check_base_vocabulary(alg, e, "--first");
      for (const Expr& e : s2.components) check_base_vocabulary(alg, e, "--second");
      emit(out, section_to_json(alg.bracket(s1, s2)));
      return 0;
    }

    if (*d_cmd) {
      AffineAlgebroid alg = load_for_cli(spec_path);
      Form w = form_from_json(parse_inline_json(form_json_text, "--form"), alg.fibre_dim());
      for (const auto& [idx, e] : w.zero_table()) check_base_vocabulary(alg, e, "--form");
      for (const auto& [idx, e] : w.vector_table()) check_base_vocabulary(alg, e, "--form");
      emit(out, form_to_json(d_coord(alg, w)));
      return 0;
    }

    if (*d2_cmd) {
      AffineAlgebroid alg = load_for_cli(spec_path);
      if (degree < 0) throw std::invalid_argument("--degree must be nonnegative");
      if (trials < 1) throw std::invalid_argument("--trials must be positive");
      SampleRng rng(alg.domain().seed);
      double worst = 0.0;
      for (int trial = 0; trial < trials; ++trial) {
        Form w = random_form(rng, alg, degree);
        worst = std::max(worst,
                         max_coefficient_residual(alg, d_coord(alg, d_coord(alg, w))));
      }
      bool pass = worst <= alg.domain().tolerance;
      ordered_json j;
      j["command"] = "d2check";
      j["spec"] = spec_path;
      j["degree"] = degree;
      j["trials"] = trials;
      j["seed"] = static_cast<long long>(alg.domain().seed);
      j["max_residual"] = worst;
      j["tolerance"] = alg.domain().tolerance;
      j["pass"] = pass;
      if (timings) j["wall_time_ms"] = clock.ms();
      emit(out, j);
      return pass ? 0 : 1;
    }

    if (*lie_cmd) {
      AffineAlgebroid alg = load_for_cli(spec_path);
      Form w = form_from_json(parse_inline_json(form_json_text, "--form"), alg.fibre_dim());
      Section s = section_from_json(parse_inline_json(section_json_text, "--section"),
                                    alg.fibre_dim());
      for (const auto& [idx, e] : w.zero_table()) check_base_vocabulary(alg, e, "--form");
      for (const auto& [idx, e] : w.vector_table()) check_base_vocabulary(alg, e, "--form");
      for (const Expr& e : s.components) check_base_vocabulary(alg, e, "--section");
      emit(out, form_to_json(lie(alg, s, w)));
      return 0;
    }

    if (*sim_cmd) {
      AffineAlgebroid alg = load_for_cli(spec_path);
      const int n = alg.base_dim();
      const int k = alg.fibre_dim();
      if (static_cast<int>(force_text.size()) != k)
        throw std::invalid_argument("--force needs exactly " + std::to_string(k) +
                                    " expressions");
      if (static_cast<int>(init.size()) != n + k)
        throw std::invalid_argument("--init needs " + std::to_string(n + k) +
                                    " values (x then y)");
      std::vector<Expr> force;
      for (const std::string& f : force_text) {
        try {
          force.push_back(parse(f));
        } catch (const ParseError& e) {
          throw std::invalid_argument(std::string("--force: ") + e.what());
        }
      }
      PseudoSode sode(alg, std::move(force));
      std::vector<double> x0(init.begin(), init.begin() + n);
      std::vector<double> y0(init.begin() + n, init.end());
      Trajectory traj = integrate(sode, t0, t1, step, x0, y0);
      ordered_json j;
      j["command"] = "simulate";
      j["spec"] = spec_path;
      j["t0"] = t0;
      j["t1"] = t1;
      j["step"] = step;
      j["points"] = traj.points.size();
      if (traj.points.size() >= 3)
        j["admissibility_residual"] = admissibility_residual(sode, traj);
      if (!out_path.empty()) {
        write_file(out_path, trajectory_csv(traj));
        j["out"] = out_path;
      }
      if (timings) j["wall_time_ms"] = clock.ms();
      emit(out, j);
      return 0;
    }

    if (*lag_cmd) {
      AffineAlgebroid alg = load_for_cli(spec_path);
      const int n = alg.base_dim();
      const int k = alg.fibre_dim();
      Expr lagrangian;
      try {
        lagrangian = parse(lagrangian_text);
      } catch (const ParseError& e) {
        throw std::invalid_argument(std::string("--L: ") + e.what());
      }

      ordered_json j;
      j["command"] = "lagrange";
      j["spec"] = spec_path;
      j["L"] = lagrangian_text;
      PseudoSode sode = [&]() {
        try {
          return lagrange_sode(alg, lagrangian);
        } catch (const SingularHessian& e) {
          j["pass"] = false;
          j["error"] = e.what();
          if (timings) j["wall_time_ms"] = clock.ms();
          emit(out, j);
          err << e.what() << '\n';
          throw;
        }
      }();

      if (!sode.force.empty()) {
        ordered_json force = ordered_json::array();
        for (const Expr& f : sode.force) force.push_back(to_string(f));
        j["force"] = std::move(force);
      } else {
        j["force"] = nullptr;
        j["numeric_force"] = true;
      }

      bool wants_run = lag_cmd->count("--init") > 0 || lag_cmd->count("--t1") > 0 ||
                       lag_cmd->count("--step") > 0;
      if (wants_run) {
        if (static_cast<int>(init.size()) != n + k)
          throw std::invalid_argument("--init needs " + std::to_string(n + k) +
                                      " values (x then y)");
        std::vector<double> x0(init.begin(), init.begin() + n);
        std::vector<double> y0(init.begin() + n, init.end());
        Trajectory traj = integrate(sode, t0, t1, step, x0, y0);
        j["t0"] = t0;
        j["t1"] = t1;
        j["step"] = step;
        j["points"] = traj.points.size();
        if (traj.points.size() >= 3) {
          j["lagrange_residual"] = lagrange_residual(alg, lagrangian, traj);
          j["admissibility_residual"] = admissibility_residual(sode, traj);
        }
        if (!out_path.empty()) {
          write_file(out_path, trajectory_csv(traj));
          j["out"] = out_path;
        }
      }
      j["pass"] = true;
      if (timings) j["wall_time_ms"] = clock.ms();
      emit(out, j);
      return 0;
    }

    if (*prolong_cmd) {
      AffineAlgebroid alg = load_for_cli(spec_path);
      emit(out, save_spec(prolong(alg)));
      return 0;
    }

    if (*poisson_cmd) {
      AffineAlgebroid alg = load_for_cli(spec_path);
      if (trials < 1) throw std::invalid_argument("--trials must be positive");
      PoissonSpace ps(alg);
      ordered_json table;
      auto put = [&](VarId u, VarId v) {
        table[to_string(u) + "," + to_string(v)] = to_string(ps.coordinate_bracket(u, v));
      };
      put(var_p0(), var_t());
      for (int i = 1; i <= alg.base_dim(); ++i) put(var_p0(), var_x(i));
      for (int b = 1; b <= alg.fibre_dim(); ++b) put(var_p0(), var_p(b));
      for (int a = 1; a <= alg.fibre_dim(); ++a)
        for (int i = 1; i <= alg.base_dim(); ++i) put(var_p(a), var_x(i));
      for (int a = 1; a <= alg.fibre_dim(); ++a)
        for (int b = a + 1; b <= alg.fibre_dim(); ++b) put(var_p(a), var_p(b));

      double coord = ps.coordinate_jacobi_residual();
      double random = ps.jacobi_residual(trials, alg.domain().seed);
      bool pass = std::max(coord, random) <= alg.domain().tolerance;
      ordered_json j;
      j["command"] = "poisson";
      j["spec"] = spec_path;
      j["table"] = std::move(table);
      j["coordinate_jacobi_residual"] = coord;
      j["random_jacobi_residual"] = random;
      j["trials"] = trials;
      j["tolerance"] = alg.domain().tolerance;
      j["pass"] = pass;
      if (timings) j["wall_time_ms"] = clock.ms();
      emit(out, j);
      return pass ? 0 : 1;
    }

    err << "no subcommand selected\n";
    return 2;
  } catch (const SingularHessian&) {
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace affalg
