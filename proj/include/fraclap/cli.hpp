#pragma once

// Config-driven front end shared by the fraclap executable and its tests.
// Needs nlohmann/json (vendor/json.hpp) and OpenSSL's libcrypto for content hashes.

#include <filesystem>
#include <fstream>
#include <map>

#include <Eigen/Core>
#include <gsl/gsl_version.h>
#include <openssl/evp.h>

#include "fraclap.hpp"
#include "json.hpp"

namespace fraclap::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum class Problem { dirichlet, neumann, riesz, minimize, verify };

inline const char* problem_name(Problem p) {
  switch (p) {
    case Problem::dirichlet: return "dirichlet";
    case Problem::neumann: return "neumann";
    case Problem::riesz: return "riesz";
    case Problem::minimize: return "minimize";
    case Problem::verify: return "verify";
  }
  return "?";
}

struct SourceSpec {
  std::string expr = "0";  // g0
  std::string gm, gp;      // optional weak-form weights on D_- v and D_+ v
  std::string csv;         // g0 from a CSV file instead of expr
  std::optional<Exponents> csv_tags;
};

struct VerifySpec {
  std::string function;
  HarmonicKind kind = HarmonicKind::left;
  std::size_t n_cells = 1024;
  double tol = 1e-3;
};

struct ProblemConfig {
  Interval iv{0.0, 1.0};
  FracParams params;
  Problem problem = Problem::dirichlet;
  SourceSpec source;
  std::size_t n_dof = 64;
  double grading = 0.0;
  int quad_nodes = 8;
  BasisKind basis = BasisKind::PiecewiseLinear;
  bool zero_trace = true;          // minimize only; dirichlet always constrains, neumann never
  bool kernel_enrichment = false;
  bool riesz_density = false;      // minimize with the Riesz p-energy
  double g_left = 0.0, g_right = 0.0;
  std::map<std::string, double> tolerances;
  std::optional<VerifySpec> verify;
  fs::path output = "out";
  fs::path config_path;

  double tol(const std::string& key, double dflt) const {
    auto it = tolerances.find(key);
    return it == tolerances.end() ? dflt : it->second;
  }
};

// ---------------------------------------------------------------------------
// Parsing and validation. Unknown keys are rejected so that typos do not pass silently.

namespace detail {
[[noreturn]] inline void bad(const std::string& msg) { throw error(errc::config, msg); }

inline void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) bad("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T get(const json& j, const char* key, T dflt) {
  if (!j.contains(key)) return dflt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("key '") + key + "' has the wrong type");
  }
}

inline Problem parse_problem(const std::string& s) {
  if (s == "dirichlet") return Problem::dirichlet;
  if (s == "neumann") return Problem::neumann;
  if (s == "riesz") return Problem::riesz;
  if (s == "minimize") return Problem::minimize;
  if (s == "verify") return Problem::verify;
  bad("problem must be one of dirichlet, neumann, riesz, minimize, verify");
}

inline HarmonicKind parse_kind(const std::string& s) {
  if (s == "left") return HarmonicKind::left;
  if (s == "right") return HarmonicKind::right;
  if (s == "symmetric") return HarmonicKind::symmetric;
  if (s == "riesz") return HarmonicKind::riesz;
  bad("verify.kind must be left, right, symmetric or riesz");
}

inline std::optional<Exponents> parse_tags(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const auto& t = j.at(key);
  if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number()) bad(std::string(key) + " must be [ea, eb]");
  return Exponents{t[0].get<double>(), t[1].get<double>()};
}
}  // namespace detail

/// JSON schema of the config, published with the tool (`fraclap schema`).
inline json config_schema() {
  return json::parse(R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "title": "fraclap problem config",
  "type": "object",
  "required": ["params", "problem"],
  "additionalProperties": false,
  "properties": {
    "interval": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    "params": {
      "type": "object", "required": ["alpha"], "additionalProperties": false,
      "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "p": {"type": "number", "exclusiveMinimum": 1},
        "theta": {"type": "number", "minimum": 0, "maximum": 1},
        "lambda": {"enum": [0, 1]}
      }
    },
    "problem": {"enum": ["dirichlet", "neumann", "riesz", "minimize", "verify"]},
    "source": {
      "oneOf": [
        {"type": "string"},
        {"type": "object", "additionalProperties": false,
         "properties": {"expr": {"type": "string"}, "gm": {"type": "string"}, "gp": {"type": "string"},
                        "csv": {"type": "string"}, "tags": {"type": "array", "items": {"type": "number"}}}}
      ]
    },
    "boundary": {"type": "object", "additionalProperties": false,
                 "properties": {"g_left": {"type": "number"}, "g_right": {"type": "number"}}},
    "discretization": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "n_dof": {"type": "integer", "minimum": 2},
        "grading": {"type": "number", "minimum": 0},
        "quad_nodes": {"type": "integer", "minimum": 2, "maximum": 20},
        "basis": {"enum": ["hat", "poly"]},
        "zero_trace": {"type": "boolean"},
        "kernel_enrichment": {"type": "boolean"}
      }
    },
    "density": {"enum": ["p_theta", "riesz"]},
    "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
    "verify": {
      "type": "object", "required": ["function"], "additionalProperties": false,
      "properties": {
        "function": {"type": "string"},
        "kind": {"enum": ["left", "right", "symmetric", "riesz"]},
        "n_cells": {"type": "integer", "minimum": 8},
        "tol": {"type": "number", "exclusiveMinimum": 0}
      }
    },
    "output": {"type": "string"}
  }
})");
}

inline ProblemConfig parse_config(const json& j, const fs::path& config_path = {}) {
  using namespace detail;
  if (!j.is_object()) bad("config must be a JSON object");
  only_keys(j, {"interval", "params", "problem", "source", "boundary", "discretization", "density", "tolerances", "verify",
                "output"},
            "config");
  ProblemConfig c;
  c.config_path = config_path;
  if (j.contains("interval")) {
    const auto& iv = j.at("interval");
    if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number()) bad("interval must be [a, b]");
    const double a = iv[0].get<double>(), b = iv[1].get<double>();
    if (!(std::isfinite(a) && std::isfinite(b) && a < b)) bad("interval needs finite a < b");
    c.iv = {a, b};
  }
  if (!j.contains("params") || !j.at("params").is_object()) bad("params object is required");
  const auto& P = j.at("params");
  only_keys(P, {"alpha", "p", "theta", "lambda"}, "params");
  if (!P.contains("alpha")) bad("params.alpha is required");
  c.params.alpha = get<double>(P, "alpha", 0.5);
  c.params.p = get<double>(P, "p", 2.0);
  c.params.theta = get<double>(P, "theta", 0.0);
  c.params.lambda = get<int>(P, "lambda", 0);
  c.params.validate();
  if (!j.contains("problem")) bad("problem is required");
  c.problem = parse_problem(get<std::string>(j, "problem", ""));

  if (j.contains("source")) {
    const auto& s = j.at("source");
    if (s.is_string()) {
      c.source.expr = s.get<std::string>();
    } else if (s.is_object()) {
      only_keys(s, {"expr", "gm", "gp", "csv", "tags"}, "source");
      c.source.expr = get<std::string>(s, "expr", "0");
      c.source.gm = get<std::string>(s, "gm", "");
      c.source.gp = get<std::string>(s, "gp", "");
      c.source.csv = get<std::string>(s, "csv", "");
      c.source.csv_tags = parse_tags(s, "tags");
      if (!c.source.csv.empty() && s.contains("expr")) bad("source takes expr or csv, not both");
    } else {
      bad("source must be an expression string or an object");
    }
  }
  if (j.contains("boundary")) {
    const auto& b = j.at("boundary");
    only_keys(b, {"g_left", "g_right"}, "boundary");
    c.g_left = get<double>(b, "g_left", 0.0);
    c.g_right = get<double>(b, "g_right", 0.0);
  }
  if (j.contains("discretization")) {
    const auto& d = j.at("discretization");
    only_keys(d, {"n_dof", "grading", "quad_nodes", "basis", "zero_trace", "kernel_enrichment"}, "discretization");
    const int n = get<int>(d, "n_dof", 64);
    if (n < 2) bad("discretization.n_dof must be at least 2");
    c.n_dof = static_cast<std::size_t>(n);
    c.grading = get<double>(d, "grading", 0.0);
    if (c.grading < 0) bad("discretization.grading must be >= 0");
    c.quad_nodes = get<int>(d, "quad_nodes", 8);
    if (c.quad_nodes < 2 || c.quad_nodes > 20) bad("discretization.quad_nodes must lie in [2, 20]");
    const std::string bk = get<std::string>(d, "basis", "hat");
    if (bk == "hat") c.basis = BasisKind::PiecewiseLinear;
    else if (bk == "poly") c.basis = BasisKind::SpectralPoly;
    else bad("discretization.basis must be hat or poly");
    c.zero_trace = get<bool>(d, "zero_trace", true);
    c.kernel_enrichment = get<bool>(d, "kernel_enrichment", false);
  }
  if (j.contains("density")) {
    const std::string dn = get<std::string>(j, "density", "p_theta");
    if (dn != "p_theta" && dn != "riesz") bad("density must be p_theta or riesz");
    c.riesz_density = dn == "riesz";
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    if (!t.is_object()) bad("tolerances must be an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      if (!it.value().is_number()) bad("tolerance '" + it.key() + "' must be a number");
      c.tolerances[it.key()] = it.value().get<double>();
    }
  }
  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    only_keys(v, {"function", "kind", "n_cells", "tol"}, "verify");
    VerifySpec vs;
    vs.function = get<std::string>(v, "function", "");
    if (vs.function.empty()) bad("verify.function is required");
    vs.kind = parse_kind(get<std::string>(v, "kind", "left"));
    const int nc = get<int>(v, "n_cells", 1024);
    if (nc < 8) bad("verify.n_cells must be at least 8");
    vs.n_cells = static_cast<std::size_t>(nc);
    vs.tol = get<double>(v, "tol", 1e-3);
    c.verify = vs;
  }
  if (c.problem == Problem::verify && !c.verify) bad("problem verify needs a verify block");
  c.output = get<std::string>(j, "output", "out");
  if (c.output.is_relative() && !config_path.empty()) c.output = config_path.parent_path() / c.output;
  if (!c.source.csv.empty()) {
    fs::path p = c.source.csv;
    if (p.is_relative() && !config_path.empty()) p = config_path.parent_path() / p;
    if (!fs::exists(p)) throw error(errc::io, "source file " + p.string() + " does not exist");
    c.source.csv = p.string();
  }
  return c;
}

inline ProblemConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw error(errc::config, std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j, path);
}

// ---------------------------------------------------------------------------
// Hashing and output

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr)) throw error(errc::io, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw error(errc::io, "cannot read " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_json(const json& j, const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw error(errc::io, "cannot write " + p.string());
  out << j.dump(2) << '\n';
}

inline void write_trace_csv(const std::vector<double>& trace, const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw error(errc::io, "cannot write " + p.string());
  out << "iteration,energy\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << fmt17(trace[i]) << '\n';
}

/// Non-finite values are not JSON numbers; they become strings.
inline json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? json("nan") : json(v > 0 ? "inf" : "-inf");
}

inline json versions() {
  return {{"fraclap", version},
          {"gsl", GSL_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"compiler", __VERSION__},
          {"cxx", static_cast<long>(__cplusplus)}};
}

// ---------------------------------------------------------------------------
// Dispatch

struct RunResult {
  int exit_code = 0;
  json report;
  std::vector<fs::path> files;
};

inline Load make_load(const ProblemConfig& c) {
  Load f;
  if (!c.source.csv.empty()) {
    f = Load::grid(read_csv(c.source.csv, c.source.csv_tags));
  } else {
    const Expr e = parse_expression(c.source.expr);
    f.g0 = PointFn([e](const Pt& p) { return e(p); });
  }
  if (!c.source.gm.empty()) {
    const Expr e = parse_expression(c.source.gm);
    f.gm = PointFn([e](const Pt& p) { return e(p); });
  }
  if (!c.source.gp.empty()) {
    const Expr e = parse_expression(c.source.gp);
    f.gp = PointFn([e](const Pt& p) { return e(p); });
  }
  return f;
}

inline BasisOptions basis_options(const ProblemConfig& c) {
  BasisOptions bo;
  bo.kind = c.basis;
  bo.n_dof = c.n_dof;
  bo.grading = c.grading;
  bo.quad = QuadOptions{c.quad_nodes, 3, true};
  bo.kernel_enrichment = c.kernel_enrichment;
  return bo;
}

namespace detail {
// Report entries that may legitimately fail are recorded with their error instead.
template <class F>
json attempt(F&& f) {
  try {
    return f();
  } catch (const error& e) {
    return json{{"error", e.what()}};
  }
}

inline json norm_json(const GridFunction& u, const SpaceTag& tag) {
  return attempt([&] {
    const NormReport n = compute_norm(u, tag);
    return json{{"space", space_name(tag.kind)},
                {"lp", num(n.lp_part)},
                {"left_seminorm", num(n.left_seminorm)},
                {"right_seminorm", num(n.right_seminorm)},
                {"riesz_seminorm", num(n.riesz_seminorm)},
                {"total", num(n.total)}};
  });
}

inline json neumann_json(const GridFunction& u, const FracParams& pr) {
  json out = json::object();
  if (pr.theta < 1.0)
    out["left"] = attempt([&] {
      const auto n = neumann_value(u, pr.alpha, pr.p, Side::left);
      return json{{"value", num(n.value)}, {"extrapolation_spread", num(n.extrapolation_spread)}};
    });
  if (pr.theta > 0.0)
    out["right"] = attempt([&] {
      const auto n = neumann_value(u, pr.alpha, pr.p, Side::right);
      return json{{"value", num(n.value)}, {"extrapolation_spread", num(n.extrapolation_spread)}};
    });
  return out;
}

inline json solve_json(const SolveReport& r) {
  return {{"energy", num(r.energy)},
          {"weak_residual", num(r.weak_residual)},
          {"condition_estimate", num(r.condition_estimate)},
          {"min_eigenvalue", num(r.min_eigenvalue)},
          {"n_dof", r.n_dof},
          {"iterations", r.iterations}};
}

inline json harmonic_json(const HarmonicReport& h) {
  json per = json::object();
  for (const auto& [name, v] : h.per_function) per[name] = num(v);
  return {{"residual", num(h.residual)}, {"tolerance", h.tolerance}, {"harmonic", h.harmonic}, {"per_function", per}};
}
}  // namespace detail

/// Solves or verifies one config and writes solution.csv, report.json and manifest.json
/// (plus energy_trace.csv for minimize). `check` adds a posteriori checks that set exit code 3
/// when they fail.
inline RunResult run(const ProblemConfig& c, bool check = false) {
  using namespace detail;
  RunResult res;
  fs::create_directories(c.output);
  json rep;
  rep["problem"] = problem_name(c.problem);
  rep["params"] = {{"alpha", c.params.alpha}, {"p", c.params.p}, {"theta", c.params.theta}, {"lambda", c.params.lambda}};
  rep["interval"] = {c.iv.a, c.iv.b};
  json checks = json::object();
  bool checks_ok = true;
  auto add_check = [&](const std::string& name, double value, double tol) {
    const bool ok = std::isfinite(value) && value <= tol;
    checks[name] = {{"value", num(value)}, {"tolerance", tol}, {"pass", ok}};
    checks_ok = checks_ok && ok;
  };
  GridFunction solution;
  bool have_solution = false;

  switch (c.problem) {
    case Problem::dirichlet: {
      const SpaceTag tag = select_space(c.params, true);
      BasisOptions bo = basis_options(c);
      bo.zero_trace = true;
      const Basis B = make_basis(c.params, c.iv, bo);
      const GalerkinSystem S = assemble(c.params, B, make_load(c));
      const SolveReport r = solve_dirichlet(S, c.g_left, c.g_right);
      solution = r.solution;
      have_solution = true;
      rep["space"] = space_name(tag.kind);
      rep["solve"] = solve_json(r);
      rep["norm"] = norm_json(r.solution, tag);
      if (check) add_check("weak_residual", r.weak_residual, c.tol("weak_residual", 1e-8));
      break;
    }
    case Problem::neumann: {
      const SpaceTag tag = select_space(c.params, false);
      BasisOptions bo = basis_options(c);
      bo.zero_trace = false;
      const Basis B = make_basis(c.params, c.iv, bo);
      const GalerkinSystem S = assemble(c.params, B, make_load(c));
      const SolveReport r = solve_neumann(S);
      solution = r.solution;
      have_solution = true;
      rep["space"] = space_name(tag.kind);
      rep["solve"] = solve_json(r);
      rep["norm"] = norm_json(r.solution, tag);
      rep["neumann"] = neumann_json(r.solution, c.params);
      if (check) {
        add_check("weak_residual", r.weak_residual, c.tol("weak_residual", 1e-8));
        double nmax = 0.0;
        for (const auto& [side, v] : rep["neumann"].items())
          nmax = v.contains("value") && v["value"].is_number() ? std::max(nmax, std::abs(v["value"].get<double>()))
                                                              : HUGE_VAL;
        add_check("natural_condition", nmax, c.tol("neumann", 1e-3));
      }
      break;
    }
    case Problem::riesz: {
      const SpaceTag tag = riesz_space(c.params);
      BasisOptions bo = basis_options(c);
      bo.riesz = true;
      FracParams pr = c.params;
      pr.theta = 0.5;
      const Basis B = make_basis(pr, c.iv, bo);
      const SolveReport r = solve_riesz(c.params.alpha, c.params.lambda, make_load(c), B);
      solution = r.solution;
      have_solution = true;
      rep["space"] = space_name(tag.kind);
      rep["norm_check"] = riesz_norm_check(c.params.alpha, c.params.p);
      rep["solve"] = solve_json(r);
      rep["norm"] = norm_json(r.solution, tag);
      if (check) add_check("weak_residual", r.weak_residual, c.tol("weak_residual", c.params.p == 2.0 ? 1e-8 : 1e-6));
      break;
    }
    case Problem::minimize: {
      if (c.zero_trace && !c.riesz_density) select_space(c.params, true);
      BasisOptions bo = basis_options(c);
      bo.zero_trace = c.zero_trace;
      bo.riesz = c.riesz_density;
      FracParams pr = c.params;
      if (c.riesz_density) pr.theta = 0.5;
      const Basis B = make_basis(pr, c.iv, bo);
      EnergySpec s;
      s.params = pr;
      s.kind = c.riesz_density ? DensityKind::RieszP : DensityKind::BuiltInPTheta;
      s.source = make_load(c);
      MinimizeOptions mo;
      mo.max_iter = static_cast<int>(c.tol("max_iter", 10000));
      mo.abs_tol = c.tol("abs_tol", 1e-12);
      mo.el_tol = c.tol("el_tol", 1e-6);
      const MinimizeReport m = minimize(s, B, mo);
      solution = m.minimizer;
      have_solution = true;
      rep["minimize"] = {{"energy", num(m.energy_trace.back())},
                         {"el_residual", num(m.el_residual)},
                         {"iterations", m.iterations},
                         {"converged", m.converged},
                         {"coercivity_margin", num(m.coercivity_margin)},
                         {"n_dof", B.size()}};
      const fs::path tp = c.output / "energy_trace.csv";
      write_trace_csv(m.energy_trace, tp);
      res.files.push_back(tp);
      if (!c.riesz_density) {
        rep["space"] = space_name(select_space(c.params, c.zero_trace && c.params.alpha * c.params.p > 1.0).kind);
        if (!c.zero_trace) rep["neumann"] = neumann_json(m.minimizer, c.params);
      }
      if (!m.converged) res.exit_code = 3;
      if (check) add_check("el_residual", m.el_residual, mo.el_tol);
      break;
    }
    case Problem::verify: {
      const VerifySpec& v = *c.verify;
      const Expr e = parse_expression(v.function);
      const auto mesh = default_mesh(c.iv, v.n_cells, c.params.alpha, Grading::both);
      const GridFunction u = e.sample_on(mesh);
      solution = u;
      have_solution = true;
      const auto bank = test_bank(c.iv);
      const HarmonicReport h = verify_harmonic(u, v.kind, c.params.alpha, bank, v.tol);
      rep["function"] = v.function;
      rep["kind"] = harmonic_kind_name(v.kind);
      rep["harmonic"] = harmonic_json(h);
      rep["norm"] = norm_json(u, select_space(c.params, false));
      rep["ftwfc"] = json::object();
      for (Side sd : {Side::left, Side::right})
        rep["ftwfc"][side_name(sd)] = attempt([&] {
          const auto d = ftwfc_decompose(u, c.params.alpha, sd);
          return json{{"c_sing", num(d.c_sing)}, {"limit_spread", num(d.limit_spread)}};
        });
      rep["traces"] = json::object();
      for (Side sd : {Side::left, Side::right})
        rep["traces"][side_name(sd)] =
            attempt([&] { return json{{"value", num(trace(u, sd, c.params.alpha, c.params.p))}}; });
      rep["neumann"] = neumann_json(u, FracParams{c.params.alpha, c.params.p, 0.5, 0});
      if (check) add_check("harmonic_residual", h.residual, v.tol);
      break;
    }
  }

  if (have_solution) {
    const fs::path sp = c.output / "solution.csv";
    write_csv(solution, sp);
    res.files.insert(res.files.begin(), sp);
  }
  if (check) {
    rep["checks"] = checks;
    rep["checks_pass"] = checks_ok;
    if (!checks_ok && res.exit_code == 0) res.exit_code = 3;
  }
  const fs::path rp = c.output / "report.json";
  write_json(rep, rp);
  res.files.push_back(rp);

  json man;
  man["tool"] = "fraclap";
  man["versions"] = versions();
  man["mode"] = check ? "verify" : "run";
  if (!c.config_path.empty()) {
    man["config"] = c.config_path.filename().string();
    man["config_sha256"] = sha256_hex(read_file(c.config_path));
  }
  man["threads"] = max_threads();
  man["files"] = json::array();
  for (const auto& f : res.files) {
    const std::string bytes = read_file(f);
    man["files"].push_back({{"path", f.filename().string()}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }
  write_json(man, c.output / "manifest.json");
  res.report = rep;
  return res;
}

/// Exit code for a failure category: 3 for solver non-convergence, 2 for everything else.
inline int exit_code_for(errc e) { return (e == errc::nonconvergence || e == errc::line_search) ? 3 : 2; }

}  // namespace fraclap::cli
