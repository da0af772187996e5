#ifndef RELIAB_CLI_HPP
#define RELIAB_CLI_HPP

// Config-driven front end behind the `reliab` executable: a JSON run
// configuration is parsed and validated in full, then the declared methods
// are executed and their records written.

#include "reliab/quadratic_rs.hpp"
#include "reliab/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace reliab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr const char* kRunSchema = "reliab.run/1";

/// Anything wrong with the configuration or the command line.
class ConfigError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// Reads one JSON object of options, checking types and ranges, and rejects
/// keys that were never asked for.
class OptionReader {
 public:
  OptionReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("must be a JSON object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  double real(const std::string& key, double def, double lo, double hi, bool open_lo = false) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(key + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi || (open_lo && x == lo))
      fail(key + " must lie in " + (open_lo ? "(" : "[") + format_number(lo) + ", " + format_number(hi) + "]");
    return x;
  }

  std::size_t count(const std::string& key, std::size_t def, std::size_t lo, std::size_t hi) {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      fail(key + " must be a nonnegative integer");
    const auto x = v.get<std::uint64_t>();
    if (x < lo || x > hi) fail(key + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<std::size_t>(x);
  }

  bool flag(const std::string& key, bool def) {
    if (!has(key)) return def;
    if (!j_.at(key).is_boolean()) fail(key + " must be true or false");
    return j_.at(key).get<bool>();
  }

  std::string text(const std::string& key, const std::string& def, const std::vector<std::string>& allowed = {}) {
    if (!has(key)) return def;
    if (!j_.at(key).is_string()) fail(key + " must be a string");
    auto s = j_.at(key).get<std::string>();
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(key + " must be one of: " + list);
    }
    return s;
  }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) fail("unknown key '" + k + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> used_;
};

struct Problem {
  std::string label;
  LimitState ls;
  RandomVector rv;
};

/// {"benchmark": "waarts"}, {"benchmark": "linear", "beta0": b, "dim": m}
/// (or "direction": [...]), or {"expression": "...", "marginals": [...],
/// "correlation": [[...]]}.
inline Problem parse_problem(const Json& j) {
  OptionReader r(j, "problem");
  if (r.has("benchmark")) {
    const auto name = r.text("benchmark", "", {"waarts", "linear"});
    if (name == "waarts") {
      r.finish();
      return {"waarts", benchmark_waarts(), RandomVector::standard_normal(2)};
    }
    const double beta0 = r.real("beta0", 2.0, -10.0, 10.0);
    LimitState ls = benchmark_linear(beta0, 1);
    if (r.has("direction")) {
      if (r.has("dim")) r.fail("give either dim or direction, not both");
      Vector d;
      try {
        d = vector_from_json(r.raw("direction"));
      } catch (const std::exception&) {
        r.fail("direction must be an array of numbers");
      }
      if (d.size() < 1 || d.size() > 100 || !(d.norm() > 0.0)) r.fail("direction must be a nonzero vector of 1-100 entries");
      d /= d.norm();
      ls = benchmark_linear(beta0, d);
    } else {
      ls = benchmark_linear(beta0, r.count("dim", 2, 1, 100));
    }
    r.finish();
    return {"linear(beta0=" + format_number(beta0) + ")", ls, RandomVector::standard_normal(ls.dimension())};
  }
  if (!r.has("expression")) r.fail("needs either 'benchmark' or 'expression'");
  const auto text = r.text("expression", "");
  if (!r.has("marginals") || !r.raw("marginals").is_array() || r.raw("marginals").empty())
    r.fail("an expression problem needs a nonempty 'marginals' array");
  std::vector<Marginal> ms;
  try {
    for (const auto& m : r.raw("marginals")) {
      OptionReader mr(m, "problem.marginals");
      if (!mr.has("family") || !mr.has("params")) mr.fail("each marginal needs 'family' and 'params'");
      mr.raw("family");
      mr.raw("params");
      mr.finish();
      ms.push_back(marginal_from_json(m));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("problem.marginals: ") + e.what());
  }
  const std::size_t dim = ms.size();
  std::optional<RandomVector> rv;
  try {
    if (r.has("correlation")) {
      const Matrix c = matrix_from_json(r.raw("correlation"));
      rv.emplace(ms, c);
    } else {
      rv.emplace(ms);
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("problem.correlation: ") + e.what());
  }
  std::optional<LimitState> ls;
  try {
    ls.emplace(expression_limit_state(text, dim));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("problem.expression: ") + e.what());
  }
  r.finish();
  return {"expression", *ls, *rv};
}

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"mc", "is", "cornell", "form", "qrs", "pce", "ak", "metais"};
  return names;
}

/// Option keys accepted by each method.
inline const std::vector<std::string>& method_keys(const std::string& name) {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"mc", {"n", "seed"}},
      {"is", {"n", "center", "seed"}},
      {"cornell", {"step"}},
      {"form", {"tol", "max_iter", "multistart", "start_radius"}},
      {"qrs", {"n_design", "box", "cross_terms", "n_mc", "seed"}},
      {"pce", {"target_error", "p_max", "oversampling", "n_mc", "seed", "model_path"}},
      {"ak",
       {"n_initial", "box", "n_pool", "u_threshold", "k", "tolerance", "max_calls", "n_final", "enrichment", "seed",
        "trace_path", "model_path"}},
      {"metais",
       {"n_eps", "n_corr", "n_initial", "box", "n_pool", "k", "tolerance", "max_calls", "enrichment", "seed",
        "trace_path"}},
  };
  static const std::vector<std::string> none;
  const auto it = keys.find(name);
  return it == keys.end() ? none : it->second;
}

/// A validated method: every option is read into the typed structs here.
struct MethodPlan {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::optional<Vector> is_center;
  double step = 1e-4;
  FormOptions form;
  std::size_t n_design = 0;
  double box = 3.0;
  bool cross_terms = true;
  std::size_t n_mc = 1000000;
  PceAdaptiveOptions pce;
  AdaptiveKrigingOptions ak;
  MetaIsOptions metais;
  std::string trace_path;
  std::string model_path;
};

inline void read_doe(OptionReader& r, AdaptiveKrigingOptions& o) {
  o.n_initial = r.count("n_initial", o.n_initial, 0, 10000);
  o.box = r.real("box", o.box, 0.0, 20.0, true);
  o.n_pool = r.count("n_pool", o.n_pool, 100, 100000000);
  o.k = r.real("k", o.k, 0.0, 10.0, true);
  o.tolerance = r.real("tolerance", o.tolerance, 0.0, 1.0, true);
  o.max_calls = r.count("max_calls", o.max_calls, 1, 100000);
  o.enrichment = enrichment_from_string(r.text("enrichment", to_string(o.enrichment), {"u", "margin"}));
}

inline MethodPlan parse_method(const Json& j, std::uint64_t default_seed, std::size_t dim, const std::string& where) {
  OptionReader r(j, where);
  MethodPlan p;
  p.name = r.text("name", "", method_names());
  if (p.name.empty()) r.fail("needs a 'name', one of mc, is, cornell, form, qrs, pce, ak, metais");
  for (const auto& [k, v] : j.items())
    if (k != "name" && std::find(method_keys(p.name).begin(), method_keys(p.name).end(), k) == method_keys(p.name).end())
      r.fail("unknown key '" + k + "' for method " + p.name);
  if (r.has("seed")) {
    if (!j.at("seed").is_number_unsigned()) r.fail("seed must be a nonnegative integer");
    p.seed = j.at("seed").get<std::uint64_t>();
  } else {
    p.seed = default_seed;
  }
  if (p.name == "mc") {
    p.n = r.count("n", 100000, 1, 1000000000);
  } else if (p.name == "is") {
    p.n = r.count("n", 10000, 1, 100000000);
    if (r.has("center")) {
      const auto& c = r.raw("center");
      if (c.is_string()) {
        if (c != "form") r.fail("center must be \"form\" or a point in standard normal space");
      } else {
        try {
          p.is_center = vector_from_json(c);
        } catch (const std::exception&) {
          r.fail("center must be \"form\" or an array of numbers");
        }
        if (static_cast<std::size_t>(p.is_center->size()) != dim || !p.is_center->allFinite())
          r.fail("center must have " + std::to_string(dim) + " finite entries");
      }
    }
  } else if (p.name == "cornell") {
    p.step = r.real("step", p.step, 0.0, 1.0, true);
  } else if (p.name == "form") {
    p.form.tol = r.real("tol", p.form.tol, 0.0, 1.0, true);
    p.form.max_iter = static_cast<int>(r.count("max_iter", static_cast<std::size_t>(p.form.max_iter), 1, 10000));
    p.form.multistart = r.flag("multistart", p.form.multistart);
    p.form.start_radius = r.real("start_radius", p.form.start_radius, 0.0, 10.0, true);
  } else if (p.name == "qrs") {
    const std::size_t need = qrs_size(dim, r.flag("cross_terms", true));
    p.cross_terms = r.flag("cross_terms", true);
    p.n_design = r.count("n_design", 2 * need, need, 100000);
    p.box = r.real("box", p.box, 0.0, 20.0, true);
    p.n_mc = r.count("n_mc", p.n_mc, 1000, 1000000000);
  } else if (p.name == "pce") {
    p.pce.target_error = r.real("target_error", p.pce.target_error, 0.0, 1.0, true);
    p.pce.p_max = static_cast<int>(r.count("p_max", static_cast<std::size_t>(p.pce.p_max), 1, 20));
    p.pce.oversampling = r.real("oversampling", p.pce.oversampling, 1.0, 10.0);
    p.pce.seed = p.seed;
    p.n_mc = r.count("n_mc", p.n_mc, 1000, 1000000000);
    p.model_path = r.text("model_path", "");
  } else if (p.name == "ak") {
    read_doe(r, p.ak);
    p.ak.u_threshold = r.real("u_threshold", p.ak.u_threshold, 0.0, 10.0, true);
    p.ak.n_final = r.count("n_final", p.ak.n_final, 1000, 1000000000);
    p.ak.seed = p.seed;
    p.trace_path = r.text("trace_path", "");
    p.model_path = r.text("model_path", "");
  } else {
    read_doe(r, p.metais.doe);
    p.metais.n_eps = r.count("n_eps", p.metais.n_eps, 1000, 1000000000);
    p.metais.n_corr = r.count("n_corr", p.metais.n_corr, 1, 10000000);
    p.metais.seed = p.seed;
    p.trace_path = r.text("trace_path", "");
  }
  r.finish();
  return p;
}

struct Sweep {
  std::string parameter;
  std::vector<double> values;
};

enum class Command { Run, Compare };

struct CommandLine {
  Command command = Command::Run;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> output;
  std::vector<std::string> overrides;  ///< key=value
};

struct RunConfig {
  Json problem;
  std::vector<Json> methods;
  std::optional<Sweep> sweep;
  std::string output_path;
  std::string format;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

/// Value text of a --method-override: JSON when it parses, a string otherwise.
inline Json override_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return Json(text);
  }
}

inline std::pair<std::string, Json> split_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--method-override expects key=value, got '" + kv + "'");
  return {kv.substr(0, eq), override_value(kv.substr(eq + 1))};
}

inline std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

inline std::string resolve_output_path(const std::string& path) {
  if (path.empty()) return path;
  const auto dir = env_or_empty("RELIAB_OUTPUT_DIR");
  std::filesystem::path p(path);
  if (dir.empty() || p.is_absolute()) return path;
  return (std::filesystem::path(dir) / p).string();
}

/// Parses the config text and applies the command line and environment
/// (flags win over the environment, which wins over the file).
inline RunConfig load_config(const std::string& text, const CommandLine& cl) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  OptionReader r(j, "config");
  RunConfig c;
  if (!r.has("problem")) r.fail("missing 'problem'");
  c.problem = r.raw("problem");
  if (r.has("seed")) {
    if (!j.at("seed").is_number_unsigned()) r.fail("seed must be a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (cl.seed) c.seed = *cl.seed;
  c.threads = static_cast<unsigned>(r.count("threads", 0, 0, 1024));
  if (const auto env = env_or_empty("RELIAB_THREADS"); !env.empty()) {
    char* end = nullptr;
    const long v = std::strtol(env.c_str(), &end, 10);
    if (*end != '\0' || v < 1 || v > 1024) throw ConfigError("RELIAB_THREADS must be an integer in [1, 1024]");
    c.threads = static_cast<unsigned>(v);
  }
  if (cl.threads) {
    if (*cl.threads < 1 || *cl.threads > 1024) throw ConfigError("--threads must lie in [1, 1024]");
    c.threads = *cl.threads;
  }

  if (cl.command == Command::Run) {
    if (r.has("methods")) r.fail("'run' takes a single 'method'; use 'compare' for a list");
    if (r.has("sweep")) r.fail("'sweep' is only available with 'compare'");
    if (!r.has("method")) r.fail("missing 'method'");
    c.methods.push_back(r.raw("method"));
  } else {
    if (r.has("method")) r.fail("'compare' takes a 'methods' list");
    if (!r.has("methods") || !j.at("methods").is_array()) r.fail("missing 'methods' array");
    for (const auto& m : j.at("methods")) c.methods.push_back(m);
    if (c.methods.empty()) r.fail("'methods' is empty");
    if (r.has("sweep")) {
      OptionReader sr(r.raw("sweep"), "sweep");
      Sweep s;
      s.parameter = sr.text("parameter", "beta0", {"beta0"});
      if (!sr.has("values") || !sr.raw("values").is_array() || sr.raw("values").empty())
        sr.fail("needs a nonempty 'values' array");
      for (const auto& v : sr.raw("values")) {
        if (!v.is_number()) sr.fail("values must be numbers");
        s.values.push_back(v.get<double>());
      }
      sr.finish();
      if (!c.problem.is_object() || c.problem.value("benchmark", "") != "linear")
        r.fail("a beta0 sweep needs the linear benchmark problem");
      c.sweep = s;
    }
  }

  for (const auto& kv : cl.overrides) {
    const auto [key, value] = split_override(kv);
    if (key == "name") throw ConfigError("--method-override cannot change the method name");
    bool applied = false;
    for (auto& m : c.methods) {
      if (!m.is_object() || !m.contains("name") || !m.at("name").is_string()) continue;
      const auto& keys = method_keys(m.at("name").get<std::string>());
      if (cl.command == Command::Run || std::find(keys.begin(), keys.end(), key) != keys.end()) {
        m[key] = value;
        applied = true;
      }
    }
    if (!applied) throw ConfigError("--method-override key '" + key + "' matches no listed method");
  }

  if (cl.seed)
    for (auto& m : c.methods)
      if (m.is_object()) m.erase("seed");

  if (r.has("output")) {
    OptionReader orr(r.raw("output"), "output");
    c.output_path = orr.text("path", "");
    c.format = orr.text("format", "", {"json", "csv"});
    orr.finish();
  }
  if (cl.output) c.output_path = *cl.output;
  if (c.format.empty()) {
    const auto ext = std::filesystem::path(c.output_path).extension().string();
    c.format = ext == ".csv" ? "csv" : ext == ".json" ? "json" : (cl.command == Command::Run ? "json" : "csv");
  }
  if (cl.command == Command::Compare && c.format != "csv") throw ConfigError("'compare' writes CSV only");
  c.output_path = resolve_output_path(c.output_path);
  r.finish();
  return c;
}

/// What one executed method produced.
struct Outcome {
  ReliabilityResult result;
  std::optional<MetaIsResult> metais;
  std::vector<AdaptiveKrigingStep> trace;
  std::optional<Json> model;
};

inline Outcome execute(const MethodPlan& p, const Problem& pb, EvalLedger& ledger) {
  Outcome out;
  const std::size_t before = ledger.call_count();
  const std::size_t dim = pb.ls.dimension();
  if (p.name == "mc") {
    out.result = estimate_mc(pb.ls, pb.rv, p.n, p.seed, ledger);
  } else if (p.name == "is") {
    const auto g = standard_space_limit_state(pb.ls, pb.rv);
    const auto std_rv = RandomVector::standard_normal(dim);
    Vector center;
    if (p.is_center) {
      center = *p.is_center;
    } else {
      const auto f = form(g, std_rv, FormOptions{}, ledger);
      center = Eigen::Map<const Vector>(f.extras.at("u_star").data(), static_cast<Eigen::Index>(dim));
    }
    out.result = estimate_is(g, std_rv, shifted_normal_instrumental(center), p.n, p.seed, ledger);
    out.result.extras["center"] = std::vector<double>(center.data(), center.data() + center.size());
  } else if (p.name == "cornell") {
    const double beta = cornell_index(pb.ls, pb.rv, p.step, ledger);
    out.result = make_result(normal_cdf(-beta), std::nullopt, 0, "cornell");
    out.result.beta = beta;
  } else if (p.name == "form") {
    out.result = form(pb.ls, pb.rv, p.form, ledger);
  } else if (p.name == "qrs") {
    const auto g = standard_space_limit_state(pb.ls, pb.rv);
    const Matrix u = box_lhs(p.n_design, dim, p.box, mix_seed(p.seed, 40));
    const Vector y = evaluate_batch(g, u, ledger);
    const auto surface = qrs_fit(ExperimentalDesign(u, y), p.cross_terms);
    out.result = estimate_mc_surrogate([&](const Vector& x) { return surface(x); }, RandomVector::standard_normal(dim),
                                       p.n_mc, mix_seed(p.seed, 41), "qrs");
    out.result.extras["coefficients"] =
        std::vector<double>(surface.coefficients.data(), surface.coefficients.data() + surface.coefficients.size());
  } else if (p.name == "pce") {
    auto res = pce_adaptive(pb.ls, pb.rv, p.pce, ledger);
    out.result = pce_pf(*res.model, pb.rv, p.n_mc, mix_seed(p.seed, 50));
    out.result.extras["degree"] = {static_cast<double>(res.model->basis().degree)};
    out.result.extras["loo_error"] = {res.model->diagnostics().loo_error};
    out.result.warnings = res.model->diagnostics().warnings;
    out.model = to_json(*res.model);
  } else if (p.name == "ak") {
    AdaptiveKrigingRun run;
    out.result = ak_mcs(pb.ls, pb.rv, p.ak, ledger, &run);
    out.trace = run.trace;
    out.model = to_json(*run.model);
  } else {
    auto r = metais_estimate(pb.ls, pb.rv, p.metais, ledger);
    out.result = to_reliability_result(r);
    out.trace = r.trace;
    out.metais = std::move(r);
  }
  out.result.n_calls = ledger.call_count() - before;
  out.result.method = p.name;
  return out;
}

inline std::string cost_text(const Outcome& o) {
  if (o.metais) return std::to_string(o.metais->n_model_calls_doe) + " + " + std::to_string(o.metais->n_model_calls_corr);
  return std::to_string(o.result.n_calls);
}

inline std::string summary_line(const Outcome& o) {
  char buf[160];
  const auto& r = o.result;
  std::string cov = "n/a";
  if (r.cov) {
    std::snprintf(buf, sizeof buf, "%.4f", *r.cov);
    cov = buf;
  }
  std::snprintf(buf, sizeof buf, "%s: pf=%.6e beta=%.6f cov=%s calls=%s", r.method.c_str(), r.pf, r.beta, cov.c_str(),
                cost_text(o).c_str());
  return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw Error("failed writing '" + path + "'");
}

inline std::string trace_csv(const std::vector<AdaptiveKrigingStep>& trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  return os.str();
}

inline std::string run_record(const Outcome& o, const Problem& pb, const RunConfig& c, const std::string& format) {
  if (format == "csv") return std::string(kResultCsvHeader) + "\n" + result_csv_row(o.result) + "\n";
  Json j{{"schema", kRunSchema}, {"problem", pb.label}, {"seed", c.seed}, {"result", to_json(o.result)}};
  if (o.metais) j["metais"] = to_json(*o.metais);
  return j.dump(2) + "\n";
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline int run(const CommandLine& cl, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::optional<Problem> problem;
  MethodPlan plan;
  try {
    cfg = load_config(read_text(cl.config_path), cl);
    problem = parse_problem(cfg.problem);
    plan = parse_method(cfg.methods.front(), cfg.seed, problem->ls.dimension(), "method");
  } catch (const std::exception& e) {
    err << "reliab: " << e.what() << "\n";
    return kExitValidation;
  }
  if (cfg.threads) set_threads(cfg.threads);
  try {
    EvalLedger ledger;
    const auto o = execute(plan, *problem, ledger);
    if (!cfg.output_path.empty()) write_file(cfg.output_path, run_record(o, *problem, cfg, cfg.format));
    if (!plan.trace_path.empty()) write_file(resolve_output_path(plan.trace_path), trace_csv(o.trace));
    if (!plan.model_path.empty() && o.model) write_file(resolve_output_path(plan.model_path), o.model->dump(2) + "\n");
    out << summary_line(o) << "\n";
    for (const auto& w : o.result.warnings) err << "reliab: warning: " << w << "\n";
  } catch (const std::exception& e) {
    err << "reliab: " << plan.name << " failed: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

inline int compare(const CommandLine& cl, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::vector<std::pair<std::optional<double>, Problem>> problems;
  std::vector<std::vector<MethodPlan>> plans;
  try {
    cfg = load_config(read_text(cl.config_path), cl);
    if (cfg.sweep) {
      for (double v : cfg.sweep->values) {
        Json pj = cfg.problem;
        pj["beta0"] = v;
        problems.emplace_back(v, parse_problem(pj));
      }
    } else {
      problems.emplace_back(std::nullopt, parse_problem(cfg.problem));
    }
    for (const auto& [v, pb] : problems) {
      std::vector<MethodPlan> row;
      for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        row.push_back(parse_method(cfg.methods[i], cfg.seed, pb.ls.dimension(), "methods[" + std::to_string(i) + "]"));
      plans.push_back(std::move(row));
    }
  } catch (const std::exception& e) {
    err << "reliab: " << e.what() << "\n";
    return kExitValidation;
  }
  if (cfg.threads) set_threads(cfg.threads);
  std::string table = (cfg.sweep ? cfg.sweep->parameter + "," : std::string()) + kResultCsvHeader + "\n";
  std::size_t failures = 0, rows = 0;
  for (std::size_t k = 0; k < problems.size(); ++k) {
    const auto prefix = problems[k].first ? format_number(*problems[k].first) + "," : std::string();
    for (const auto& plan : plans[k]) {
      ++rows;
      try {
        EvalLedger ledger;
        const auto o = execute(plan, problems[k].second, ledger);
        table += prefix + result_csv_row(o.result) + "\n";
      } catch (const std::exception& e) {
        ++failures;
        table += prefix + failed_csv_row(plan.name, "failed", e.what()) + "\n";
        err << "reliab: " << plan.name << " failed: " << e.what() << "\n";
      }
    }
  }
  try {
    if (!cfg.output_path.empty()) write_file(cfg.output_path, table);
  } catch (const std::exception& e) {
    err << "reliab: " << e.what() << "\n";
    return kExitNumerical;
  }
  out << table;
  return failures == rows ? kExitNumerical : kExitOk;
}

inline int dispatch(const CommandLine& cl, std::ostream& out, std::ostream& err) {
  return cl.command == Command::Run ? run(cl, out, err) : compare(cl, out, err);
}

}  // namespace reliab::cli

#endif  // RELIAB_CLI_HPP
