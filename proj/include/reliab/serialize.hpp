#ifndef RELIAB_SERIALIZE_HPP
#define RELIAB_SERIALIZE_HPP

// JSON records for results and fitted surrogates, and CSV rows for tables.
// Every document carries a "schema" tag; readers reject other versions.

#include "reliab/kriging.hpp"
#include "reliab/metais.hpp"
#include "reliab/pce.hpp"

#include <charconv>
#include <limits>
#include "json.hpp"
#include <ostream>

namespace reliab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kResultSchema = "reliab.result/1";
inline constexpr const char* kMetaIsSchema = "reliab.metais/1";
inline constexpr const char* kPceSchema = "reliab.pce/1";
inline constexpr const char* kKrigingSchema = "reliab.kriging/1";

namespace detail {

inline void require_schema(const Json& j, const char* schema) {
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != schema)
    throw ArgumentError(std::string("expected a document with schema '") + schema + "'");
}

/// NaN and infinities have no JSON literal; they are written as null.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double number_from(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(detail::number(v[i]));
  return a;
}

inline Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
  return a;
}

inline Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ArgumentError("expected a JSON array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = detail::number_from(j[i]);
  return v;
}

inline Matrix matrix_from_json(const Json& j, Eigen::Index cols = -1) {
  if (!j.is_array()) throw ArgumentError("expected a JSON array of rows");
  if (j.empty()) return Matrix(0, std::max<Eigen::Index>(cols, 0));
  const auto c = static_cast<Eigen::Index>(j[0].size());
  Matrix m(static_cast<Eigen::Index>(j.size()), c);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector r = vector_from_json(j[i]);
    if (r.size() != c) throw ArgumentError("ragged matrix rows");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

inline Json to_json(const Marginal& m) {
  return Json{{"family", to_string(m.family())}, {"params", m.params()}};
}

inline Marginal make_marginal(Family f, const std::vector<double>& p) {
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (p.size() < lo || p.size() > hi)
      throw ArgumentError(std::string(to_string(f)) + " marginal takes " + std::to_string(lo) +
                          (lo == hi ? "" : "-" + std::to_string(hi)) + " parameters");
  };
  switch (f) {
    case Family::Gaussian: need(2, 2); return Marginal::gaussian(p[0], p[1]);
    case Family::Uniform: need(2, 2); return Marginal::uniform(p[0], p[1]);
    case Family::Lognormal: need(2, 2); return Marginal::lognormal(p[0], p[1]);
    case Family::Gamma: need(2, 2); return Marginal::gamma(p[0], p[1]);
    case Family::Beta:
      need(2, 4);
      if (p.size() == 3) throw ArgumentError("beta marginal takes 2 or 4 parameters");
      return p.size() == 2 ? Marginal::beta(p[0], p[1]) : Marginal::beta(p[0], p[1], p[2], p[3]);
  }
  throw ArgumentError("unknown distribution family");
}

inline Marginal marginal_from_json(const Json& j) {
  return make_marginal(family_from_string(j.at("family").get<std::string>()), j.at("params").get<std::vector<double>>());
}

inline Json to_json(const RandomVector& rv) {
  Json ms = Json::array();
  for (const auto& m : rv.marginals()) ms.push_back(to_json(m));
  return Json{{"marginals", ms}, {"correlation", to_json(rv.correlation())}};
}

inline RandomVector random_vector_from_json(const Json& j) {
  std::vector<Marginal> ms;
  for (const auto& m : j.at("marginals")) ms.push_back(marginal_from_json(m));
  if (!j.contains("correlation")) return RandomVector(std::move(ms));
  return RandomVector(std::move(ms), matrix_from_json(j.at("correlation")));
}

inline Json to_json(const ReliabilityResult& r) {
  Json extras = Json::object();
  for (const auto& [k, v] : r.extras) {
    Json a = Json::array();
    for (double x : v) a.push_back(detail::number(x));
    extras[k] = a;
  }
  return Json{{"schema", kResultSchema},
              {"method", r.method},
              {"pf", detail::number(r.pf)},
              {"beta", detail::number(r.beta)},
              {"cov", r.cov ? detail::number(*r.cov) : Json(nullptr)},
              {"n_calls", r.n_calls},
              {"extras", extras},
              {"warnings", r.warnings}};
}

inline ReliabilityResult reliability_result_from_json(const Json& j) {
  detail::require_schema(j, kResultSchema);
  ReliabilityResult r;
  r.method = j.at("method").get<std::string>();
  r.pf = detail::number_from(j.at("pf"));
  r.beta = detail::number_from(j.at("beta"));
  if (!j.at("cov").is_null()) r.cov = j.at("cov").get<double>();
  r.n_calls = j.at("n_calls").get<std::size_t>();
  for (const auto& [k, v] : j.at("extras").items()) {
    std::vector<double> xs;
    for (const auto& x : v) xs.push_back(detail::number_from(x));
    r.extras[k] = xs;
  }
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

inline Json to_json(const PfBounds& b) {
  return Json{{"pf_minus", detail::number(b.minus)},
              {"pf_zero", detail::number(b.zero)},
              {"pf_plus", detail::number(b.plus)},
              {"n", b.n}};
}

inline PfBounds pf_bounds_from_json(const Json& j) {
  PfBounds b;
  b.minus = detail::number_from(j.at("pf_minus"));
  b.zero = detail::number_from(j.at("pf_zero"));
  b.plus = detail::number_from(j.at("pf_plus"));
  b.n = j.at("n").get<std::size_t>();
  return b;
}

inline Json to_json(const MetaIsResult& r) {
  return Json{{"schema", kMetaIsSchema},
              {"pf", detail::number(r.pf)},
              {"beta", detail::number(reliability_index(r.pf))},
              {"pf_epsilon", detail::number(r.pf_epsilon)},
              {"alpha_corr", detail::number(r.alpha_corr)},
              {"cov_epsilon", detail::number(r.cov_epsilon)},
              {"cov_alpha", detail::number(r.cov_alpha)},
              {"cov_total", detail::number(r.cov_total)},
              {"n_model_calls_doe", r.n_model_calls_doe},
              {"n_model_calls_corr", r.n_model_calls_corr},
              {"cost", std::to_string(r.n_model_calls_doe) + " + " + std::to_string(r.n_model_calls_corr)},
              {"converged", r.converged},
              {"stop_reason", r.stop_reason},
              {"bounds", to_json(r.bounds)},
              {"warnings", r.warnings}};
}

/// The enrichment trace is not part of the JSON record; see write_trace_csv.
inline MetaIsResult metais_result_from_json(const Json& j) {
  detail::require_schema(j, kMetaIsSchema);
  MetaIsResult r;
  r.pf = detail::number_from(j.at("pf"));
  r.pf_epsilon = detail::number_from(j.at("pf_epsilon"));
  r.alpha_corr = detail::number_from(j.at("alpha_corr"));
  r.cov_epsilon = detail::number_from(j.at("cov_epsilon"));
  r.cov_alpha = detail::number_from(j.at("cov_alpha"));
  r.cov_total = detail::number_from(j.at("cov_total"));
  r.n_model_calls_doe = j.at("n_model_calls_doe").get<std::size_t>();
  r.n_model_calls_corr = j.at("n_model_calls_corr").get<std::size_t>();
  r.converged = j.at("converged").get<bool>();
  r.stop_reason = j.at("stop_reason").get<std::string>();
  r.bounds = pf_bounds_from_json(j.at("bounds"));
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

inline Json to_json(const PceModel& m) {
  Json fam = Json::array();
  for (const auto& f : m.basis().families)
    fam.push_back(Json{{"family", to_string(f.family)}, {"a", f.a}, {"b", f.b}});
  Json idx = Json::array();
  for (const auto& a : m.basis().indices) idx.push_back(a.alpha);
  const auto& d = m.diagnostics();
  return Json{{"schema", kPceSchema},
              {"inputs", to_json(m.germ_map().random_vector())},
              {"families", fam},
              {"degree", m.basis().degree},
              {"indices", idx},
              {"coefficients", to_json(m.coefficients())},
              {"diagnostics",
               Json{{"empirical_error", detail::number(d.empirical_error)},
                    {"loo_error", detail::number(d.loo_error)},
                    {"n_used", d.n_used},
                    {"warnings", d.warnings}}}};
}

inline PceModel pce_model_from_json(const Json& j) {
  detail::require_schema(j, kPceSchema);
  PceBasis basis;
  for (const auto& f : j.at("families")) {
    const auto fam = poly_family_from_string(f.at("family").get<std::string>());
    const double a = f.at("a").get<double>(), b = f.at("b").get<double>();
    switch (fam) {
      case PolyFamily::Hermite: basis.families.push_back(PolySpec::hermite()); break;
      case PolyFamily::Legendre: basis.families.push_back(PolySpec::legendre()); break;
      case PolyFamily::Laguerre: basis.families.push_back(PolySpec::laguerre(a)); break;
      case PolyFamily::Jacobi: basis.families.push_back(PolySpec::jacobi(a, b)); break;
    }
  }
  basis.degree = j.at("degree").get<int>();
  for (const auto& a : j.at("indices")) {
    MultiIndex mi{a.get<std::vector<int>>()};
    if (mi.alpha.size() != basis.families.size()) throw ArgumentError("multi-index dimension mismatch");
    basis.indices.push_back(std::move(mi));
  }
  PceDiagnostics d;
  const auto& jd = j.at("diagnostics");
  d.empirical_error = detail::number_from(jd.at("empirical_error"));
  d.loo_error = detail::number_from(jd.at("loo_error"));
  d.n_used = jd.at("n_used").get<std::size_t>();
  d.warnings = jd.at("warnings").get<std::vector<std::string>>();
  auto fams = basis.families;
  return PceModel(std::move(basis), vector_from_json(j.at("coefficients")),
                  GermMap(random_vector_from_json(j.at("inputs")), std::move(fams)), std::move(d));
}

inline Json to_json(const KrigingModel& m) {
  return Json{{"schema", kKrigingSchema},
              {"design", Json{{"points", to_json(m.points())}, {"responses", to_json(m.responses())}}},
              {"trend", to_string(m.trend())},
              {"kernel",
               Json{{"kind", to_string(m.kernel().kind)}, {"theta", to_json(m.kernel().theta)}, {"power", m.kernel().power}}},
              {"sigma2", m.sigma2()},
              {"trend_coefficients", to_json(m.trend_coefficients())},
              {"nugget", m.nugget()}};
}

/// Rebuilt at the stored hyperparameters and nugget; sigma2 and the trend
/// coefficients are recomputed and checked against the stored values.
inline KrigingModel kriging_model_from_json(const Json& j) {
  detail::require_schema(j, kKrigingSchema);
  const auto& k = j.at("kernel");
  CorrelationKernel kernel{kernel_kind_from_string(k.at("kind").get<std::string>()), vector_from_json(k.at("theta")),
                           k.at("power").get<double>()};
  const Vector y = vector_from_json(j.at("design").at("responses"));
  KrigingModel m(matrix_from_json(j.at("design").at("points"), kernel.theta.size()), y,
                 trend_kind_from_string(j.at("trend").get<std::string>()), std::move(kernel),
                 j.at("nugget").get<double>(), false);
  const double s2 = j.at("sigma2").get<double>();
  if (std::abs(m.sigma2() - s2) > 1e-8 * std::max(std::abs(s2), 1e-300))
    throw ArgumentError("stored kriging variance does not match the design");
  return m;
}

/// Shortest decimal text that reads back to the same double (negative zero
/// prints as "0"); "nan" and "inf"/"-inf" otherwise.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// RFC 4180 quoting when a field holds a separator, quote or newline.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline const char* kResultCsvHeader = "method,status,pf,beta,cov,n_calls,cost,message";

/// One table row; `cost` is the meta-IS "doe + corr" split when present.
inline std::string result_csv_row(const ReliabilityResult& r) {
  std::string cost = std::to_string(r.n_calls);
  const auto doe = r.extras.find("n_calls_doe");
  const auto corr = r.extras.find("n_calls_corr");
  if (doe != r.extras.end() && corr != r.extras.end() && !doe->second.empty() && !corr->second.empty())
    cost = format_number(doe->second[0]) + " + " + format_number(corr->second[0]);
  std::string msg;
  for (const auto& w : r.warnings) msg += (msg.empty() ? "" : "; ") + w;
  return csv_field(r.method) + ",ok," + format_number(r.pf) + "," + format_number(r.beta) + "," +
         (r.cov ? format_number(*r.cov) : std::string()) + "," + std::to_string(r.n_calls) + "," + csv_field(cost) +
         "," + csv_field(msg);
}

inline std::string failed_csv_row(const std::string& method, const std::string& status, const std::string& message) {
  return csv_field(method) + "," + status + ",,,,,," + csv_field(message);
}

/// Enrichment trace: one row per iteration, the points added at that
/// iteration separated by '|' with ';' between coordinates.
inline void write_trace_csv(std::ostream& os, const std::vector<AdaptiveKrigingStep>& trace) {
  os << "iteration,n_design,pf_minus,pf_zero,pf_plus,spread,min_u,added\n";
  for (const auto& s : trace) {
    std::string added;
    for (Eigen::Index i = 0; i < s.added.rows(); ++i) {
      if (i) added += '|';
      for (Eigen::Index k = 0; k < s.added.cols(); ++k) added += (k ? ";" : "") + format_number(s.added(i, k));
    }
    os << s.iteration << ',' << s.n_design << ',' << format_number(s.bounds.minus) << ','
       << format_number(s.bounds.zero) << ',' << format_number(s.bounds.plus) << ','
       << format_number(s.bounds.spread()) << ',' << format_number(s.min_u) << ',' << added << '\n';
  }
}

}  // namespace reliab

#endif  // RELIAB_SERIALIZE_HPP
