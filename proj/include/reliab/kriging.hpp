#ifndef RELIAB_KRIGING_HPP
#define RELIAB_KRIGING_HPP

// Gaussian-process (kriging) surrogates: constant or linear trend, stationary
// exponential-family kernels, profiled maximum likelihood, prediction with
// epistemic variance and the adaptive enrichment schemes built on it.

#include "reliab/core.hpp"
#include "reliab/limitstate.hpp"
#include "reliab/mcmc.hpp"
#include "reliab/optimize.hpp"
#include "reliab/probmodel.hpp"
#include "reliab/reliability.hpp"

#include <optional>
#include <string>
#include <vector>

namespace reliab {

enum class KernelKind { SquaredExponential, GeneralizedExponential };

inline const char* to_string(KernelKind k) {
  return k == KernelKind::SquaredExponential ? "squared_exponential" : "generalized_exponential";
}

inline KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "squared_exponential") return KernelKind::SquaredExponential;
  if (s == "generalized_exponential") return KernelKind::GeneralizedExponential;
  throw ArgumentError("unknown kernel '" + s + "'");
}

/// R(h) = exp(-sum_k |h_k / theta_k|^q), q = 2 for the squared exponential.
struct CorrelationKernel {
  KernelKind kind = KernelKind::SquaredExponential;
  Vector theta;
  double power = 2.0;

  void validate() const {
    if (theta.size() == 0) throw ArgumentError("kernel needs at least one lengthscale");
    for (Eigen::Index i = 0; i < theta.size(); ++i)
      if (!(theta[i] > 0.0) || !std::isfinite(theta[i])) throw ArgumentError("kernel lengthscales must be positive");
    if (kind == KernelKind::GeneralizedExponential && !(power > 0.0 && power <= 2.0))
      throw ArgumentError("generalized exponential power must lie in (0, 2]");
  }

  double exponent() const { return kind == KernelKind::SquaredExponential ? 2.0 : power; }

  double operator()(const Vector& a, const Vector& b) const {
    const double q = exponent();
    double s = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      const double h = std::abs(a[k] - b[k]) / theta[k];
      s += q == 2.0 ? h * h : std::pow(h, q);
    }
    return std::exp(-s);
  }
};

/// N x N correlation matrix of the rows of `pts`, nugget added to the diagonal.
inline Matrix kernel_matrix(const CorrelationKernel& kernel, const Matrix& pts, double nugget = 0.0) {
  kernel.validate();
  const Eigen::Index n = pts.rows();
  Matrix r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 1.0 + nugget;
    for (Eigen::Index j = i + 1; j < n; ++j) r(i, j) = r(j, i) = kernel(pts.row(i).transpose(), pts.row(j).transpose());
  }
  return r;
}

/// N x n correlations between design rows and query rows.
inline Matrix cross_correlation(const CorrelationKernel& kernel, const Matrix& design, const Matrix& xs) {
  Matrix r(design.rows(), xs.rows());
  for (Eigen::Index j = 0; j < xs.rows(); ++j)
    for (Eigen::Index i = 0; i < design.rows(); ++i) r(i, j) = kernel(design.row(i).transpose(), xs.row(j).transpose());
  return r;
}

enum class TrendKind { Constant, Linear };

inline const char* to_string(TrendKind t) { return t == TrendKind::Constant ? "constant" : "linear"; }

inline TrendKind trend_kind_from_string(const std::string& s) {
  if (s == "constant") return TrendKind::Constant;
  if (s == "linear") return TrendKind::Linear;
  throw ArgumentError("unknown trend '" + s + "'");
}

inline Eigen::Index trend_size(TrendKind t, Eigen::Index m) { return t == TrendKind::Constant ? 1 : 1 + m; }

inline Matrix trend_matrix(TrendKind t, const Matrix& xs) {
  Matrix f(xs.rows(), trend_size(t, xs.cols()));
  f.col(0).setOnes();
  if (t == TrendKind::Linear) f.rightCols(xs.cols()) = xs;
  return f;
}

struct KrigingPrediction {
  double mu = 0.0;
  double sigma = 0.0;
  bool clamped = false;  ///< variance came out negative beyond roundoff and was set to 0
};

struct KrigingBatch {
  Vector mu;
  Vector sigma;
  std::size_t clamped = 0;
};

inline constexpr double kNuggetStart = 1e-12;
inline constexpr double kNuggetMax = 1e-6;

namespace detail {

struct GpSolve {
  Eigen::LLT<Matrix> chol;
  Matrix lf;                  // L^{-1} F
  Eigen::LLT<Matrix> trend_chol;  // of F^T R^{-1} F
  Vector a;
  Vector w;                   // R^{-1} (y - F a)
  double sigma2 = 0.0;
  double log_det = 0.0;
  double nugget = 0.0;
};

inline std::optional<GpSolve> gp_solve_at(const Matrix& x, const Vector& y, const CorrelationKernel& kernel,
                                          TrendKind trend, double nugget) {
  GpSolve s;
  s.nugget = nugget;
  s.chol.compute(kernel_matrix(kernel, x, nugget));
  if (s.chol.info() != Eigen::Success || !(s.chol.rcond() > 1e-15)) return std::nullopt;
  const auto l = s.chol.matrixL();
  s.lf = l.solve(trend_matrix(trend, x));
  s.trend_chol.compute(s.lf.transpose() * s.lf);
  if (s.trend_chol.info() != Eigen::Success) return std::nullopt;
  const Vector ly = l.solve(y);
  s.a = s.trend_chol.solve(s.lf.transpose() * ly);
  const Vector res = ly - s.lf * s.a;
  s.sigma2 = res.squaredNorm() / static_cast<double>(x.rows());
  s.w = s.chol.matrixU().solve(res);
  const Matrix& lm = s.chol.matrixLLT();
  for (Eigen::Index i = 0; i < lm.rows(); ++i) s.log_det += 2.0 * std::log(lm(i, i));
  return s;
}

/// Factorizes with the nugget escalated tenfold from `start` up to kNuggetMax.
inline GpSolve gp_solve(const Matrix& x, const Vector& y, const CorrelationKernel& kernel, TrendKind trend,
                        double start = kNuggetStart) {
  for (double nugget = start; nugget <= kNuggetMax * 1.0000001; nugget *= 10.0)
    if (auto s = gp_solve_at(x, y, kernel, trend, nugget)) return std::move(*s);
  throw ConditioningError("kriging correlation matrix is not positive definite even with nugget " +
                          std::to_string(kNuggetMax));
}

inline double profiled_objective(const GpSolve& s, Eigen::Index n) {
  return static_cast<double>(n) * std::log(std::max(s.sigma2, 1e-300)) + s.log_det;
}

}  // namespace detail

/// Fitted kriging model on an experimental design.
class KrigingModel {
 public:
  /// Model at fixed hyperparameters; the nugget is escalated only if
  /// `escalate` is set.
  KrigingModel(Matrix points, Vector responses, TrendKind trend, CorrelationKernel kernel,
               double nugget = kNuggetStart, bool escalate = true)
      : x_(std::move(points)), y_(std::move(responses)), trend_(trend), kernel_(std::move(kernel)) {
    kernel_.validate();
    if (x_.rows() != y_.size()) throw ArgumentError("kriging design and response sizes differ");
    if (kernel_.theta.size() != x_.cols()) throw ArgumentError("kernel dimension does not match the design");
    if (x_.rows() <= trend_size(trend_, x_.cols()))
      throw ArgumentError("kriging needs more design points than trend functions");
    if (escalate) {
      solve_ = detail::gp_solve(x_, y_, kernel_, trend_, nugget);
    } else {
      auto s = detail::gp_solve_at(x_, y_, kernel_, trend_, nugget);
      if (!s) throw ConditioningError("kriging correlation matrix is not positive definite at the given nugget");
      solve_ = std::move(*s);
    }
  }

  const Matrix& points() const noexcept { return x_; }
  const Vector& responses() const noexcept { return y_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(x_.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(x_.cols()); }
  TrendKind trend() const noexcept { return trend_; }
  const CorrelationKernel& kernel() const noexcept { return kernel_; }
  const Vector& trend_coefficients() const noexcept { return solve_.a; }
  double sigma2() const noexcept { return solve_.sigma2; }
  double nugget() const noexcept { return solve_.nugget; }
  double objective() const { return detail::profiled_objective(solve_, x_.rows()); }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  std::vector<std::string>& warnings() noexcept { return warnings_; }

  KrigingBatch predict_batch(const Matrix& xs) const {
    if (xs.cols() != x_.cols()) throw ArgumentError("prediction points have the wrong dimension");
    constexpr Eigen::Index chunk = 2048;
    const Eigen::Index n = xs.rows();
    KrigingBatch out{Vector(n), Vector(n), 0};
    const auto chunks = static_cast<std::size_t>((n + chunk - 1) / chunk);
    std::vector<std::size_t> clamped(chunks, 0);
    parallel_for(chunks, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t c = lo; c < hi; ++c) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(c) * chunk;
        const Eigen::Index rows = std::min(chunk, n - r0);
        const Matrix q = xs.middleRows(r0, rows);
        const Matrix r = cross_correlation(kernel_, x_, q);
        const Matrix f = trend_matrix(trend_, q);
        out.mu.segment(r0, rows) = f * solve_.a + r.transpose() * solve_.w;
        const Matrix v = solve_.chol.matrixL().solve(r);
        const Matrix u = solve_.lf.transpose() * v - f.transpose();
        const Matrix t = solve_.trend_chol.matrixL().solve(u);
        for (Eigen::Index j = 0; j < rows; ++j) {
          const double s2 = solve_.sigma2 * (1.0 - v.col(j).squaredNorm() + t.col(j).squaredNorm());
          if (s2 < 0.0 && -s2 > 1e-8 * solve_.sigma2) ++clamped[c];
          out.sigma[r0 + j] = std::sqrt(std::max(s2, 0.0));
        }
      }
    });
    for (auto c : clamped) out.clamped += c;
    return out;
  }

  KrigingPrediction predict(const Vector& x) const {
    const auto b = predict_batch(x.transpose());
    return {b.mu[0], b.sigma[0], b.clamped > 0};
  }

 private:
  Matrix x_;
  Vector y_;
  TrendKind trend_;
  CorrelationKernel kernel_;
  detail::GpSolve solve_;
  std::vector<std::string> warnings_;
};

inline KrigingPrediction krig_predict(const KrigingModel& m, const Vector& x) { return m.predict(x); }

struct KrigingOptions {
  TrendKind trend = TrendKind::Constant;
  KernelKind kernel = KernelKind::SquaredExponential;
  double power = 2.0;
  int n_starts = 5;
  std::optional<Vector> theta;        ///< fixed lengthscales (no optimization)
  std::optional<Vector> theta_start;  ///< extra warm start for the optimizer
  double bound_lo = 1e-2;             ///< lengthscale box as multiples of the design span
  double bound_hi = 1e2;
  std::uint64_t seed = 0;
};

/// N log sigma^2(theta) + log det R(theta); lower is more likely.
inline double krig_profiled_objective(const ExperimentalDesign& design, TrendKind trend,
                                      const CorrelationKernel& kernel) {
  const auto s = detail::gp_solve(design.points(), design.responses(), kernel, trend);
  return detail::profiled_objective(s, design.points().rows());
}

/// Lengthscale box [lo, hi] x per-dimension design span.
inline std::pair<Vector, Vector> theta_bounds(const Matrix& x, double lo, double hi) {
  Vector span = x.colwise().maxCoeff() - x.colwise().minCoeff();
  for (Eigen::Index i = 0; i < span.size(); ++i)
    if (!(span[i] > 0.0)) span[i] = 1.0;
  return {lo * span, hi * span};
}

/// Maximum-likelihood kriging fit. a and sigma^2 follow in closed form from
/// theta; theta minimizes the profiled objective by multistart bounded BFGS
/// on log theta.
inline KrigingModel krig_fit(const ExperimentalDesign& design, const KrigingOptions& opt = {}) {
  const Matrix& x = design.points();
  const Vector& y = design.responses();
  const Eigen::Index m = x.cols();
  if (x.rows() <= trend_size(opt.trend, m))
    throw ArgumentError("kriging needs more design points than trend functions (" + std::to_string(x.rows()) +
                        " <= " + std::to_string(trend_size(opt.trend, m)) + ")");
  CorrelationKernel kernel{opt.kernel, Vector::Ones(m), opt.power};
  if (opt.theta) {
    kernel.theta = *opt.theta;
    return KrigingModel(x, y, opt.trend, kernel);
  }
  const auto [tlo, thi] = theta_bounds(x, opt.bound_lo, opt.bound_hi);
  const Vector lo = tlo.array().log(), hi = thi.array().log();
  auto objective = [&](const Vector& log_theta) {
    CorrelationKernel k = kernel;
    k.theta = log_theta.array().exp();
    try {
      return detail::profiled_objective(detail::gp_solve(x, y, k, opt.trend), x.rows());
    } catch (const ConditioningError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<Vector> starts;
  if (opt.theta_start) starts.push_back(detail::project(Vector(opt.theta_start->array().log()), lo, hi));
  if (opt.n_starts > 0) {
    Rng rng(mix_seed(opt.seed, 0x6b726967ULL));
    const Matrix unit = lhs_unit(static_cast<std::size_t>(opt.n_starts), static_cast<std::size_t>(m), rng);
    for (Eigen::Index i = 0; i < unit.rows(); ++i)
      starts.push_back(lo.array() + unit.row(i).transpose().array() * (hi - lo).array());
  }
  std::optional<BoxMinimum> best;
  for (const auto& s : starts) {
    if (!std::isfinite(objective(s))) continue;
    auto r = minimize_box(objective, s, lo, hi);
    if (!best || r.f < best->f) best = std::move(r);
  }
  if (!best) throw ConditioningError("kriging likelihood could not be evaluated at any start");
  kernel.theta = best->x.array().exp();
  KrigingModel model(x, y, opt.trend, kernel);
  if (best->at_bound) model.warnings().push_back("likelihood optimum on the lengthscale bounds");
  return model;
}

// ---------------------------------------------------------------------------
// Learning functions.

/// |mu| / sigma; +inf for sigma = 0 and mu != 0, 0 for sigma = mu = 0.
inline double u_function(double mu, double sigma) {
  if (sigma > 0.0) return std::abs(mu) / sigma;
  return mu == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}
inline double u_function(const KrigingPrediction& p) { return u_function(p.mu, p.sigma); }

/// P[Y(x) <= t] = Phi((t - mu) / sigma); the indicator 1{mu <= t} when sigma = 0.
inline double classification_pi(double mu, double sigma, double t = 0.0) {
  if (sigma > 0.0) return normal_cdf((t - mu) / sigma);
  return mu <= t ? 1.0 : 0.0;
}
inline double classification_pi(const KrigingPrediction& p, double t = 0.0) {
  return classification_pi(p.mu, p.sigma, t);
}

/// P[-k sigma <= Y(x) <= k sigma] = Phi(k - mu/sigma) - Phi(-k - mu/sigma),
/// evaluated on the side where both terms are lower tails.
inline double margin_probability(double mu, double sigma, double k) {
  if (!(k > 0.0)) throw ArgumentError("margin half-width k must be positive");
  if (!(sigma > 0.0)) return mu == 0.0 ? 1.0 : 0.0;
  if (std::isinf(k)) return 1.0;
  const double z = std::abs(mu) / sigma;
  return std::max(0.0, normal_cdf(k - z) - normal_cdf(-k - z));
}
inline double margin_probability(const KrigingPrediction& p, double k) { return margin_probability(p.mu, p.sigma, k); }

struct PoolPick {
  std::size_t index = 0;
  Vector point;
  double u = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
};

namespace detail {
inline PoolPick argmin_u(const Matrix& pool, const KrigingBatch& pred) {
  if (pool.rows() == 0) throw ArgumentError("candidate pool is empty");
  std::size_t best = 0;
  double bu = u_function(pred.mu[0], pred.sigma[0]);
  for (Eigen::Index i = 1; i < pool.rows(); ++i) {
    const double u = u_function(pred.mu[i], pred.sigma[i]);
    const auto b = static_cast<Eigen::Index>(best);
    if (u < bu || (u == bu && pred.sigma[i] > pred.sigma[b])) {
      best = static_cast<std::size_t>(i);
      bu = u;
    }
  }
  const auto b = static_cast<Eigen::Index>(best);
  return {best, pool.row(b).transpose(), bu, pred.mu[b], pred.sigma[b]};
}
}  // namespace detail

/// Candidate with the smallest U; ties go to the larger sigma, then the lower
/// row. Makes no true-model call.
inline PoolPick enrich_ak(const KrigingModel& model, const Matrix& pool) {
  if (pool.rows() == 0) throw ArgumentError("candidate pool is empty");
  return detail::argmin_u(pool, model.predict_batch(pool));
}

struct MarginOptions {
  double k = 1.96;
  std::size_t n_chain = 500;
  std::size_t clusters = 4;
  std::size_t n_pilot = 10000;
  double collapse_threshold = 1e-12;
  SliceOptions slice;
};

struct MarginEnrichment {
  Matrix points;  ///< cluster medoids, one per row
  bool collapsed = false;
  double max_margin = 0.0;
  SliceStats stats;
};

namespace detail {
inline double log_density(const RandomVector& rv, const Vector& x) {
  if (rv.is_standard_normal()) return -0.5 * x.squaredNorm() - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
  const double d = rv.joint_pdf(x);
  return d > 0.0 ? std::log(d) : -std::numeric_limits<double>::infinity();
}
}  // namespace detail

/// Samples the unnormalized density C(x) f_X(x) by componentwise slice
/// sampling and returns the medoids of a k-means partition of the chain.
/// The chain starts at the best of the design points and a pilot sample of
/// f_X; if no candidate has margin probability above the collapse threshold
/// the margin is reported collapsed and no point is returned.
inline MarginEnrichment enrich_margin(const KrigingModel& model, const RandomVector& rv, const MarginOptions& opt,
                                      std::uint64_t seed) {
  if (opt.clusters < 1) throw ArgumentError("cluster count must be at least 1");
  if (opt.n_chain < opt.clusters) throw ArgumentError("chain shorter than the number of clusters");
  MarginEnrichment out;
  const Matrix pilot = sample(rv, std::max<std::size_t>(opt.n_pilot, 1), SamplingScheme::MonteCarlo, mix_seed(seed, 1));
  Matrix cand(pilot.rows() + model.points().rows(), pilot.cols());
  cand << model.points(), pilot;
  const auto pred = model.predict_batch(cand);
  double best = -std::numeric_limits<double>::infinity();
  Eigen::Index start = -1;
  for (Eigen::Index i = 0; i < cand.rows(); ++i) {
    const double c = margin_probability(pred.mu[i], pred.sigma[i], opt.k);
    out.max_margin = std::max(out.max_margin, c);
    if (c <= 0.0) continue;
    const double lt = std::log(c) + detail::log_density(rv, cand.row(i).transpose());
    if (lt > best) {
      best = lt;
      start = i;
    }
  }
  if (out.max_margin <= opt.collapse_threshold || start < 0) {
    out.collapsed = true;
    out.points.resize(0, static_cast<Eigen::Index>(model.dimension()));
    return out;
  }
  auto log_target = [&](const Vector& x) {
    const double c = margin_probability(model.predict(x), opt.k);
    if (!(c > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::log(c) + detail::log_density(rv, x);
  };
  SliceOptions so = opt.slice;
  so.width *= rv.stddev().mean();
  Rng rng(mix_seed(seed, 2));
  const Matrix chain = slice_sample(log_target, cand.row(start).transpose(), opt.n_chain, rng, so, &out.stats);
  const auto cl = kmeans_medoids(chain, opt.clusters, mix_seed(seed, 3));
  std::vector<Eigen::Index> keep;
  for (auto idx : cl.medoids) {
    const Vector p = chain.row(static_cast<Eigen::Index>(idx)).transpose();
    bool fresh = true;
    for (Eigen::Index i = 0; i < model.points().rows() && fresh; ++i)
      if ((model.points().row(i).transpose() - p).cwiseAbs().maxCoeff() <= 1e-12) fresh = false;
    if (fresh) keep.push_back(static_cast<Eigen::Index>(idx));
  }
  out.points.resize(static_cast<Eigen::Index>(keep.size()), chain.cols());
  for (std::size_t j = 0; j < keep.size(); ++j) out.points.row(static_cast<Eigen::Index>(j)) = chain.row(keep[j]);
  return out;
}

struct PfBounds {
  double minus = 0.0;  ///< P[mu <= -k sigma]
  double zero = 0.0;   ///< P[mu <= 0]
  double plus = 0.0;   ///< P[mu <= +k sigma]
  std::size_t n = 0;

  /// (plus - minus) / zero; 0 when all three vanish.
  double spread() const {
    if (plus == minus) return 0.0;
    return zero > 0.0 ? (plus - minus) / zero : std::numeric_limits<double>::infinity();
  }
};

namespace detail {
inline PfBounds bounds_from(const KrigingBatch& pred, double k) {
  std::size_t a = 0, b = 0, c = 0;
  for (Eigen::Index i = 0; i < pred.mu.size(); ++i) {
    const double mu = pred.mu[i], s = k * pred.sigma[i];
    if (mu <= -s) ++a;
    if (mu <= 0.0) ++b;
    if (mu <= s) ++c;
  }
  const auto n = static_cast<double>(pred.mu.size());
  return {static_cast<double>(a) / n, static_cast<double>(b) / n, static_cast<double>(c) / n,
          static_cast<std::size_t>(pred.mu.size())};
}
}  // namespace detail

/// Surrogate Monte Carlo bounds from the margin boundaries, on one sample.
inline PfBounds krig_pf_bounds(const KrigingModel& model, const RandomVector& rv, double k, std::size_t n,
                               std::uint64_t seed) {
  if (n == 0) throw ArgumentError("bounds sample size must be at least 1");
  if (!(k >= 0.0)) throw ArgumentError("margin half-width k must be nonnegative");
  Rng rng(seed);
  std::size_t a = 0, b = 0, c = 0;
  for (std::size_t done = 0; done < n;) {
    const std::size_t rows = std::min(detail::kBatchRows, n - done);
    const auto p = detail::bounds_from(model.predict_batch(sample_mc(rv, rows, rng)), k);
    a += static_cast<std::size_t>(std::llround(p.minus * static_cast<double>(rows)));
    b += static_cast<std::size_t>(std::llround(p.zero * static_cast<double>(rows)));
    c += static_cast<std::size_t>(std::llround(p.plus * static_cast<double>(rows)));
    done += rows;
  }
  const auto nd = static_cast<double>(n);
  return {static_cast<double>(a) / nd, static_cast<double>(b) / nd, static_cast<double>(c) / nd, n};
}

/// Substitution estimate of pf from the kriging mean; no true-model calls.
inline ReliabilityResult krig_pf(const KrigingModel& model, const RandomVector& rv, std::size_t n,
                                 std::uint64_t seed, std::string method = "kriging") {
  return estimate_mc_surrogate([&](const Matrix& xs) { return model.predict_batch(xs).mu; }, rv, n, seed,
                               std::move(method));
}

// ---------------------------------------------------------------------------
// Adaptive kriging driven from the standard normal space.

/// Evaluates g at x = T^{-1}(u) for every row u.
inline Vector evaluate_standard(const LimitState& ls, const RandomVector& rv, const Matrix& us, EvalLedger& ledger) {
  if (rv.is_standard_normal()) return evaluate_batch(ls, us, ledger);
  Matrix xs(us.rows(), us.cols());
  for (Eigen::Index i = 0; i < us.rows(); ++i) xs.row(i) = rv.from_standard(Vector(us.row(i).transpose())).transpose();
  return evaluate_batch(ls, xs, ledger);
}

/// Latin hypercube in the box [-half, half]^M.
inline Matrix box_lhs(std::size_t n, std::size_t m, double half, std::uint64_t seed) {
  Rng rng(seed);
  return (lhs_unit(n, m, rng).array() * (2.0 * half) - half).matrix();
}

enum class Enrichment { UFunction, Margin };

inline const char* to_string(Enrichment e) { return e == Enrichment::UFunction ? "u" : "margin"; }

inline Enrichment enrichment_from_string(const std::string& s) {
  if (s == "u") return Enrichment::UFunction;
  if (s == "margin") return Enrichment::Margin;
  throw ArgumentError("unknown enrichment '" + s + "'");
}

struct AdaptiveKrigingOptions {
  std::size_t n_initial = 0;  ///< 0 selects max(12, 3M)
  double box = 5.0;
  std::size_t n_pool = 100000;
  double u_threshold = 2.0;
  double k = 1.96;
  double tolerance = 0.1;  ///< on the bounds spread
  std::size_t max_calls = 150;
  std::size_t n_final = 1000000;
  Enrichment enrichment = Enrichment::UFunction;
  MarginOptions margin;
  KrigingOptions kriging;
  int refit_starts = 2;  ///< random restarts besides the warm start after the first fit
  std::uint64_t seed = 0;
};

struct AdaptiveKrigingStep {
  std::size_t iteration = 0;
  std::size_t n_design = 0;
  PfBounds bounds;
  double min_u = 0.0;
  Matrix added;
};

struct AdaptiveKrigingRun {
  std::optional<KrigingModel> model;  ///< in standard normal coordinates
  ExperimentalDesign design;          ///< standard normal coordinates
  PfBounds bounds;
  bool converged = false;
  std::string stop_reason;
  std::vector<AdaptiveKrigingStep> trace;
  std::size_t n_calls = 0;
};

/// Enriches a kriging model of G(u) = g(T^{-1}(u)) until the pf bounds
/// spread reaches the tolerance, the U criterion holds over the pool (U
/// enrichment), the margin collapses (margin enrichment) or the call budget
/// runs out.
inline AdaptiveKrigingRun adaptive_kriging(const LimitState& ls, const RandomVector& rv,
                                           const AdaptiveKrigingOptions& opt, EvalLedger& ledger) {
  if (ls.dimension() != rv.dimension()) throw ArgumentError("limit state and random vector dimensions differ");
  const std::size_t m = rv.dimension();
  const auto ustd = RandomVector::standard_normal(m);
  const std::size_t before = ledger.call_count();
  AdaptiveKrigingRun run;
  const std::size_t n0 = opt.n_initial ? opt.n_initial : std::max<std::size_t>(12, 3 * m);
  const Matrix u0 = box_lhs(n0, m, opt.box, mix_seed(opt.seed, 10));
  run.design = ExperimentalDesign(u0, evaluate_standard(ls, rv, u0, ledger));

  const std::uint64_t pool_seed = mix_seed(opt.seed, 11);
  const Matrix pool = sample(ustd, opt.n_pool, SamplingScheme::MonteCarlo, pool_seed);
  KrigingOptions kopt = opt.kriging;
  for (std::size_t it = 0;; ++it) {
    kopt.seed = mix_seed(opt.seed, 100 + it);
    run.model = krig_fit(run.design, kopt);
    kopt.theta_start = run.model->kernel().theta;
    if (it == 0) kopt.n_starts = opt.refit_starts;

    const auto pred = run.model->predict_batch(pool);
    AdaptiveKrigingStep step;
    step.iteration = it;
    step.n_design = run.design.size();
    step.bounds = detail::bounds_from(pred, opt.k);
    const auto pick = detail::argmin_u(pool, pred);
    step.min_u = pick.u;
    run.bounds = step.bounds;
    const std::size_t used = ledger.call_count() - before;

    auto finish = [&](bool ok, const char* why) {
      run.converged = ok;
      run.stop_reason = why;
      step.added.resize(0, static_cast<Eigen::Index>(m));
      run.trace.push_back(step);
    };
    if (step.bounds.spread() <= opt.tolerance) {
      finish(true, "bounds");
      break;
    }
    if (opt.enrichment == Enrichment::UFunction && pick.u >= opt.u_threshold) {
      finish(true, "u_threshold");
      break;
    }
    if (used >= opt.max_calls) {
      finish(false, "budget");
      break;
    }
    Matrix add;
    if (opt.enrichment == Enrichment::UFunction) {
      add = pick.point.transpose();
    } else {
      const auto me = enrich_margin(*run.model, ustd, opt.margin, mix_seed(opt.seed, 1000 + it));
      if (me.collapsed) {
        finish(true, "margin_collapsed");
        break;
      }
      add = me.points.topRows(std::min<Eigen::Index>(me.points.rows(), static_cast<Eigen::Index>(opt.max_calls - used)));
    }
    Matrix fresh(0, static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < add.rows(); ++i) {
      if (run.design.contains(add.row(i).transpose())) continue;
      fresh.conservativeResize(fresh.rows() + 1, Eigen::NoChange);
      fresh.row(fresh.rows() - 1) = add.row(i);
    }
    if (fresh.rows() == 0) {
      finish(false, "no_new_point");
      break;
    }
    const Vector y = evaluate_standard(ls, rv, fresh, ledger);
    for (Eigen::Index i = 0; i < fresh.rows(); ++i) run.design.add(fresh.row(i).transpose(), y[i]);
    step.added = fresh;
    run.trace.push_back(step);
  }
  run.n_calls = ledger.call_count() - before;
  return run;
}

/// AK-MCS: adaptive kriging followed by a substitution estimate on the
/// surrogate mean.
inline ReliabilityResult ak_mcs(const LimitState& ls, const RandomVector& rv, const AdaptiveKrigingOptions& opt,
                                EvalLedger& ledger, AdaptiveKrigingRun* run_out = nullptr) {
  auto run = adaptive_kriging(ls, rv, opt, ledger);
  auto r = krig_pf(*run.model, RandomVector::standard_normal(rv.dimension()), opt.n_final, mix_seed(opt.seed, 12),
                   "ak_mcs");
  r.n_calls = run.n_calls;
  r.extras["pf_minus"] = {run.bounds.minus};
  r.extras["pf_plus"] = {run.bounds.plus};
  r.extras["bounds_spread"] = {run.bounds.spread()};
  r.extras["n_design"] = {static_cast<double>(run.design.size())};
  r.extras["iterations"] = {static_cast<double>(run.trace.size())};
  if (!run.converged) r.warnings.push_back("adaptive kriging stopped before convergence (" + run.stop_reason + ")");
  for (const auto& w : run.model->warnings()) r.warnings.push_back(w);
  if (run_out) *run_out = std::move(run);
  return r;
}

}  // namespace reliab

#endif  // RELIAB_KRIGING_HPP
