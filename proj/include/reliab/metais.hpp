#ifndef RELIAB_METAIS_HPP
#define RELIAB_METAIS_HPP

// Meta-model-based importance sampling. The kriging classification function
// pi(x) = P[Y(x) <= 0] shapes the instrumental density h(x) ~ pi(x) f_X(x);
// pf = alpha_corr * pf_eps with pf_eps = E_f[pi] (surrogate only) and
// alpha_corr = E_h[1{g <= 0} / pi] (true model).

#include "reliab/core.hpp"
#include "reliab/kriging.hpp"
#include "reliab/limitstate.hpp"
#include "reliab/mcmc.hpp"
#include "reliab/probmodel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace reliab {

/// G(u) = g(T^{-1}(u)) as a limit state on the standard normal space.
inline LimitState standard_space_limit_state(const LimitState& ls, const RandomVector& rv) {
  if (rv.is_standard_normal()) return ls;
  return LimitState(ls.name(), ls.dimension(), [ls, rv](const Vector& u) { return ls.raw(rv.from_standard(u)); },
                    ls.fixed_params());
}

/// Unnormalized instrumental density pi(x) f_X(x).
inline double instrumental_density(const KrigingModel& model, const RandomVector& rv, const Vector& x) {
  return classification_pi(model.predict(x)) * rv.joint_pdf(x);
}

struct FactorEstimate {
  double value = 0.0;
  double cov = 0.0;  ///< infinite when value is 0
};

namespace detail {
inline FactorEstimate mean_with_cov(const Vector& v) {
  const auto n = static_cast<double>(v.size());
  KahanSum s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s.add(v[i]);
  const double mean = s.value() / n;
  KahanSum d;
  for (Eigen::Index i = 0; i < v.size(); ++i) d.add((v[i] - mean) * (v[i] - mean));
  const double var = v.size() > 1 ? d.value() / (n - 1.0) : 0.0;
  const double cov = mean > 0.0 ? std::sqrt(var / n) / mean : std::numeric_limits<double>::infinity();
  return {mean, cov};
}
}  // namespace detail

/// pf_eps = mean of pi over n_eps draws of X; no true-model calls.
inline FactorEstimate estimate_pf_epsilon(const KrigingModel& model, const RandomVector& rv, std::size_t n_eps,
                                          std::uint64_t seed) {
  if (n_eps < 1000) throw ArgumentError("pf_epsilon needs at least 1000 samples");
  Rng rng(seed);
  Vector pis(static_cast<Eigen::Index>(n_eps));
  for (std::size_t done = 0; done < n_eps;) {
    const std::size_t rows = std::min(detail::kBatchRows, n_eps - done);
    const auto pred = model.predict_batch(sample_mc(rv, rows, rng));
    for (Eigen::Index i = 0; i < pred.mu.size(); ++i)
      pis[static_cast<Eigen::Index>(done) + i] = classification_pi(pred.mu[i], pred.sigma[i]);
    done += rows;
  }
  return detail::mean_with_cov(pis);
}

struct InstrumentalOptions {
  int moves = 5;                          ///< slice sweeps applied to every chain
  std::size_t max_proposals = 20000000;  ///< rejection budget for exact chain starts
  SliceOptions slice;
};

struct InstrumentalSample {
  Matrix points;
  Vector pi;
  std::size_t proposals = 0;
  std::size_t exact_starts = 0;  ///< chains started from an accepted rejection draw
  SliceStats stats;
};

/// n draws targeting pi(x) f_X(x). Each chain starts from an exact draw
/// obtained by rejection (propose from f_X, accept with probability pi) and
/// then takes a few componentwise slice sweeps, which leave the target
/// invariant; one sample is kept per chain. When rejection yields fewer
/// starts than chains within the proposal budget, the accepted starts are
/// reused cyclically (or the best candidate found if none was accepted).
inline InstrumentalSample sample_instrumental(const KrigingModel& model, const RandomVector& rv, std::size_t n,
                                              std::uint64_t seed, const InstrumentalOptions& opt = {}) {
  if (n == 0) throw ArgumentError("instrumental sample size must be at least 1");
  const auto m = static_cast<Eigen::Index>(model.dimension());
  InstrumentalSample out;
  Rng rng(seed);
  Matrix starts(static_cast<Eigen::Index>(n), m);
  std::size_t accepted = 0;
  double best_log = -std::numeric_limits<double>::infinity();
  Vector best(m);
  while (accepted < n && out.proposals < opt.max_proposals) {
    const std::size_t rows = std::min<std::size_t>(1 << 14, opt.max_proposals - out.proposals);
    const Matrix xs = sample_mc(rv, rows, rng);
    const auto pred = model.predict_batch(xs);
    for (Eigen::Index i = 0; i < xs.rows() && accepted < n; ++i) {
      const double pi = classification_pi(pred.mu[i], pred.sigma[i]);
      if (pi > 1e-12 && uniform_open(rng) < pi) starts.row(static_cast<Eigen::Index>(accepted++)) = xs.row(i);
      if (pi > 0.0) {
        const double lt = std::log(pi) + detail::log_density(rv, xs.row(i).transpose());
        if (lt > best_log) {
          best_log = lt;
          best = xs.row(i).transpose();
        }
      }
    }
    out.proposals += rows;
  }
  out.exact_starts = accepted;
  if (accepted == 0) {
    for (Eigen::Index i = 0; i < model.points().rows(); ++i) {
      const double pi = classification_pi(model.predict(model.points().row(i).transpose()));
      if (pi <= 0.0) continue;
      const double lt = std::log(pi) + detail::log_density(rv, model.points().row(i).transpose());
      if (lt > best_log) {
        best_log = lt;
        best = model.points().row(i).transpose();
      }
    }
    if (!(best_log > -std::numeric_limits<double>::infinity()) ||
        classification_pi(model.predict(best)) <= 1e-12)
      throw SamplerError("instrumental density has no support with pi > 1e-12");
    starts.row(0) = best.transpose();
    accepted = 1;
  }
  for (std::size_t i = out.exact_starts; i < n; ++i)
    starts.row(static_cast<Eigen::Index>(i)) = starts.row(static_cast<Eigen::Index>(i % accepted));

  auto log_target = [&](const Vector& x) {
    const double pi = classification_pi(model.predict(x));
    if (!(pi > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::log(pi) + detail::log_density(rv, x);
  };
  SliceOptions so = opt.slice;
  so.width *= rv.stddev().mean();
  out.points.resize(static_cast<Eigen::Index>(n), m);
  out.pi.resize(static_cast<Eigen::Index>(n));
  Rng chain_rng(mix_seed(seed, 1));
  for (std::size_t c = 0; c < n; ++c) {
    Vector x = starts.row(static_cast<Eigen::Index>(c)).transpose();
    double lf = log_target(x);
    for (int s = 0; s < opt.moves; ++s) slice_sweep(log_target, x, lf, so, chain_rng, out.stats);
    out.points.row(static_cast<Eigen::Index>(c)) = x.transpose();
    out.pi[static_cast<Eigen::Index>(c)] = classification_pi(model.predict(x));
  }
  return out;
}

/// alpha_corr = mean of 1{g <= 0} / pi over samples drawn from h; exactly one
/// true-model call per sample.
inline FactorEstimate estimate_alpha_corr(const LimitState& ls, const KrigingModel& model, const Matrix& samples,
                                          EvalLedger& ledger) {
  if (samples.rows() == 0) throw ArgumentError("no correction samples");
  const auto pred = model.predict_batch(samples);
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    if (!(classification_pi(pred.mu[i], pred.sigma[i]) > 0.0))
      throw EstimatorError("classification function underflows at correction sample " + std::to_string(i));
  const Vector g = evaluate_batch(ls, samples, ledger);
  Vector ratio(samples.rows());
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    ratio[i] = g[i] <= 0.0 ? 1.0 / classification_pi(pred.mu[i], pred.sigma[i]) : 0.0;
  return detail::mean_with_cov(ratio);
}

struct MetaIsOptions {
  AdaptiveKrigingOptions doe;  ///< enrichment of the surrogate (margin sampling by default)
  std::size_t n_eps = 100000;
  std::size_t n_corr = 200;
  InstrumentalOptions instrumental;
  std::uint64_t seed = 0;

  MetaIsOptions() {
    doe.enrichment = Enrichment::Margin;
    doe.max_calls = 100;
  }
};

struct MetaIsResult {
  double pf = 0.0;
  double pf_epsilon = 0.0;
  double alpha_corr = 0.0;
  double cov_epsilon = 0.0;
  double cov_alpha = 0.0;
  double cov_total = 0.0;
  std::size_t n_model_calls_doe = 0;
  std::size_t n_model_calls_corr = 0;
  bool converged = false;
  std::string stop_reason;
  PfBounds bounds;
  std::vector<AdaptiveKrigingStep> trace;
  std::vector<std::string> warnings;
};

/// The two-factor estimator on a given surrogate; `ls`, `model` and `rv` share
/// one coordinate system.
inline MetaIsResult metais_with_surrogate(const LimitState& ls, const KrigingModel& model, const RandomVector& rv,
                                          std::size_t n_eps, std::size_t n_corr, std::uint64_t seed,
                                          EvalLedger& ledger, const InstrumentalOptions& iopt = {}) {
  MetaIsResult r;
  const auto eps = estimate_pf_epsilon(model, rv, n_eps, mix_seed(seed, 21));
  const auto h = sample_instrumental(model, rv, n_corr, mix_seed(seed, 22), iopt);
  const std::size_t before = ledger.call_count();
  const auto alpha = estimate_alpha_corr(ls, model, h.points, ledger);
  r.n_model_calls_corr = ledger.call_count() - before;
  r.pf_epsilon = eps.value;
  r.alpha_corr = alpha.value;
  r.pf = r.alpha_corr * r.pf_epsilon;
  r.cov_epsilon = eps.cov;
  r.cov_alpha = alpha.cov;
  r.cov_total = std::sqrt(eps.cov * eps.cov + alpha.cov * alpha.cov);
  r.converged = true;
  if (h.exact_starts < n_corr)
    r.warnings.push_back("only " + std::to_string(h.exact_starts) + " of " + std::to_string(n_corr) +
                         " instrumental chains started from exact draws");
  if (alpha.value == 0.0) r.warnings.push_back("no failure among the correction samples");
  return r;
}

/// Full pipeline: margin-enriched kriging of G(u) = g(T^{-1}(u)), then the
/// two-factor estimate in the standard normal space.
inline MetaIsResult metais_estimate(const LimitState& ls, const RandomVector& rv, const MetaIsOptions& opt,
                                    EvalLedger& ledger) {
  auto doe = opt.doe;
  doe.seed = mix_seed(opt.seed, 30);
  const auto run = adaptive_kriging(ls, rv, doe, ledger);
  const auto g = standard_space_limit_state(ls, rv);
  auto r = metais_with_surrogate(g, *run.model, RandomVector::standard_normal(rv.dimension()), opt.n_eps, opt.n_corr,
                                 mix_seed(opt.seed, 31), ledger, opt.instrumental);
  r.n_model_calls_doe = run.n_calls;
  r.converged = run.converged;
  r.stop_reason = run.stop_reason;
  r.bounds = run.bounds;
  r.trace = run.trace;
  if (!run.converged) r.warnings.push_back("surrogate enrichment stopped before convergence (" + run.stop_reason + ")");
  for (const auto& w : run.model->warnings()) r.warnings.push_back(w);
  return r;
}

inline ReliabilityResult to_reliability_result(const MetaIsResult& m) {
  auto r = make_result(m.pf, m.pf > 0.0 ? std::optional<double>(m.cov_total) : std::nullopt,
                       m.n_model_calls_doe + m.n_model_calls_corr, "metais");
  r.extras["pf_epsilon"] = {m.pf_epsilon};
  r.extras["alpha_corr"] = {m.alpha_corr};
  r.extras["cov_epsilon"] = {m.cov_epsilon};
  r.extras["cov_alpha"] = {m.cov_alpha};
  r.extras["n_calls_doe"] = {static_cast<double>(m.n_model_calls_doe)};
  r.extras["n_calls_corr"] = {static_cast<double>(m.n_model_calls_corr)};
  r.warnings = m.warnings;
  return r;
}

}  // namespace reliab

#endif  // RELIAB_METAIS_HPP
