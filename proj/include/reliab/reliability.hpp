#ifndef RELIAB_RELIABILITY_HPP
#define RELIAB_RELIABILITY_HPP

// Reference estimators: crude Monte Carlo, importance sampling, FOSM (Cornell
// index) and FORM (Hasofer-Lind index by improved HLRF).

#include "reliab/core.hpp"
#include "reliab/limitstate.hpp"
#include "reliab/probmodel.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace reliab {

/// Estimate of a failure probability.
struct ReliabilityResult {
  double pf = 0.0;
  double beta = 0.0;          ///< generalized index -Phi^{-1}(pf)
  std::optional<double> cov;  ///< coefficient of variation; absent for FORM
  std::size_t n_calls = 0;    ///< true-model evaluations
  std::string method;
  std::map<std::string, std::vector<double>> extras;
  std::vector<std::string> warnings;
};

inline ReliabilityResult make_result(double pf, std::optional<double> cov, std::size_t calls,
                                     std::string method) {
  ReliabilityResult r;
  r.pf = std::clamp(pf, 0.0, 1.0);
  r.beta = reliability_index(r.pf);
  r.cov = cov;
  r.n_calls = calls;
  r.method = std::move(method);
  return r;
}

/// Coefficient of variation of the crude Monte Carlo estimator in its
/// small-pf form 1/sqrt(n pf).
inline double mc_cov(double pf, std::size_t n) {
  if (n == 0) throw ArgumentError("mc_cov: n must be at least 1");
  if (!(pf > 0.0) || pf > 1.0) throw SingularError("mc_cov: undefined for pf outside (0,1]");
  return 1.0 / std::sqrt(static_cast<double>(n) * pf);
}

using ScalarFunction = std::function<double(const Vector&)>;

namespace detail {

inline constexpr std::size_t kBatchRows = 1 << 15;

/// Counts rows with value <= 0 over n draws of rv, generated batch by batch
/// from a single stream (results do not depend on the batch size).
template <class BatchEval>
std::size_t count_failures(const RandomVector& rv, std::size_t n, std::uint64_t seed,
                           BatchEval&& eval) {
  Rng rng(seed);
  std::size_t failures = 0;
  for (std::size_t done = 0; done < n;) {
    const std::size_t rows = std::min(kBatchRows, n - done);
    const Matrix xs = sample_mc(rv, rows, rng);
    const Vector g = eval(xs);
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (g[i] <= 0.0) ++failures;
    done += rows;
  }
  return failures;
}

inline ReliabilityResult mc_result(std::size_t failures, std::size_t n, std::size_t calls,
                                   std::string method) {
  const double pf = static_cast<double>(failures) / static_cast<double>(n);
  std::optional<double> cov;
  if (failures > 0) cov = mc_cov(pf, n);
  auto r = make_result(pf, cov, calls, std::move(method));
  r.extras["n_samples"] = {static_cast<double>(n)};
  r.extras["n_failures"] = {static_cast<double>(failures)};
  if (failures == 0)
    r.warnings.push_back("no failure observed in " + std::to_string(n) +
                         " samples; pf reported as 0");
  return r;
}

}  // namespace detail

/// Crude Monte Carlo: pf = N_f / n with failure {g <= 0}.
inline ReliabilityResult estimate_mc(const LimitState& ls, const RandomVector& rv, std::size_t n,
                                     std::uint64_t seed, EvalLedger& ledger) {
  if (n == 0) throw ArgumentError("estimate_mc: n must be at least 1");
  if (ls.dimension() != rv.dimension())
    throw ArgumentError("limit state and random vector dimensions differ");
  const std::size_t before = ledger.call_count();
  const auto nf = detail::count_failures(
      rv, n, seed, [&](const Matrix& xs) { return evaluate_batch(ls, xs, ledger); });
  return detail::mc_result(nf, n, ledger.call_count() - before, "mc");
}

inline ReliabilityResult estimate_mc(const LimitState& ls, const RandomVector& rv, std::size_t n,
                                     std::uint64_t seed) {
  EvalLedger ledger;
  return estimate_mc(ls, rv, n, seed, ledger);
}

/// Crude Monte Carlo on a surrogate (substitution estimator); no true-model
/// calls. `batch` maps an n x M matrix to n responses.
inline ReliabilityResult estimate_mc_surrogate(const std::function<Vector(const Matrix&)>& batch,
                                               const RandomVector& rv, std::size_t n,
                                               std::uint64_t seed, std::string method) {
  if (n == 0) throw ArgumentError("estimate_mc_surrogate: n must be at least 1");
  const auto nf = detail::count_failures(rv, n, seed, batch);
  return detail::mc_result(nf, n, 0, std::move(method));
}

inline ReliabilityResult estimate_mc_surrogate(const ScalarFunction& g, const RandomVector& rv,
                                               std::size_t n, std::uint64_t seed,
                                               std::string method) {
  return estimate_mc_surrogate(
      [&](const Matrix& xs) {
        Vector out(xs.rows());
        parallel_for(static_cast<std::size_t>(xs.rows()), [&](std::size_t lo, std::size_t hi) {
          for (std::size_t i = lo; i < hi; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            out[r] = g(xs.row(r).transpose());
          }
        });
        return out;
      },
      rv, n, seed, std::move(method));
}

// ---------------------------------------------------------------------------
// Importance sampling.

/// Instrumental density h with its sampler.
struct Instrumental {
  std::function<Matrix(std::size_t, Rng&)> sample;
  ScalarFunction density;
};

/// h = f_X.
inline Instrumental native_instrumental(const RandomVector& rv) {
  return {[rv](std::size_t n, Rng& rng) { return sample_mc(rv, n, rng); },
          [rv](const Vector& x) { return rv.joint_pdf(x); }};
}

namespace detail {
inline double standard_normal_density(const Vector& u) {
  double p = 1.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) p *= normal_pdf(u[i]);
  return p;
}
}  // namespace detail

/// Unit-variance Gaussian centred at `center` (standard normal space);
/// the classical design-point importance sampling density.
inline Instrumental shifted_normal_instrumental(const Vector& center) {
  return {[center](std::size_t n, Rng& rng) {
            Matrix u(static_cast<Eigen::Index>(n), center.size());
            for (Eigen::Index i = 0; i < u.rows(); ++i)
              for (Eigen::Index j = 0; j < u.cols(); ++j)
                u(i, j) = center[j] + standard_normal(rng);
            return u;
          },
          [center](const Vector& u) { return detail::standard_normal_density(u - center); }};
}

/// The zero-variance density h*(u) = 1{g(u) <= 0} phi(u) / Pf for the
/// linear benchmark g(u) = beta0 - d.u in standard normal space.
inline Instrumental optimal_linear_instrumental(double beta0, const Vector& direction) {
  const double pf = normal_cdf(-beta0);
  return {[beta0, direction, pf](std::size_t n, Rng& rng) {
            const Eigen::Index m = direction.size();
            const Matrix proj = Matrix::Identity(m, m) - direction * direction.transpose();
            Matrix u(static_cast<Eigen::Index>(n), m);
            for (Eigen::Index i = 0; i < u.rows(); ++i) {
              const double t = -normal_quantile(pf * uniform_open(rng));
              Vector z(m);
              for (Eigen::Index j = 0; j < m; ++j) z[j] = standard_normal(rng);
              u.row(i) = (t * direction + proj * z).transpose();
            }
            return u;
          },
          [beta0, direction, pf](const Vector& u) {
            if (beta0 - direction.dot(u) > 0.0) return 0.0;
            return detail::standard_normal_density(u) / pf;
          }};
}

/// Per-sample weights 1{g(x) <= 0} f_X(x) / h(x) at the rows of xs.
inline Vector importance_weights(const LimitState& ls, const RandomVector& rv,
                                 const Instrumental& h, const Matrix& xs, EvalLedger& ledger) {
  const Vector g = evaluate_batch(ls, xs, ledger);
  Vector w(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    const Vector x = xs.row(i).transpose();
    const double hx = h.density(x);
    if (!(hx > 0.0))
      throw EstimatorError("instrumental density is zero at drawn sample " + std::to_string(i));
    w[i] = g[i] <= 0.0 ? rv.joint_pdf(x) / hx : 0.0;
  }
  return w;
}

/// Sample mean and coefficient of variation of the mean.
struct MeanCov {
  double mean = 0.0;
  double cov = 0.0;  ///< +inf when the mean is zero
  double variance = 0.0;
};

inline MeanCov mean_and_cov(const Vector& v) {
  const auto n = static_cast<double>(v.size());
  KahanSum sum;
  for (Eigen::Index i = 0; i < v.size(); ++i) sum.add(v[i]);
  const double mean = sum.value() / n;
  KahanSum ss;
  for (Eigen::Index i = 0; i < v.size(); ++i) ss.add((v[i] - mean) * (v[i] - mean));
  const double var = v.size() > 1 ? ss.value() / (n - 1.0) : 0.0;
  const double cov = mean != 0.0 ? std::sqrt(var / n) / std::abs(mean)
                                 : std::numeric_limits<double>::infinity();
  return {mean, cov, var};
}

/// Classical importance sampling estimator.
inline ReliabilityResult estimate_is(const LimitState& ls, const RandomVector& rv,
                                     const Instrumental& h, std::size_t n, std::uint64_t seed,
                                     EvalLedger& ledger) {
  if (n == 0) throw ArgumentError("estimate_is: n must be at least 1");
  Rng rng(seed);
  const std::size_t before = ledger.call_count();
  const Matrix xs = h.sample(n, rng);
  const Vector w = importance_weights(ls, rv, h, xs, ledger);
  const auto mc = mean_and_cov(w);
  std::optional<double> cov;
  if (mc.mean > 0.0) cov = mc.cov;
  auto r = make_result(mc.mean, cov, ledger.call_count() - before, "is");
  r.extras["n_samples"] = {static_cast<double>(n)};
  if (mc.mean == 0.0) r.warnings.push_back("no failure sample drawn from the instrumental density");
  return r;
}

inline ReliabilityResult estimate_is(const LimitState& ls, const RandomVector& rv,
                                     const Instrumental& h, std::size_t n, std::uint64_t seed) {
  EvalLedger ledger;
  return estimate_is(ls, rv, h, n, seed, ledger);
}

// ---------------------------------------------------------------------------
// FOSM.

/// Cornell reliability index g(mu) / sqrt(grad^T Sigma grad), gradient by
/// central differences with step `step` relative to max(|mu_i|, sigma_i).
inline double cornell_index(const LimitState& ls, const RandomVector& rv, double step,
                            EvalLedger& ledger) {
  if (!(step > 0.0)) throw ArgumentError("cornell_index: step must be positive");
  const Vector mu = rv.mean();
  const Vector sd = rv.stddev();
  const double g0 = evaluate(ls, mu, ledger);
  Vector grad(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double h = step * std::max(std::abs(mu[i]), sd[i]);
    Vector xp = mu, xm = mu;
    xp[i] += h;
    xm[i] -= h;
    grad[i] = (evaluate(ls, xp, ledger) - evaluate(ls, xm, ledger)) / (2.0 * h);
  }
  const Matrix cov = sd.asDiagonal() * rv.correlation() * sd.asDiagonal();
  const double var = grad.dot(cov * grad);
  if (!(var > 0.0)) throw SingularError("cornell_index: linearized variance is zero");
  return g0 / std::sqrt(var);
}

inline double cornell_index(const LimitState& ls, const RandomVector& rv, double step = 1e-4) {
  EvalLedger ledger;
  return cornell_index(ls, rv, step, ledger);
}

// ---------------------------------------------------------------------------
// FORM.

struct FormOptions {
  double tol = 1e-6;       ///< on ||u_{k+1} - u_k||
  double gtol = 1e-6;      ///< on |G|, relative to max(1, |G(u0)|)
  int max_iter = 100;
  double fd_step = 1e-4;   ///< absolute, in standard space
  bool multistart = true;  ///< origin plus 2M axis points
  double start_radius = 1.0;
};

namespace detail {

struct FormRun {
  bool converged = false;
  Vector u;
  double g = 0.0;
  int iterations = 0;
};

inline FormRun ihlrf(const std::function<double(const Vector&)>& G, const Vector& u0, double g_scale,
                     const FormOptions& opt) {
  FormRun run;
  Vector u = u0;
  double gu = G(u);
  const Eigen::Index m = u.size();
  for (int k = 0; k < opt.max_iter; ++k) {
    run.iterations = k + 1;
    Vector grad(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      Vector up = u, um = u;
      up[i] += opt.fd_step;
      um[i] -= opt.fd_step;
      grad[i] = (G(up) - G(um)) / (2.0 * opt.fd_step);
    }
    const double gn2 = grad.squaredNorm();
    if (!(gn2 > 0.0) || !std::isfinite(gn2)) break;

    const Vector d = ((grad.dot(u) - gu) / gn2) * grad - u;
    // Merit m(u) = |u|^2/2 + c|G(u)| with the Zhang & Der Kiureghian penalty.
    double c = u.norm() / std::sqrt(gn2);
    if (gu != 0.0) c = std::max(c, 0.5 * (u + d).squaredNorm() / std::abs(gu));
    c = 2.0 * std::max(c, 1e-8);
    auto merit = [&](const Vector& v, double gv) { return 0.5 * v.squaredNorm() + c * std::abs(gv); };
    const double m0 = merit(u, gu);
    const double slope = u.dot(d) + c * (gu > 0.0 ? 1.0 : (gu < 0.0 ? -1.0 : 0.0)) * grad.dot(d);

    double lambda = 1.0;
    Vector u_new = u + d;
    double g_new = G(u_new);
    for (int ls = 0; ls < 30; ++ls) {
      if (merit(u_new, g_new) <= m0 + 1e-4 * lambda * std::min(slope, 0.0)) break;
      lambda *= 0.5;
      u_new = u + lambda * d;
      g_new = G(u_new);
    }
    const double step = (u_new - u).norm();
    u = u_new;
    gu = g_new;
    if (step <= opt.tol && std::abs(gu) <= opt.gtol * g_scale) {
      run.converged = true;
      break;
    }
  }
  run.u = u;
  run.g = gu;
  return run;
}

}  // namespace detail

/// First-order reliability method in the standard normal space.
///
/// Returns beta_HL (signed by g(T^{-1}(0))), the design point u* (extras
/// "u_star", "x_star") and pf = Phi(-beta_HL). With multistart on, every
/// distinct converged design point is listed row-major in "design_points".
inline ReliabilityResult form(const LimitState& ls, const RandomVector& rv, const FormOptions& opt,
                              EvalLedger& ledger) {
  if (ls.dimension() != rv.dimension())
    throw ArgumentError("limit state and random vector dimensions differ");
  const auto m = static_cast<Eigen::Index>(rv.dimension());
  const std::size_t before = ledger.call_count();
  auto G = [&](const Vector& u) { return evaluate(ls, rv.from_standard(u), ledger); };

  const double g_origin = G(Vector::Zero(m));
  const double sign = g_origin < 0.0 ? -1.0 : 1.0;
  const double g_scale = std::max(1.0, std::abs(g_origin));

  std::vector<Vector> starts{Vector::Zero(m)};
  if (opt.multistart)
    for (Eigen::Index i = 0; i < m; ++i)
      for (double s : {1.0, -1.0}) starts.push_back(s * opt.start_radius * Vector::Unit(m, i));

  std::vector<Vector> found;
  Vector last = Vector::Zero(m);
  int iterations = 0;
  for (const auto& s : starts) {
    const auto run = detail::ihlrf(G, s, g_scale, opt);
    iterations += run.iterations;
    last = run.u;
    if (!run.converged) continue;
    bool dup = false;
    for (const auto& f : found)
      if ((f - run.u).norm() <= 1e-4 * std::max(1.0, f.norm())) dup = true;
    if (!dup) found.push_back(run.u);
  }
  if (found.empty())
    throw IterationError("FORM did not converge within " + std::to_string(opt.max_iter) +
                             " iterations from any start",
                         last);

  std::sort(found.begin(), found.end(),
            [](const Vector& a, const Vector& b) { return a.norm() < b.norm(); });
  const Vector& ustar = found.front();
  const double beta = sign * ustar.norm();

  ReliabilityResult r;
  r.pf = normal_cdf(-beta);
  r.beta = beta;
  r.n_calls = ledger.call_count() - before;
  r.method = "form";
  r.extras["u_star"] = std::vector<double>(ustar.data(), ustar.data() + ustar.size());
  const Vector xstar = rv.from_standard(ustar);
  r.extras["x_star"] = std::vector<double>(xstar.data(), xstar.data() + xstar.size());
  std::vector<double> all;
  for (const auto& f : found) all.insert(all.end(), f.data(), f.data() + f.size());
  r.extras["design_points"] = all;
  r.extras["design_point_count"] = {static_cast<double>(found.size())};
  r.extras["iterations"] = {static_cast<double>(iterations)};
  return r;
}

inline ReliabilityResult form(const LimitState& ls, const RandomVector& rv,
                              const FormOptions& opt = {}) {
  EvalLedger ledger;
  return form(ls, rv, opt, ledger);
}

}  // namespace reliab

#endif  // RELIAB_RELIABILITY_HPP
