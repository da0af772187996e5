#ifndef RELIAB_CORE_HPP
#define RELIAB_CORE_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace reliab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Error hierarchy. Every library failure derives from reliab::Error so callers
// (the CLI in particular) can map categories onto exit codes.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller input: wrong sizes, out-of-range options, empty pools.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Point outside the support of a distribution or polynomial family.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Ill-formed probabilistic or physical model (non-SPD correlation,
/// non-finite limit-state response, ...).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Numeric overflow while mapping between spaces.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Least-squares fit could not be carried out (rank deficiency, conditioning).
class FitError : public Error {
 public:
  using Error::Error;
};

/// Correlation matrix could not be factorized even after nugget escalation.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// Zero variance where a ratio needs it (Cornell index, U-function inputs).
class SingularError : public Error {
 public:
  using Error::Error;
};

/// An estimator met an impossible weight (zero instrumental density, pi
/// underflow at a correction sample).
class EstimatorError : public Error {
 public:
  using Error::Error;
};

/// MCMC could not locate any point of positive target density.
class SamplerError : public Error {
 public:
  using Error::Error;
};

/// Iterative search did not converge; carries the last iterate.
class IterationError : public Error {
 public:
  IterationError(const std::string& what, Vector last_iterate)
      : Error(what), last_iterate_(std::move(last_iterate)) {}
  const Vector& last_iterate() const noexcept { return last_iterate_; }

 private:
  Vector last_iterate_;
};

// ---------------------------------------------------------------------------
// Standard normal distribution.

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_log_pdf(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation (relative error ~1e-9) followed by one
/// Newton correction on the erfc-based CDF, which brings the result to
/// roundoff. The lower tail is computed directly and the upper tail by
/// symmetry so p close to 1 keeps its precision.
inline double normal_quantile(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0)
    throw DomainError("normal_quantile: probability outside [0,1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  if (p > 0.5) return -normal_quantile(1.0 - p);

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double pdf = normal_pdf(x);
  if (pdf > 0.0) x -= (normal_cdf(x) - p) / pdf;
  return x;
}

/// Generalized reliability index beta = -Phi^{-1}(pf).
inline double reliability_index(double pf) { return -normal_quantile(pf); }

// ---------------------------------------------------------------------------
// Random numbers. All sampling in the library goes through std::mt19937_64
// and inverse-transform sampling so streams are reproducible bit for bit for
// a given seed and build.

using Rng = std::mt19937_64;

/// Uniform draw in the open interval (0,1) with 53 random bits.
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) { return normal_quantile(uniform_open(rng)); }

/// SplitMix64 finalizer; derives independent sub-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Compensated (Neumaier) summation; order-insensitive to roundoff level.

class KahanSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// Thread count shared by the data-parallel loops.

inline std::atomic<unsigned>& thread_setting() {
  static std::atomic<unsigned> threads{0};
  return threads;
}

inline void set_threads(unsigned n) { thread_setting().store(n); }

inline unsigned thread_count() {
  const unsigned n = thread_setting().load();
  if (n > 0) return n;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// visited by exactly one thread, so per-index outputs are deterministic
/// regardless of the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t threads = std::min<std::size_t>(thread_count(), n);
  if (threads <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, t, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace reliab

#endif  // RELIAB_CORE_HPP
