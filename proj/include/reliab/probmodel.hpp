#ifndef RELIAB_PROBMODEL_HPP
#define RELIAB_PROBMODEL_HPP

#include "reliab/core.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <string>
#include <utility>
#include <vector>

namespace reliab {

enum class Family { Gaussian, Uniform, Lognormal, Gamma, Beta };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::Uniform: return "uniform";
    case Family::Lognormal: return "lognormal";
    case Family::Gamma: return "gamma";
    case Family::Beta: return "beta";
  }
  return "?";
}

inline Family family_from_string(const std::string& s) {
  if (s == "gaussian" || s == "normal") return Family::Gaussian;
  if (s == "uniform") return Family::Uniform;
  if (s == "lognormal") return Family::Lognormal;
  if (s == "gamma") return Family::Gamma;
  if (s == "beta") return Family::Beta;
  throw ArgumentError("unknown distribution family '" + s + "'");
}

struct Interval {
  double lo;
  double hi;
};

/// A univariate input distribution.
///
/// Parameter conventions:
///   Gaussian  {mean, std}
///   Uniform   {lo, hi}
///   Lognormal {lambda, zeta}: ln X ~ N(lambda, zeta^2)
///   Gamma     {shape k, scale theta}: f(x) ~ x^{k-1} exp(-x/theta) on (0, inf)
///   Beta      {alpha, beta, lo, hi}: (X-lo)/(hi-lo) ~ Beta(alpha, beta)
class Marginal {
 public:
  static Marginal gaussian(double mean, double std) {
    if (!(std > 0.0) || !std::isfinite(mean))
      throw ArgumentError("gaussian marginal needs finite mean and std > 0");
    return Marginal(Family::Gaussian, {mean, std});
  }
  static Marginal standard_normal() { return gaussian(0.0, 1.0); }
  static Marginal uniform(double lo, double hi) {
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
      throw ArgumentError("uniform marginal needs finite lo < hi");
    return Marginal(Family::Uniform, {lo, hi});
  }
  static Marginal lognormal(double lambda, double zeta) {
    if (!(zeta > 0.0) || !std::isfinite(lambda))
      throw ArgumentError("lognormal marginal needs zeta > 0");
    return Marginal(Family::Lognormal, {lambda, zeta});
  }
  /// Lognormal parametrized by the mean and standard deviation of X itself.
  static Marginal lognormal_from_moments(double mean, double std) {
    if (!(mean > 0.0) || !(std > 0.0))
      throw ArgumentError("lognormal moments must be positive");
    const double zeta2 = std::log1p((std / mean) * (std / mean));
    return lognormal(std::log(mean) - 0.5 * zeta2, std::sqrt(zeta2));
  }
  static Marginal gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
      throw ArgumentError("gamma marginal needs shape > 0 and scale > 0");
    return Marginal(Family::Gamma, {shape, scale});
  }
  static Marginal beta(double alpha, double beta, double lo = 0.0, double hi = 1.0) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(hi > lo))
      throw ArgumentError("beta marginal needs alpha, beta > 0 and lo < hi");
    return Marginal(Family::Beta, {alpha, beta, lo, hi});
  }

  Family family() const noexcept { return family_; }
  const std::vector<double>& params() const noexcept { return params_; }

  Interval support() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    switch (family_) {
      case Family::Gaussian: return {-inf, inf};
      case Family::Uniform: return {params_[0], params_[1]};
      case Family::Lognormal:
      case Family::Gamma: return {0.0, inf};
      case Family::Beta: return {params_[2], params_[3]};
    }
    return {-inf, inf};
  }

  bool in_open_support(double x) const {
    const auto s = support();
    return x > s.lo && x < s.hi;
  }

  double pdf(double x) const {
    if (std::isnan(x)) return 0.0;
    switch (family_) {
      case Family::Gaussian: {
        const double z = (x - params_[0]) / params_[1];
        return normal_pdf(z) / params_[1];
      }
      case Family::Uniform:
        return (x >= params_[0] && x <= params_[1]) ? 1.0 / (params_[1] - params_[0]) : 0.0;
      case Family::Lognormal: {
        if (!(x > 0.0)) return 0.0;
        const double z = (std::log(x) - params_[0]) / params_[1];
        return normal_pdf(z) / (params_[1] * x);
      }
      case Family::Gamma: {
        if (!(x > 0.0) || std::isinf(x)) return 0.0;
        const double k = params_[0];
        const double y = x / params_[1];
        return std::exp((k - 1.0) * std::log(y) - y - std::lgamma(k)) / params_[1];
      }
      case Family::Beta: {
        const double w = params_[3] - params_[2];
        const double t = (x - params_[2]) / w;
        if (!(t > 0.0 && t < 1.0)) return 0.0;
        const double a = params_[0], b = params_[1];
        const double log_b = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
        return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) - log_b) / w;
      }
    }
    return 0.0;
  }

  double cdf(double x) const {
    if (std::isnan(x)) throw DomainError("cdf of NaN");
    switch (family_) {
      case Family::Gaussian: return normal_cdf((x - params_[0]) / params_[1]);
      case Family::Uniform:
        return std::clamp((x - params_[0]) / (params_[1] - params_[0]), 0.0, 1.0);
      case Family::Lognormal:
        return x > 0.0 ? normal_cdf((std::log(x) - params_[0]) / params_[1]) : 0.0;
      case Family::Gamma:
        if (!(x > 0.0)) return 0.0;
        if (std::isinf(x)) return 1.0;
        return boost::math::gamma_p(params_[0], x / params_[1]);
      case Family::Beta: {
        const double t = (x - params_[2]) / (params_[3] - params_[2]);
        if (!(t > 0.0)) return 0.0;
        if (!(t < 1.0)) return 1.0;
        return boost::math::ibeta(params_[0], params_[1], t);
      }
    }
    return 0.0;
  }

  /// Survival function 1 - F(x), evaluated without cancellation.
  double sf(double x) const {
    if (std::isnan(x)) throw DomainError("sf of NaN");
    switch (family_) {
      case Family::Gaussian: return normal_cdf(-(x - params_[0]) / params_[1]);
      case Family::Uniform:
        return std::clamp((params_[1] - x) / (params_[1] - params_[0]), 0.0, 1.0);
      case Family::Lognormal:
        return x > 0.0 ? normal_cdf(-(std::log(x) - params_[0]) / params_[1]) : 1.0;
      case Family::Gamma:
        if (!(x > 0.0)) return 1.0;
        if (std::isinf(x)) return 0.0;
        return boost::math::gamma_q(params_[0], x / params_[1]);
      case Family::Beta: {
        const double t = (x - params_[2]) / (params_[3] - params_[2]);
        if (!(t > 0.0)) return 1.0;
        if (!(t < 1.0)) return 0.0;
        return boost::math::ibetac(params_[0], params_[1], t);
      }
    }
    return 0.0;
  }

  /// F^{-1}(p).
  double quantile(double p) const {
    if (std::isnan(p) || p < 0.0 || p > 1.0)
      throw DomainError("quantile: probability outside [0,1]");
    return quantile_split(p, 1.0 - p);
  }

  /// Quantile given both tails p = F(x), q = 1 - F(x); the smaller of the two
  /// drives the computation so extreme upper tails keep full precision.
  double quantile_split(double p, double q) const {
    const bool upper = p > 0.5;
    switch (family_) {
      case Family::Gaussian: {
        const double z = upper ? -normal_quantile(q) : normal_quantile(p);
        return params_[0] + params_[1] * z;
      }
      case Family::Uniform:
        return upper ? params_[1] - q * (params_[1] - params_[0])
                     : params_[0] + p * (params_[1] - params_[0]);
      case Family::Lognormal: {
        const double z = upper ? -normal_quantile(q) : normal_quantile(p);
        return std::exp(params_[0] + params_[1] * z);
      }
      case Family::Gamma:
      case Family::Beta: return bracketed_quantile(p, q);
    }
    return 0.0;
  }

  double mean() const {
    switch (family_) {
      case Family::Gaussian: return params_[0];
      case Family::Uniform: return 0.5 * (params_[0] + params_[1]);
      case Family::Lognormal: return std::exp(params_[0] + 0.5 * params_[1] * params_[1]);
      case Family::Gamma: return params_[0] * params_[1];
      case Family::Beta:
        return params_[2] + (params_[3] - params_[2]) * params_[0] / (params_[0] + params_[1]);
    }
    return 0.0;
  }

  double stddev() const {
    switch (family_) {
      case Family::Gaussian: return params_[1];
      case Family::Uniform: return (params_[1] - params_[0]) / std::sqrt(12.0);
      case Family::Lognormal: {
        const double z2 = params_[1] * params_[1];
        return mean() * std::sqrt(std::expm1(z2));
      }
      case Family::Gamma: return std::sqrt(params_[0]) * params_[1];
      case Family::Beta: {
        const double a = params_[0], b = params_[1];
        return (params_[3] - params_[2]) * std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));
      }
    }
    return 0.0;
  }

 private:
  Marginal(Family f, std::vector<double> p) : family_(f), params_(std::move(p)) {}

  // Bracketed TOMS 748 root-finding on whichever tail is smaller.
  double bracketed_quantile(double p, double q) const {
    const auto s = support();
    if (p <= 0.0) return s.lo;
    if (q <= 0.0) return s.hi;
    const bool upper = p > 0.5;
    auto residual = [&](double x) { return upper ? q - sf(x) : cdf(x) - p; };

    double lo = s.lo;
    double hi;
    if (std::isinf(s.hi)) {
      hi = std::max(mean() + stddev(), 1e-300);
      for (int i = 0; residual(hi) < 0.0; ++i) {
        lo = hi;
        hi *= 2.0;
        if (i > 2000 || std::isinf(hi)) throw RangeError("quantile bracket overflow");
      }
    } else {
      hi = s.hi;
    }
    auto tol = [](double a, double b) {
      return std::abs(b - a) <= 1e-13 * std::max(std::abs(a), std::abs(b)) ||
             std::abs(b - a) <= 1e-300;
    };
    std::uintmax_t max_iter = 500;
    const double f_lo = residual(lo);
    const double f_hi = residual(hi);
    if (f_lo >= 0.0) return lo;
    if (f_hi <= 0.0) return hi;
    const auto [a, b] =
        boost::math::tools::toms748_solve(residual, lo, hi, f_lo, f_hi, tol, max_iter);
    return 0.5 * (a + b);
  }

  Family family_;
  std::vector<double> params_;
};

/// A point of the standard normal space.
struct StandardNormalPoint {
  Vector u;
};

/// Joint input model: independent marginals tied by an optional Gaussian
/// copula with correlation matrix `correlation` (identity for independence).
class RandomVector {
 public:
  explicit RandomVector(std::vector<Marginal> marginals)
      : RandomVector(marginals, Matrix::Identity(static_cast<Eigen::Index>(marginals.size()),
                                                 static_cast<Eigen::Index>(marginals.size()))) {}

  RandomVector(std::vector<Marginal> marginals, Matrix correlation)
      : marginals_(std::move(marginals)), correlation_(std::move(correlation)) {
    const auto m = static_cast<Eigen::Index>(marginals_.size());
    if (m < 1) throw ArgumentError("random vector needs at least one marginal");
    if (correlation_.rows() != m || correlation_.cols() != m)
      throw ModelError("correlation matrix size does not match the number of marginals");
    for (Eigen::Index i = 0; i < m; ++i) {
      if (std::abs(correlation_(i, i) - 1.0) > 1e-12)
        throw ModelError("correlation matrix must have a unit diagonal");
      for (Eigen::Index j = 0; j < i; ++j)
        if (std::abs(correlation_(i, j) - correlation_(j, i)) > 1e-12)
          throw ModelError("correlation matrix must be symmetric");
    }
    independent_ = correlation_.isIdentity(0.0);
    chol_ = Eigen::LLT<Matrix>(correlation_);
    if (chol_.info() != Eigen::Success)
      throw ModelError("correlation matrix is not positive definite");
    const Matrix l = chol_.matrixL();
    log_det_ = 2.0 * l.diagonal().array().log().sum();
  }

  static RandomVector standard_normal(std::size_t m) {
    return RandomVector(std::vector<Marginal>(m, Marginal::standard_normal()));
  }

  std::size_t dimension() const noexcept { return marginals_.size(); }
  const std::vector<Marginal>& marginals() const noexcept { return marginals_; }
  const Matrix& correlation() const noexcept { return correlation_; }
  bool independent() const noexcept { return independent_; }

  bool is_standard_normal() const {
    if (!independent_) return false;
    for (const auto& m : marginals_)
      if (m.family() != Family::Gaussian || m.params()[0] != 0.0 || m.params()[1] != 1.0)
        return false;
    return true;
  }

  Vector mean() const {
    Vector v(dimension());
    for (std::size_t i = 0; i < dimension(); ++i) v[i] = marginals_[i].mean();
    return v;
  }

  Vector stddev() const {
    Vector v(dimension());
    for (std::size_t i = 0; i < dimension(); ++i) v[i] = marginals_[i].stddev();
    return v;
  }

  /// Isoprobabilistic map T: x -> u.
  StandardNormalPoint to_standard(const Vector& x) const {
    check_size(x);
    Vector z(dimension());
    for (std::size_t i = 0; i < dimension(); ++i) {
      const auto& m = marginals_[i];
      const double xi = x[static_cast<Eigen::Index>(i)];
      if (!m.in_open_support(xi))
        throw DomainError("to_standard: component " + std::to_string(i + 1) +
                          " lies outside the support of its marginal");
      const double p = m.cdf(xi);
      z[i] = p <= 0.5 ? normal_quantile(p) : -normal_quantile(m.sf(xi));
    }
    if (independent_) return {z};
    return {chol_.matrixL().solve(z)};
  }

  /// Inverse map T^{-1}: u -> x.
  Vector from_standard(const StandardNormalPoint& pt) const { return from_standard(pt.u); }

  Vector from_standard(const Vector& u) const {
    check_size(u);
    if (!u.allFinite()) throw ArgumentError("from_standard: non-finite standard point");
    const Vector z = independent_ ? u : Vector(chol_.matrixL() * u);
    Vector x(dimension());
    for (std::size_t i = 0; i < dimension(); ++i) {
      const double zi = z[static_cast<Eigen::Index>(i)];
      x[i] = marginals_[i].quantile_split(normal_cdf(zi), normal_cdf(-zi));
      if (!std::isfinite(x[i]))
        throw RangeError("from_standard: component " + std::to_string(i + 1) + " overflowed");
    }
    return x;
  }

  /// Joint density f_X(x); zero outside the support.
  double joint_pdf(const Vector& x) const {
    check_size(x);
    double prod = 1.0;
    for (std::size_t i = 0; i < dimension(); ++i) {
      const double xi = x[static_cast<Eigen::Index>(i)];
      if (!std::isfinite(xi)) return 0.0;
      prod *= marginals_[i].pdf(xi);
      if (prod == 0.0) return 0.0;
    }
    if (independent_) return prod;
    Vector z(dimension());
    for (std::size_t i = 0; i < dimension(); ++i) {
      const auto& m = marginals_[i];
      const double xi = x[static_cast<Eigen::Index>(i)];
      const double p = m.cdf(xi);
      z[i] = p <= 0.5 ? normal_quantile(p) : -normal_quantile(m.sf(xi));
      if (!std::isfinite(z[i])) return 0.0;
    }
    const Vector w = chol_.matrixL().solve(z);
    const double quad = w.squaredNorm() - z.squaredNorm();
    return prod * std::exp(-0.5 * quad - 0.5 * log_det_);
  }

 private:
  void check_size(const Vector& v) const {
    if (static_cast<std::size_t>(v.size()) != dimension())
      throw ArgumentError("point dimension " + std::to_string(v.size()) +
                          " does not match random vector dimension " +
                          std::to_string(dimension()));
  }

  std::vector<Marginal> marginals_;
  Matrix correlation_;
  Eigen::LLT<Matrix> chol_;
  double log_det_ = 0.0;
  bool independent_ = true;
};

enum class SamplingScheme { MonteCarlo, LatinHypercube };

/// Random permutation of 0..n-1 (Fisher-Yates driven by uniform_open so the
/// result does not depend on the standard library's shuffle).
inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(i));
    if (j >= i) j = i - 1;
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

/// Latin hypercube in the unit cube: each column holds exactly one point in
/// each of the n strata [k/n, (k+1)/n).
inline Matrix lhs_unit(std::size_t n, std::size_t m, Rng& rng) {
  if (n == 0) throw ArgumentError("sample size must be at least 1");
  Matrix p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const auto perm = random_permutation(n, rng);
    for (std::size_t i = 0; i < n; ++i)
      p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (static_cast<double>(perm[i]) + uniform_open(rng)) / static_cast<double>(n);
  }
  return p;
}

/// n independent draws of X (rows) continuing the given stream.
inline Matrix sample_mc(const RandomVector& rv, std::size_t n, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(rv.dimension());
  Matrix u(static_cast<Eigen::Index>(n), m);
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < m; ++j) u(i, j) = standard_normal(rng);
  if (rv.is_standard_normal()) return u;
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    u.row(i) = rv.from_standard(Vector(u.row(i).transpose())).transpose();
  return u;
}

/// Draws n realizations of the random vector (rows). Latin hypercube
/// stratification is applied to the independent standard normal variables,
/// i.e. per marginal when the inputs are independent.
inline Matrix sample(const RandomVector& rv, std::size_t n, SamplingScheme scheme,
                     std::uint64_t seed) {
  if (n == 0) throw ArgumentError("sample size must be at least 1");
  Rng rng(seed);
  if (scheme == SamplingScheme::MonteCarlo) return sample_mc(rv, n, rng);
  const Matrix u =
      lhs_unit(n, rv.dimension(), rng).unaryExpr([](double p) { return normal_quantile(p); });
  if (rv.is_standard_normal()) return u;
  Matrix x(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) x.row(i) = rv.from_standard(Vector(u.row(i).transpose())).transpose();
  return x;
}

}  // namespace reliab

#endif  // RELIAB_PROBMODEL_HPP
