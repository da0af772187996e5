#include "reliab/probmodel.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>

using namespace reliab;

namespace {

std::vector<Marginal> all_families() {
  return {Marginal::gaussian(1.5, 2.0), Marginal::uniform(-1.0, 3.0), Marginal::lognormal(0.3, 0.4),
          Marginal::gamma(2.5, 1.7), Marginal::beta(2.0, 3.5, -1.0, 4.0)};
}

double integrate_pdf(const Marginal& m) {
  const auto s = m.support();
  auto f = [&](double x) { return m.pdf(x); };
  if (std::isinf(s.lo) && std::isinf(s.hi)) {
    boost::math::quadrature::sinh_sinh<double> q;
    return q.integrate(f, 1e-12);
  }
  if (std::isinf(s.hi)) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double t) { return f(s.lo + t); }, 1e-12);
  }
  boost::math::quadrature::tanh_sinh<double> q;
  return q.integrate(f, s.lo, s.hi, 1e-12);
}

}  // namespace

TEST(NormalQuantile, InvertsCdfAcrossTails) {
  // Upper-tail probabilities Phi(x) for large x round away their information,
  // so every point is checked through its lower-tail probability.
  for (double x : {-30.0, -8.0, -5.0, -3.0, -1.0, -1e-3, 0.0}) {
    const double p = normal_cdf(x);
    EXPECT_NEAR(normal_quantile(p), x, 1e-12 * std::max(1.0, std::abs(x))) << x;
  }
  for (double p : {0.25, 0.125, 0.0625}) EXPECT_EQ(normal_quantile(1.0 - p), -normal_quantile(p));
  EXPECT_DOUBLE_EQ(normal_quantile(0.5), 0.0);
  EXPECT_THROW(normal_quantile(1.5), DomainError);
}

TEST(Marginal, PdfIntegratesToOne) {
  for (const auto& m : all_families()) EXPECT_NEAR(integrate_pdf(m), 1.0, 1e-8) << to_string(m.family());
}

TEST(Marginal, CdfMonotoneWithSupportLimits) {
  for (const auto& m : all_families()) {
    const auto s = m.support();
    if (std::isfinite(s.lo)) EXPECT_EQ(m.cdf(s.lo), 0.0);
    if (std::isfinite(s.hi)) EXPECT_EQ(m.cdf(s.hi), 1.0);
    double prev = 0.0;
    for (double p = 0.001; p < 1.0; p += 0.01) {
      const double x = m.quantile(p);
      const double c = m.cdf(x);
      EXPECT_GE(c, prev);
      prev = c;
    }
  }
}

TEST(Marginal, QuantileInvertsCdf) {
  Rng rng(7);
  for (const auto& m : all_families()) {
    for (int i = 0; i < 200; ++i) {
      const double x = m.quantile(uniform_open(rng));
      EXPECT_NEAR(m.quantile(m.cdf(x)), x, 1e-9 * std::max(1.0, std::abs(x))) << to_string(m.family());
    }
  }
}

TEST(ToStandard, IdentityForStandardNormals) {
  const auto rv = RandomVector::standard_normal(2);
  Vector x(2);
  x << 0.5, -1.2;
  const auto u = rv.to_standard(x);
  EXPECT_DOUBLE_EQ(u.u[0], 0.5);
  EXPECT_DOUBLE_EQ(u.u[1], -1.2);
}

TEST(ToStandard, UniformMedianMapsToZero) {
  const RandomVector rv({Marginal::uniform(-1.0, 1.0)});
  EXPECT_NEAR(rv.to_standard(Vector::Zero(1)).u[0], 0.0, 1e-15);
}

TEST(ToStandard, LognormalAtE) {
  // F(e) = Phi(ln e) = Phi(1) for ln X ~ N(0,1).
  const RandomVector rv({Marginal::lognormal(0.0, 1.0)});
  Vector x(1);
  x << std::exp(1.0);
  EXPECT_NEAR(rv.to_standard(x).u[0], 1.0, 1e-12);
}

TEST(ToStandard, OutsideSupportIsDomainError) {
  const RandomVector rv({Marginal::uniform(0.0, 1.0), Marginal::gamma(2.0, 1.0)});
  Vector x(2);
  x << 1.5, 1.0;
  EXPECT_THROW(rv.to_standard(x), DomainError);
  x << 0.5, -1.0;
  EXPECT_THROW(rv.to_standard(x), DomainError);
}

TEST(FromStandard, Examples) {
  const auto rv = RandomVector::standard_normal(2);
  Vector u(2);
  u << 1.0, 2.0;
  EXPECT_EQ(rv.from_standard(u), u);

  const RandomVector uni({Marginal::uniform(0.0, 1.0)});
  EXPECT_NEAR(uni.from_standard(Vector::Zero(1))[0], 0.5, 1e-15);
}

TEST(FromStandard, GammaMedianMatchesIncompleteGammaOracle) {
  // Gamma(2,1): F(x) = 1 - e^{-x}(1 + x); bisection for F = 1/2.
  double lo = 0.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (1.0 - std::exp(-mid) * (1.0 + mid) < 0.5 ? lo : hi) = mid;
  }
  const RandomVector rv({Marginal::gamma(2.0, 1.0)});
  EXPECT_NEAR(rv.from_standard(Vector::Zero(1))[0], 0.5 * (lo + hi), 1e-10);
}

TEST(Transform, RoundTripEveryFamily) {
  for (const auto& m : all_families()) {
    const RandomVector rv({m});
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
      const double x = m.quantile(uniform_open(rng));
      Vector v(1);
      v << x;
      const double back = rv.from_standard(rv.to_standard(v))[0];
      EXPECT_NEAR(back, x, 1e-8 * std::max(1.0, std::abs(x))) << to_string(m.family());
    }
  }
}

TEST(Transform, RoundTripCorrelated) {
  Matrix c(3, 3);
  c << 1.0, 0.4, -0.2, 0.4, 1.0, 0.3, -0.2, 0.3, 1.0;
  const RandomVector rv({Marginal::gaussian(1.0, 2.0), Marginal::gamma(3.0, 0.5), Marginal::uniform(0.0, 2.0)}, c);
  const Matrix xs = sample(rv, 1000, SamplingScheme::MonteCarlo, 3);
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    const Vector x = xs.row(i).transpose();
    const Vector back = rv.from_standard(rv.to_standard(x));
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(back[j], x[j], 1e-8 * std::max(1.0, std::abs(x[j])));
  }
}

TEST(RandomVector, RejectsBadCorrelation) {
  Matrix c(2, 2);
  c << 1.0, 1.2, 1.2, 1.0;
  EXPECT_THROW(RandomVector({Marginal::standard_normal(), Marginal::standard_normal()}, c), ModelError);
  c << 1.0, 0.2, 0.3, 1.0;
  EXPECT_THROW(RandomVector({Marginal::standard_normal(), Marginal::standard_normal()}, c), ModelError);
  c << 2.0, 0.0, 0.0, 1.0;
  EXPECT_THROW(RandomVector({Marginal::standard_normal(), Marginal::standard_normal()}, c), ModelError);
}

TEST(JointPdf, Examples) {
  EXPECT_NEAR(RandomVector::standard_normal(2).joint_pdf(Vector::Zero(2)), 1.0 / (2.0 * std::numbers::pi), 1e-15);
  const RandomVector box({Marginal::uniform(-1.0, 1.0), Marginal::uniform(-1.0, 1.0)});
  EXPECT_DOUBLE_EQ(box.joint_pdf(Vector::Zero(2)), 0.25);
  Vector out(2);
  out << 0.0, 1.5;
  EXPECT_EQ(box.joint_pdf(out), 0.0);
}

TEST(JointPdf, ProductOfMarginalsWhenIndependent) {
  const auto fams = all_families();
  const RandomVector rv(fams);
  const Matrix xs = sample(rv, 50, SamplingScheme::MonteCarlo, 5);
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    double prod = 1.0;
    for (std::size_t j = 0; j < fams.size(); ++j) prod *= fams[j].pdf(xs(i, static_cast<Eigen::Index>(j)));
    EXPECT_NEAR(rv.joint_pdf(xs.row(i).transpose()), prod, 1e-14 * prod);
  }
}

TEST(JointPdf, GaussianCopulaWithNormalMarginalsIsBivariateNormal) {
  const double rho = 0.6;
  Matrix c(2, 2);
  c << 1.0, rho, rho, 1.0;
  const RandomVector rv({Marginal::standard_normal(), Marginal::standard_normal()}, c);
  for (double a : {-1.0, 0.0, 0.7}) {
    for (double b : {-0.5, 1.3}) {
      Vector x(2);
      x << a, b;
      const double q = (a * a - 2 * rho * a * b + b * b) / (1 - rho * rho);
      const double ref = std::exp(-0.5 * q) / (2 * std::numbers::pi * std::sqrt(1 - rho * rho));
      EXPECT_NEAR(rv.joint_pdf(x), ref, 1e-14);
    }
  }
}

TEST(Sample, LatinHypercubeStratification) {
  const RandomVector rv({Marginal::uniform(0.0, 1.0)});
  const Matrix s = sample(rv, 4, SamplingScheme::LatinHypercube, 42);
  std::vector<int> bins(4, 0);
  for (Eigen::Index i = 0; i < 4; ++i) ++bins[static_cast<std::size_t>(s(i, 0) * 4.0)];
  for (int b : bins) EXPECT_EQ(b, 1);
}

TEST(Sample, LatinHypercubeStratificationEveryColumn) {
  const RandomVector rv(all_families());
  const std::size_t n = 37;
  const Matrix s = sample(rv, n, SamplingScheme::LatinHypercube, 9);
  for (std::size_t j = 0; j < rv.dimension(); ++j) {
    std::vector<int> bins(n, 0);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double p = rv.marginals()[j].cdf(s(i, static_cast<Eigen::Index>(j)));
      ++bins[std::min(n - 1, static_cast<std::size_t>(p * static_cast<double>(n)))];
    }
    for (int b : bins) EXPECT_EQ(b, 1);
  }
}

TEST(Sample, DeterministicPerSeed) {
  const RandomVector rv(all_families());
  for (auto scheme : {SamplingScheme::MonteCarlo, SamplingScheme::LatinHypercube}) {
    EXPECT_EQ(sample(rv, 20, scheme, 123), sample(rv, 20, scheme, 123));
    EXPECT_NE(sample(rv, 20, scheme, 123), sample(rv, 20, scheme, 124));
  }
}

TEST(Sample, ZeroSizeRejected) {
  EXPECT_THROW(sample(RandomVector::standard_normal(1), 0, SamplingScheme::MonteCarlo, 1), ArgumentError);
}

TEST(Sample, MonteCarloMeanOfStandardNormal) {
  const Matrix s = sample(RandomVector::standard_normal(1), 100000, SamplingScheme::MonteCarlo, 2024);
  EXPECT_NEAR(s.col(0).mean(), 0.0, 0.02);
}

TEST(Sample, KolmogorovSmirnovAgainstAnalyticalCdf) {
  const std::size_t n = 100000;
  for (const auto& m : all_families()) {
    const Matrix s = sample(RandomVector({m}), n, SamplingScheme::MonteCarlo, 77);
    std::vector<double> v(s.data(), s.data() + s.size());
    std::sort(v.begin(), v.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = m.cdf(v[i]);
      d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    EXPECT_LT(d, 1.63 / std::sqrt(static_cast<double>(n))) << to_string(m.family());
  }
}
