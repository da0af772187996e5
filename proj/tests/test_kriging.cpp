#include "reliab/kriging.hpp"

#include <gtest/gtest.h>

using namespace reliab;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x[i++] = a;
  return x;
}

ExperimentalDesign design_of(const Matrix& xs, const std::function<double(const Vector&)>& g) {
  Vector y(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) y[i] = g(xs.row(i).transpose());
  return {xs, y};
}

double branin_like(const Vector& x) { return std::sin(1.3 * x[0]) + 0.5 * x[1] * x[1] - 0.3 * x[0] * x[1]; }

KrigingOptions fixed(const Vector& theta, TrendKind t) {
  KrigingOptions o;
  o.theta = theta;
  o.trend = t;
  return o;
}

// Correlations written out independently of the library kernel.
Matrix oracle_correlation(const Matrix& a, const Matrix& b, const Vector& theta) {
  Matrix r(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) s += std::pow((a(i, k) - b(j, k)) / theta[k], 2);
      r(i, j) = std::exp(-s);
    }
  return r;
}

Matrix oracle_trend(const Matrix& x, TrendKind t) {
  Matrix f(x.rows(), t == TrendKind::Constant ? 1 : 1 + x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    f(i, 0) = 1.0;
    if (t == TrendKind::Linear)
      for (Eigen::Index k = 0; k < x.cols(); ++k) f(i, 1 + k) = x(i, k);
  }
  return f;
}

}  // namespace

TEST(Kernel, Examples) {
  const CorrelationKernel k{KernelKind::SquaredExponential, vec({1.0}), 2.0};
  EXPECT_EQ(k(vec({0.3}), vec({0.3})), 1.0);
  EXPECT_NEAR(k(vec({0.0}), vec({1.0})), std::exp(-1.0), 1e-15);
  EXPECT_EQ(k(vec({2.0}), vec({-1.0})), k(vec({-1.0}), vec({2.0})));
  const CorrelationKernel wide{KernelKind::SquaredExponential, vec({1e8, 1e8}), 2.0};
  const Matrix pts = (Matrix(3, 2) << 0, 0, 1, 2, -3, 1).finished();
  EXPECT_LE((kernel_matrix(wide, pts) - Matrix::Ones(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
  const CorrelationKernel ge{KernelKind::GeneralizedExponential, vec({2.0}), 1.0};
  EXPECT_NEAR(ge(vec({0.0}), vec({3.0})), std::exp(-1.5), 1e-15);
  const Matrix r = kernel_matrix(k, pts.leftCols(1), 1e-3);
  EXPECT_EQ(r(1, 1), 1.001);
  EXPECT_THROW((CorrelationKernel{KernelKind::SquaredExponential, vec({-1.0}), 2.0}.validate()), ArgumentError);
  EXPECT_THROW((CorrelationKernel{KernelKind::GeneralizedExponential, vec({1.0}), 2.5}.validate()), ArgumentError);
}

TEST(KrigingFit, ClosedFormsMatchDenseOracle) {
  const Matrix xs = box_lhs(15, 2, 3.0, 4);
  const auto d = design_of(xs, branin_like);
  for (auto t : {TrendKind::Constant, TrendKind::Linear}) {
    const Vector theta = vec({1.3, 0.8});
    const auto model = krig_fit(d, fixed(theta, t));
    Matrix r = oracle_correlation(xs, xs, theta);
    r.diagonal().array() += model.nugget();
    const Matrix ri = r.fullPivLu().inverse();
    const Matrix f = oracle_trend(xs, t);
    const Vector a = (f.transpose() * ri * f).fullPivLu().solve(f.transpose() * ri * d.responses());
    const Vector res = d.responses() - f * a;
    const double s2 = res.dot(ri * res) / 15.0;
    EXPECT_LE((model.trend_coefficients() - a).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, a.cwiseAbs().maxCoeff()));
    EXPECT_NEAR(model.sigma2(), s2, 1e-8 * s2);
  }
}

TEST(KrigingPredict, MatchesBorderedSystemOracle) {
  const Matrix xs = box_lhs(12, 2, 3.0, 5);
  const auto d = design_of(xs, branin_like);
  for (auto t : {TrendKind::Constant, TrendKind::Linear}) {
    const Vector theta = vec({1.1, 1.7});
    const auto model = krig_fit(d, fixed(theta, t));
    Matrix r = oracle_correlation(xs, xs, theta);
    r.diagonal().array() += model.nugget();
    const Matrix f = oracle_trend(xs, t);
    const Eigen::Index p = f.cols(), n = xs.rows();
    Matrix k = Matrix::Zero(n + p, n + p);
    k.topRightCorner(p, n) = f.transpose();
    k.bottomLeftCorner(n, p) = f;
    k.bottomRightCorner(n, n) = r;
    const auto lu = k.fullPivLu();
    Vector rhs = Vector::Zero(n + p);
    rhs.tail(n) = d.responses();
    const Vector coef = lu.solve(rhs);
    const Matrix q = box_lhs(20, 2, 4.0, 6);
    const auto batch = model.predict_batch(q);
    for (Eigen::Index j = 0; j < q.rows(); ++j) {
      Vector fr(n + p);
      fr.head(p) = oracle_trend(q.row(j), t).transpose();
      fr.tail(n) = oracle_correlation(xs, q.row(j), theta).col(0);
      const double mu = fr.dot(coef);
      const double s2 = model.sigma2() * (1.0 - fr.dot(lu.solve(fr)));
      EXPECT_NEAR(batch.mu[j], mu, 1e-8 * std::max(1.0, std::abs(mu)));
      EXPECT_NEAR(batch.sigma[j] * batch.sigma[j], std::max(s2, 0.0), 1e-8 * model.sigma2());
      const auto single = model.predict(q.row(j).transpose());
      EXPECT_NEAR(single.mu, batch.mu[j], 1e-13 * std::max(1.0, std::abs(mu)));
    }
  }
}

TEST(KrigingFit, ResponsesInTrendSpan) {
  const Matrix xs = box_lhs(10, 2, 2.0, 1);
  const auto model = krig_fit(design_of(xs, [](const Vector&) { return 4.0; }));
  EXPECT_NEAR(model.trend_coefficients()[0], 4.0, 1e-10);
  EXPECT_LE(model.sigma2(), 1e-20);
  const auto lin = krig_fit(design_of(xs, [](const Vector& x) { return 1.0 + 2.0 * x[0] - x[1]; }),
                            [] {
                              KrigingOptions o;
                              o.trend = TrendKind::Linear;
                              return o;
                            }());
  EXPECT_LE((lin.trend_coefficients() - vec({1.0, 2.0, -1.0})).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(KrigingFit, LikelihoodBeatsGrid) {
  Matrix xs(10, 1);
  for (Eigen::Index i = 0; i < 10; ++i) xs(i, 0) = -2.0 + 4.0 * static_cast<double>(i) / 9.0 + 0.05 * std::sin(3.0 * i);
  const auto d = design_of(xs, [](const Vector& x) { return std::sin(2.0 * x[0]) + 0.3 * x[0]; });
  const auto model = krig_fit(d);
  const double fitted = krig_profiled_objective(d, TrendKind::Constant, model.kernel());
  const auto [lo, hi] = theta_bounds(xs, 1e-2, 1e2);
  double grid_best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    const double t = std::exp(std::log(lo[0]) + (std::log(hi[0]) - std::log(lo[0])) * i / 99.0);
    grid_best = std::min(grid_best, krig_profiled_objective(d, TrendKind::Constant, {KernelKind::SquaredExponential, vec({t}), 2.0}));
  }
  EXPECT_LE(fitted, grid_best + 1e-8 * std::abs(grid_best));
  EXPECT_NEAR(model.objective(), fitted, 1e-12 * std::abs(fitted));
}

TEST(KrigingFit, Errors) {
  const Matrix xs = box_lhs(3, 2, 1.0, 1);
  KrigingOptions o;
  o.trend = TrendKind::Linear;
  EXPECT_THROW(krig_fit(design_of(xs, branin_like), o), ArgumentError);
}

TEST(KrigingPredict, InterpolatesDesign) {
  const auto d = design_of(box_lhs(20, 2, 3.0, 7), branin_like);
  const auto model = krig_fit(d);
  const double range = d.responses().maxCoeff() - d.responses().minCoeff();
  const auto p = model.predict_batch(d.points());
  EXPECT_LE((p.mu - d.responses()).cwiseAbs().maxCoeff(), 1e-6 * range);
  EXPECT_LE(p.sigma.maxCoeff(), 1e-4 * std::sqrt(model.sigma2()));
}

TEST(KrigingPredict, FarFieldRevertsToTrend) {
  const auto model = krig_fit(design_of(box_lhs(15, 2, 2.0, 8), branin_like));
  const auto p = model.predict(vec({1e3, -1e3}));
  EXPECT_NEAR(p.mu, model.trend_coefficients()[0], 1e-10);
  EXPECT_GE(p.sigma * p.sigma, 0.9 * model.sigma2());
}

TEST(KrigingPredict, MidpointOfEqualObservations) {
  Matrix xs(2, 1);
  xs << -1.0, 1.0;
  const auto model = krig_fit(ExperimentalDesign(xs, vec({3.0, 3.0})));
  EXPECT_NEAR(model.predict(vec({0.0})).mu, 3.0, 1e-12);
}

TEST(KrigingPredict, LinearInResponses) {
  const Matrix xs = box_lhs(12, 2, 3.0, 9);
  const auto d = design_of(xs, branin_like);
  const Vector theta = vec({1.2, 0.9});
  const auto base = krig_fit(d, fixed(theta, TrendKind::Linear));
  const double c = -2.5;
  const auto scaled = krig_fit(ExperimentalDesign(xs, c * d.responses()), fixed(theta, TrendKind::Linear));
  const Matrix q = box_lhs(10, 2, 3.5, 10);
  const auto p0 = base.predict_batch(q);
  const auto p1 = scaled.predict_batch(q);
  // sigma_Y rescales by |c|; the correlation part of sigma is unchanged.
  EXPECT_LE((p1.mu - c * p0.mu).cwiseAbs().maxCoeff(), 1e-9 * p0.mu.cwiseAbs().maxCoeff());
  EXPECT_LE((p1.sigma / std::sqrt(scaled.sigma2()) - p0.sigma / std::sqrt(base.sigma2())).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LearningFunctions, UFunction) {
  EXPECT_EQ(u_function(0.0, 1.0), 0.0);
  EXPECT_EQ(u_function(2.0, 1.0), 2.0);
  EXPECT_EQ(u_function(-3.0, 1.5), 2.0);
  EXPECT_TRUE(std::isinf(u_function(1.0, 0.0)));
  EXPECT_EQ(u_function(0.0, 0.0), 0.0);
}

TEST(LearningFunctions, ClassificationPi) {
  EXPECT_EQ(classification_pi(0.0, 1.0, 0.0), 0.5);
  EXPECT_NEAR(classification_pi(-1.96 * 2.0, 2.0, 0.0), 0.9750021048517795, 1e-12);
  EXPECT_EQ(classification_pi(-1e-3, 0.0, 0.0), 1.0);
  EXPECT_EQ(classification_pi(1e-3, 0.0, 0.0), 0.0);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double mu = 3.0 * standard_normal(rng), s = std::abs(standard_normal(rng)) + 0.1, t = standard_normal(rng);
    EXPECT_NEAR(classification_pi(mu, s, t) + classification_pi(-mu, s, -t), 1.0, 1e-15);
    EXPECT_GE(classification_pi(mu, s, t), classification_pi(mu + 0.1, s, t));
  }
}

TEST(LearningFunctions, MarginProbability) {
  EXPECT_NEAR(margin_probability(0.0, 1.0, 1.96), 0.9500042097035591, 1e-12);
  EXPECT_LE(margin_probability(50.0, 1.0, 1.96), 1e-300);
  EXPECT_EQ(margin_probability(3.0, 1.0, std::numeric_limits<double>::infinity()), 1.0);
  // Deep inside the failure side both terms are near 1; the value must not round to 0.
  EXPECT_GT(margin_probability(-9.0, 1.0, 1.96), 0.0);
  EXPECT_NEAR(margin_probability(-9.0, 1.0, 1.96), margin_probability(9.0, 1.0, 1.96), 1e-30);
  EXPECT_THROW(margin_probability(0.0, 1.0, 0.0), ArgumentError);
}

TEST(EnrichAk, PicksZeroMeanOverDesignPoint) {
  Matrix xs(4, 1);
  xs << -2.0, -1.0, 1.0, 2.0;
  const auto model = krig_fit(ExperimentalDesign(xs, vec({-2.0, -1.0, 1.0, 2.0})));
  Matrix pool(2, 1);
  pool << 1.0, 0.0;
  EXPECT_EQ(enrich_ak(model, pool).index, 1u);
}

TEST(EnrichAk, TiesGoToLowestIndex) {
  const auto model = krig_fit(design_of(box_lhs(10, 2, 3.0, 2), branin_like));
  const Matrix pool = Matrix::Constant(5, 2, 0.37);
  EXPECT_EQ(enrich_ak(model, pool).index, 0u);
  EXPECT_THROW(enrich_ak(model, Matrix(0, 2)), ArgumentError);
}

TEST(EnrichAk, WaartsPickInsideUnitMargin) {
  const auto ls = benchmark_waarts();
  const Matrix u = box_lhs(12, 2, 5.0, 3);
  EvalLedger ledger;
  const auto model = krig_fit(ExperimentalDesign(u, evaluate_batch(ls, u, ledger)));
  const Matrix pool = sample(RandomVector::standard_normal(2), 10000, SamplingScheme::MonteCarlo, 4);
  const auto pick = enrich_ak(model, pool);
  EXPECT_LE(std::abs(pick.mu), pick.sigma);
  EXPECT_EQ(ledger.call_count(), 12u);
}

TEST(EnrichMargin, SinglePointInsideBandAndDeterministic) {
  const LimitState ls("shift", 1, [](const Vector& x) { return 1.5 - x[0] + 0.2 * std::sin(3.0 * x[0]); });
  Matrix xs(5, 1);
  xs << -4.0, -2.0, 0.0, 2.5, 4.5;
  EvalLedger ledger;
  const auto model = krig_fit(ExperimentalDesign(xs, evaluate_batch(ls, xs, ledger)));
  MarginOptions opt;
  opt.clusters = 1;
  opt.n_chain = 300;
  const auto rv = RandomVector::standard_normal(1);
  const auto a = enrich_margin(model, rv, opt, 11);
  ASSERT_FALSE(a.collapsed);
  ASSERT_EQ(a.points.rows(), 1);
  const auto p = model.predict(a.points.row(0).transpose());
  EXPECT_LE(std::abs(p.mu), opt.k * p.sigma);
  const auto b = enrich_margin(model, rv, opt, 11);
  EXPECT_EQ(a.points, b.points);
}

TEST(EnrichMargin, PointsHavePositiveMargin) {
  const auto ls = benchmark_waarts();
  const Matrix u = box_lhs(12, 2, 5.0, 5);
  EvalLedger ledger;
  const auto model = krig_fit(ExperimentalDesign(u, evaluate_batch(ls, u, ledger)));
  const auto m = enrich_margin(model, RandomVector::standard_normal(2), MarginOptions{}, 6);
  ASSERT_FALSE(m.collapsed);
  EXPECT_GE(m.points.rows(), 1);
  EXPECT_LE(m.points.rows(), 4);
  for (Eigen::Index i = 0; i < m.points.rows(); ++i)
    EXPECT_GT(margin_probability(model.predict(m.points.row(i).transpose()), 1.96), 0.0);
  EXPECT_EQ(ledger.call_count(), 12u);
}

TEST(EnrichMargin, CollapsesOnExactSurrogate) {
  const Matrix xs = box_lhs(8, 2, 3.0, 7);
  KrigingOptions o;
  o.trend = TrendKind::Linear;
  const auto model = krig_fit(design_of(xs, [](const Vector& x) { return 2.0 - x[0]; }), o);
  const auto m = enrich_margin(model, RandomVector::standard_normal(2), MarginOptions{}, 1);
  EXPECT_TRUE(m.collapsed);
  EXPECT_EQ(m.points.rows(), 0);
}

TEST(EnrichMargin, MarginMassShrinksOnWaarts) {
  const auto ls = benchmark_waarts();
  const auto rv = RandomVector::standard_normal(2);
  const Matrix u = box_lhs(12, 2, 5.0, 8);
  EvalLedger ledger;
  ExperimentalDesign d(u, evaluate_batch(ls, u, ledger));
  const Matrix probe = sample(rv, 20000, SamplingScheme::MonteCarlo, 9);
  std::vector<double> mass;
  for (int it = 0; it < 6; ++it) {
    const auto model = krig_fit(d);
    const auto p = model.predict_batch(probe);
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.mu.size(); ++i) s += margin_probability(p.mu[i], p.sigma[i], 1.96);
    mass.push_back(s / static_cast<double>(p.mu.size()));
    const auto m = enrich_margin(model, rv, MarginOptions{}, 100 + static_cast<std::uint64_t>(it));
    if (m.collapsed) break;
    const Vector y = evaluate_batch(ls, m.points, ledger);
    for (Eigen::Index i = 0; i < y.size(); ++i) d.add(m.points.row(i).transpose(), y[i]);
  }
  int increases = 0;
  for (std::size_t i = 1; i < mass.size(); ++i)
    if (mass[i] > mass[i - 1]) ++increases;
  EXPECT_LE(increases, 1);
  EXPECT_LT(mass.back(), mass.front());
}

TEST(PfBounds, OrderingAndDegenerateCase) {
  const auto model = krig_fit(design_of(box_lhs(10, 2, 4.0, 3), [](const Vector& x) { return 1.0 - x[0] + 0.3 * x[1] * x[1]; }));
  const auto rv = RandomVector::standard_normal(2);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto b = krig_pf_bounds(model, rv, 1.96, 20000, s);
    EXPECT_LE(b.minus, b.zero);
    EXPECT_LE(b.zero, b.plus);
  }
  KrigingOptions o;
  o.trend = TrendKind::Linear;
  const auto exact = krig_fit(design_of(box_lhs(8, 2, 3.0, 4), [](const Vector& x) { return 2.0 - x[0]; }), o);
  const auto b = krig_pf_bounds(exact, rv, 1.96, 50000, 2);
  EXPECT_EQ(b.minus, b.zero);
  EXPECT_EQ(b.zero, b.plus);
  EXPECT_EQ(b.spread(), 0.0);
  EXPECT_NEAR(b.zero, normal_cdf(-2.0), 4.0 * std::sqrt(normal_cdf(-2.0) / 50000.0));
}

TEST(AdaptiveKriging, LinearBenchmarkConvergesQuickly) {
  const auto ls = benchmark_linear(2.0, 2);
  AdaptiveKrigingOptions opt;
  opt.n_pool = 20000;
  opt.n_final = 200000;
  opt.seed = 5;
  EvalLedger ledger;
  AdaptiveKrigingRun run;
  const auto r = ak_mcs(ls, RandomVector::standard_normal(2), opt, ledger, &run);
  EXPECT_TRUE(run.converged);
  EXPECT_EQ(r.n_calls, ledger.call_count());
  EXPECT_EQ(run.design.size(), ledger.call_count());
  EXPECT_LE(run.bounds.spread(), 0.1);
  EXPECT_NEAR(r.pf, normal_cdf(-2.0), 0.1 * normal_cdf(-2.0));
  EXPECT_EQ(run.trace.size(), run.design.size() - 12 + 1);
}

TEST(AdaptiveKriging, PhysicalInputsMapThroughStandardSpace) {
  // g = X1 - X2 with X1 ~ LN, X2 ~ N; compared against the FORM-exact linear case in u.
  const RandomVector rv({Marginal::gaussian(5.0, 1.0), Marginal::gaussian(2.0, 0.5)});
  const LimitState ls("r-s", 2, [](const Vector& x) { return x[0] - x[1]; });
  AdaptiveKrigingOptions opt;
  opt.n_pool = 20000;
  opt.n_final = 200000;
  opt.seed = 2;
  EvalLedger ledger;
  const auto r = ak_mcs(ls, rv, opt, ledger);
  const double pf = normal_cdf(-3.0 / std::sqrt(1.25));
  EXPECT_NEAR(r.pf, pf, 0.1 * pf);
}
