#ifndef RELIAB_PCE_HPP
#define RELIAB_PCE_HPP

// Polynomial chaos expansions: tensorized orthonormal bases, total-degree
// truncation, regression and projection fits, leave-one-out error, moments,
// failure probability by substitution and a degree-adaptive driver.

#include "reliab/core.hpp"
#include "reliab/limitstate.hpp"
#include "reliab/orthopoly.hpp"
#include "reliab/probmodel.hpp"
#include "reliab/reliability.hpp"

#include <optional>
#include <string>
#include <vector>

namespace reliab {

struct MultiIndex {
  std::vector<int> alpha;

  int degree() const {
    int d = 0;
    for (int a : alpha) d += a;
    return d;
  }
  bool operator==(const MultiIndex&) const = default;
};

namespace detail {
inline void compositions(int remaining, std::size_t pos, std::vector<int>& cur,
                         std::vector<MultiIndex>& out) {
  if (pos + 1 == cur.size()) {
    cur[pos] = remaining;
    out.push_back({cur});
    return;
  }
  for (int a = remaining; a >= 0; --a) {
    cur[pos] = a;
    compositions(remaining - a, pos + 1, cur, out);
  }
  cur[pos] = 0;
}
}  // namespace detail

/// All multi-indices with |alpha| <= p, sorted by total degree and, within a
/// degree, by decreasing exponent of the first variable (then the second,
/// ...). For M=2, p=2: (0,0) (1,0) (0,1) (2,0) (1,1) (0,2).
inline std::vector<MultiIndex> truncation_set(std::size_t m, int p) {
  if (m < 1) throw ArgumentError("truncation_set: M must be at least 1");
  if (p < 0) throw ArgumentError("truncation_set: p must be nonnegative");
  std::vector<MultiIndex> out;
  std::vector<int> cur(m, 0);
  for (int d = 0; d <= p; ++d) detail::compositions(d, 0, cur, out);
  return out;
}

/// Binomial coefficient C(M+p, p) = |A| for total-degree truncation.
inline std::size_t total_degree_cardinality(std::size_t m, int p) {
  double c = 1.0;
  for (int k = 1; k <= p; ++k) c = c * static_cast<double>(m + static_cast<std::size_t>(k)) / k;
  return static_cast<std::size_t>(std::llround(c));
}

struct PceBasis {
  std::vector<PolySpec> families;  ///< one per input dimension
  std::vector<MultiIndex> indices;
  int degree = 0;

  std::size_t dimension() const noexcept { return families.size(); }
  std::size_t size() const noexcept { return indices.size(); }
};

inline PceBasis make_basis(std::vector<PolySpec> families, int p) {
  PceBasis b;
  b.indices = truncation_set(families.size(), p);
  b.families = std::move(families);
  b.degree = p;
  return b;
}

/// Families matched to the marginals of rv (Hermite throughout for
/// correlated inputs, which are mapped to the standard normal space).
inline PceBasis basis_for(const RandomVector& rv, int p) {
  std::vector<PolySpec> fam;
  for (const auto& m : rv.marginals())
    fam.push_back(rv.independent() ? natural_family(m) : PolySpec::hermite());
  return make_basis(std::move(fam), p);
}

/// Psi_alpha(z) = prod_i psi_{alpha_i}(z_i), with z in the germ coordinates.
inline double multivariate_eval(const PceBasis& basis, const MultiIndex& alpha, const Vector& z) {
  if (alpha.alpha.size() != basis.dimension() || static_cast<std::size_t>(z.size()) != basis.dimension())
    throw ArgumentError("multivariate_eval: dimension mismatch");
  double v = 1.0;
  for (std::size_t i = 0; i < basis.dimension(); ++i)
    v *= univariate_orthonormal(basis.families[i], alpha.alpha[i], z[static_cast<Eigen::Index>(i)]);
  return v;
}

/// Row of the design matrix: Psi_alpha(z) for every alpha of the basis.
inline Vector basis_row(const PceBasis& basis, const Vector& z) {
  std::vector<std::vector<double>> uni(basis.dimension());
  for (std::size_t i = 0; i < basis.dimension(); ++i)
    uni[i] = orthonormal_values(basis.families[i], basis.degree, z[static_cast<Eigen::Index>(i)]);
  Vector row(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) {
    double v = 1.0;
    for (std::size_t i = 0; i < basis.dimension(); ++i)
      v *= uni[i][static_cast<std::size_t>(basis.indices[k].alpha[i])];
    row[static_cast<Eigen::Index>(k)] = v;
  }
  return row;
}

/// Map between physical inputs x and the germ coordinates z of a basis.
///
/// Matched marginal/family pairs use the exact affine map (log-affine for
/// lognormal/Hermite); any other pairing goes through the CDFs,
/// z = G^{-1}(F(x)). Correlated inputs are sent to the standard normal space.
class GermMap {
 public:
  GermMap(RandomVector rv, std::vector<PolySpec> families)
      : rv_(std::move(rv)), families_(std::move(families)) {
    if (families_.size() != rv_.dimension())
      throw ArgumentError("basis and random vector dimensions differ");
    if (!rv_.independent())
      for (const auto& f : families_)
        if (f.family != PolyFamily::Hermite)
          throw ArgumentError("correlated inputs require Hermite polynomials");
  }

  const RandomVector& random_vector() const noexcept { return rv_; }

  Vector to_germ(const Vector& x) const {
    if (!rv_.independent()) return rv_.to_standard(x).u;
    Vector z(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      z[i] = to_germ_1d(rv_.marginals()[static_cast<std::size_t>(i)],
                        families_[static_cast<std::size_t>(i)], x[i]);
    return z;
  }

  Vector from_germ(const Vector& z) const {
    if (!rv_.independent()) return rv_.from_standard(z);
    Vector x(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      x[i] = from_germ_1d(rv_.marginals()[static_cast<std::size_t>(i)],
                          families_[static_cast<std::size_t>(i)], z[i]);
    return x;
  }

 private:
  static bool matched(const Marginal& m, const PolySpec& f) {
    const auto nat = natural_family(m);
    return nat.family == f.family && std::abs(nat.a - f.a) < 1e-14 && std::abs(nat.b - f.b) < 1e-14;
  }

  static double to_germ_1d(const Marginal& m, const PolySpec& f, double x) {
    const auto& p = m.params();
    if (matched(m, f)) {
      switch (m.family()) {
        case Family::Gaussian: return (x - p[0]) / p[1];
        case Family::Lognormal:
          if (!(x > 0.0)) throw DomainError("lognormal input must be positive");
          return (std::log(x) - p[0]) / p[1];
        case Family::Uniform: return (2.0 * x - p[0] - p[1]) / (p[1] - p[0]);
        case Family::Gamma: return x / p[1];
        case Family::Beta: return 2.0 * (x - p[2]) / (p[3] - p[2]) - 1.0;
      }
    }
    return germ_marginal(f).quantile_split(m.cdf(x), m.sf(x));
  }

  static double from_germ_1d(const Marginal& m, const PolySpec& f, double z) {
    const auto& p = m.params();
    if (matched(m, f)) {
      switch (m.family()) {
        case Family::Gaussian: return p[0] + p[1] * z;
        case Family::Lognormal: return std::exp(p[0] + p[1] * z);
        case Family::Uniform: return 0.5 * (p[0] + p[1]) + 0.5 * (p[1] - p[0]) * z;
        case Family::Gamma: return p[1] * z;
        case Family::Beta: return p[2] + 0.5 * (z + 1.0) * (p[3] - p[2]);
      }
    }
    const auto g = germ_marginal(f);
    return m.quantile_split(g.cdf(z), g.sf(z));
  }

  RandomVector rv_;
  std::vector<PolySpec> families_;
};

struct PceDiagnostics {
  double empirical_error = 0.0;  ///< mean squared residual / response variance
  double loo_error = 0.0;        ///< leave-one-out MSE / response variance
  std::size_t n_used = 0;
  std::vector<std::string> warnings;
};

/// Fitted expansion g^PC(x) = sum_alpha a_alpha Psi_alpha(z(x)).
class PceModel {
 public:
  PceModel(PceBasis basis, Vector coefficients, GermMap map, PceDiagnostics diag = {})
      : basis_(std::move(basis)),
        coefficients_(std::move(coefficients)),
        map_(std::move(map)),
        diagnostics_(std::move(diag)) {
    if (static_cast<std::size_t>(coefficients_.size()) != basis_.size())
      throw ArgumentError("coefficient count does not match the basis size");
  }

  const PceBasis& basis() const noexcept { return basis_; }
  const Vector& coefficients() const noexcept { return coefficients_; }
  const GermMap& germ_map() const noexcept { return map_; }
  const PceDiagnostics& diagnostics() const noexcept { return diagnostics_; }
  PceDiagnostics& diagnostics() noexcept { return diagnostics_; }

  double coefficient(const MultiIndex& alpha) const {
    for (std::size_t k = 0; k < basis_.size(); ++k)
      if (basis_.indices[k] == alpha) return coefficients_[static_cast<Eigen::Index>(k)];
    return 0.0;
  }

  double predict_germ(const Vector& z) const { return basis_row(basis_, z).dot(coefficients_); }
  double operator()(const Vector& x) const { return predict_germ(map_.to_germ(x)); }

  Vector predict_batch(const Matrix& xs) const {
    Vector out(xs.rows());
    parallel_for(static_cast<std::size_t>(xs.rows()), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out[r] = (*this)(xs.row(r).transpose());
      }
    });
    return out;
  }

 private:
  PceBasis basis_;
  Vector coefficients_;
  GermMap map_;
  PceDiagnostics diagnostics_;
};

namespace detail {

inline double sample_variance(const Vector& y) {
  if (y.size() < 2) return 0.0;
  const double mean = y.mean();
  return (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
}

struct RegressionSolve {
  Vector coefficients;
  Vector residuals;
  Vector leverage;
};

// Column-equilibrated SVD least squares with a conditioning guard.
inline RegressionSolve regression_solve(const Matrix& psi, const Vector& y) {
  Vector scale = psi.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (!(scale[j] > 0.0)) scale[j] = 1.0;
  const Matrix a = psi * scale.cwiseInverse().asDiagonal();
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  if (!(smin > 0.0) || sv[0] / smin > 1e10)
    throw FitError("PCE regression: design matrix is rank deficient or ill-conditioned "
                   "(condition number above 1e10); use a larger experimental design or "
                   "redraw the Latin hypercube");
  RegressionSolve out;
  out.coefficients = scale.cwiseInverse().cwiseProduct(svd.solve(y));
  out.residuals = y - psi * out.coefficients;
  out.leverage = svd.matrixU().rowwise().squaredNorm();
  return out;
}

inline Matrix design_matrix(const PceBasis& basis, const GermMap& map, const Matrix& xs) {
  Matrix psi(xs.rows(), static_cast<Eigen::Index>(basis.size()));
  for (Eigen::Index i = 0; i < xs.rows(); ++i)
    psi.row(i) = basis_row(basis, map.to_germ(xs.row(i).transpose())).transpose();
  return psi;
}

// Leave-one-out error from the hat-matrix diagonal; throws when a leverage is 1.
inline double loo_from_hat(const Vector& residuals, const Vector& leverage, const Vector& y) {
  KahanSum s;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    const double denom = 1.0 - leverage[i];
    if (denom <= 1e-10)
      throw SingularError("leave-one-out error undefined: leverage 1 at design point " +
                          std::to_string(i));
    const double e = residuals[i] / denom;
    s.add(e * e);
  }
  const double mse = s.value() / static_cast<double>(residuals.size());
  const double var = sample_variance(y);
  return var > 0.0 ? mse / var : mse;
}

}  // namespace detail

/// Least-squares PCE on an evaluated experimental design (physical inputs).
inline PceModel pce_fit_regression(const RandomVector& rv, const PceBasis& basis,
                                   const ExperimentalDesign& design) {
  GermMap map(rv, basis.families);
  const std::size_t n = design.size();
  if (n < basis.size())
    throw ArgumentError("PCE regression needs at least |A| = " + std::to_string(basis.size()) +
                        " points, got " + std::to_string(n));
  const Matrix psi = detail::design_matrix(basis, map, design.points());
  const auto sol = detail::regression_solve(psi, design.responses());

  PceDiagnostics diag;
  diag.n_used = n;
  if (n < 2 * basis.size())
    diag.warnings.push_back("experimental design smaller than 2|A| (" + std::to_string(n) +
                            " < " + std::to_string(2 * basis.size()) + ")");
  const double var = detail::sample_variance(design.responses());
  const double mse = sol.residuals.squaredNorm() / static_cast<double>(n);
  diag.empirical_error = var > 0.0 ? mse / var : mse;
  try {
    diag.loo_error = detail::loo_from_hat(sol.residuals, sol.leverage, design.responses());
  } catch (const SingularError& e) {
    diag.loo_error = std::numeric_limits<double>::quiet_NaN();
    diag.warnings.push_back(e.what());
  }
  return PceModel(basis, sol.coefficients, std::move(map), std::move(diag));
}

/// Evaluates g through the ledger at the design points, then fits.
inline PceModel pce_fit_regression(const LimitState& ls, const RandomVector& rv,
                                   const PceBasis& basis, const Matrix& points, EvalLedger& ledger) {
  const Vector y = evaluate_batch(ls, points, ledger);
  return pce_fit_regression(rv, basis, ExperimentalDesign(points, y));
}

/// Normalized leave-one-out error of a regression PCE on its design.
inline double pce_loo_error(const PceModel& model, const ExperimentalDesign& design) {
  const Matrix psi = detail::design_matrix(model.basis(), model.germ_map(), design.points());
  const auto sol = detail::regression_solve(psi, design.responses());
  return detail::loo_from_hat(sol.residuals, sol.leverage, design.responses());
}

/// Spectral projection a_alpha = E[g Psi_alpha] by tensorized Gauss
/// quadrature with `level` nodes per dimension.
inline PceModel pce_fit_projection(const ScalarFunction& g, const RandomVector& rv,
                                   const PceBasis& basis, int level) {
  if (level < 1) throw ArgumentError("quadrature level must be at least 1");
  const std::size_t m = basis.dimension();
  double grid = 1.0;
  for (std::size_t i = 0; i < m; ++i) grid *= level;
  if (grid > 1e6)
    throw ArgumentError("tensor quadrature grid of " + std::to_string(level) + "^" +
                        std::to_string(m) + " points exceeds the 1e6 budget");
  GermMap map(rv, basis.families);
  std::vector<GaussRule> rules;
  for (const auto& f : basis.families) rules.push_back(gauss_rule(f, level));

  const auto total = static_cast<std::size_t>(grid);
  Vector coef = Vector::Zero(static_cast<Eigen::Index>(basis.size()));
  std::vector<std::size_t> idx(m, 0);
  Vector z(static_cast<Eigen::Index>(m));
  for (std::size_t q = 0; q < total; ++q) {
    double w = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      z[static_cast<Eigen::Index>(i)] = rules[i].nodes[idx[i]];
      w *= rules[i].weights[idx[i]];
    }
    const double y = g(map.from_germ(z));
    coef += (w * y) * basis_row(basis, z);
    for (std::size_t i = 0; i < m; ++i) {
      if (++idx[i] < static_cast<std::size_t>(level)) break;
      idx[i] = 0;
    }
  }
  PceDiagnostics diag;
  diag.n_used = total;
  return PceModel(basis, coef, std::move(map), std::move(diag));
}

inline PceModel pce_fit_projection(const LimitState& ls, const RandomVector& rv,
                                   const PceBasis& basis, int level, EvalLedger& ledger) {
  return pce_fit_projection([&](const Vector& x) { return evaluate(ls, x, ledger); }, rv, basis,
                            level);
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean a_0 and variance sum_{alpha != 0} a_alpha^2.
inline Moments pce_moments(const PceModel& model) {
  Moments mo;
  KahanSum var;
  for (std::size_t k = 0; k < model.basis().size(); ++k) {
    const double a = model.coefficients()[static_cast<Eigen::Index>(k)];
    if (model.basis().indices[k].degree() == 0)
      mo.mean = a;
    else
      var.add(a * a);
  }
  mo.variance = var.value();
  return mo;
}

/// Failure probability of the surrogate by crude Monte Carlo; no true-model
/// calls.
inline ReliabilityResult pce_pf(const PceModel& model, const RandomVector& rv, std::size_t n,
                                std::uint64_t seed) {
  return estimate_mc_surrogate([&](const Matrix& xs) { return model.predict_batch(xs); }, rv, n,
                               seed, "pce");
}

struct PceAdaptiveOptions {
  double target_error = 1e-3;  ///< on the normalized LOO error
  int p_max = 5;
  std::uint64_t seed = 0;
  double oversampling = 2.0;  ///< N = oversampling * |A|
};

struct PceAdaptiveStep {
  int degree;
  std::size_t n_design;
  double loo_error;
};

struct PceAdaptiveResult {
  std::optional<PceModel> model;
  bool converged = false;
  std::size_t n_calls = 0;
  ExperimentalDesign design;
  std::vector<PceAdaptiveStep> trace;
};

/// Raises the total degree p = 1, 2, ... until the LOO error reaches the
/// target, topping the design up to 2|A| Latin-hypercube points at each
/// degree. Returns the lowest-LOO model, flagged non-converged if the target
/// was never met.
inline PceAdaptiveResult pce_adaptive(const LimitState& ls, const RandomVector& rv,
                                      const PceAdaptiveOptions& opt, EvalLedger& ledger) {
  if (!(opt.target_error > 0.0)) throw ArgumentError("target error must be positive");
  if (opt.p_max < 1) throw ArgumentError("p_max must be at least 1");
  PceAdaptiveResult res;
  const std::size_t before = ledger.call_count();
  double best = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= opt.p_max; ++p) {
    const auto basis = basis_for(rv, p);
    const auto need = static_cast<std::size_t>(std::ceil(opt.oversampling * static_cast<double>(basis.size())));
    if (res.design.size() < need) {
      const Matrix fresh =
          sample(rv, need - res.design.size(), SamplingScheme::LatinHypercube,
                 mix_seed(opt.seed, static_cast<std::uint64_t>(p)));
      const Vector y = evaluate_batch(ls, fresh, ledger);
      for (Eigen::Index i = 0; i < fresh.rows(); ++i)
        if (!res.design.contains(fresh.row(i).transpose()))
          res.design.add(fresh.row(i).transpose(), y[i]);
    }
    double loo = std::numeric_limits<double>::infinity();
    try {
      auto model = pce_fit_regression(rv, basis, res.design);
      loo = model.diagnostics().loo_error;
      if (std::isnan(loo)) loo = std::numeric_limits<double>::infinity();
      if (loo < best || !res.model) {
        best = loo;
        res.model = std::move(model);
      }
    } catch (const FitError&) {
    }
    res.trace.push_back({p, res.design.size(), loo});
    if (loo <= opt.target_error) {
      res.converged = true;
      res.model = pce_fit_regression(rv, basis, res.design);
      break;
    }
  }
  res.n_calls = ledger.call_count() - before;
  if (!res.model) throw FitError("PCE adaptive: no degree could be fitted");
  if (!res.converged)
    res.model->diagnostics().warnings.push_back("target LOO error not reached by p_max");
  return res;
}

}  // namespace reliab

#endif  // RELIAB_PCE_HPP
