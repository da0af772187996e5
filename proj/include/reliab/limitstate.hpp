#ifndef RELIAB_LIMITSTATE_HPP
#define RELIAB_LIMITSTATE_HPP

#include "reliab/core.hpp"
#include "reliab/expression.hpp"

#include <functional>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace reliab {

/// Black-box performance function g; failure is {g <= 0}.
///
/// The evaluator must be deterministic and safe to call concurrently.
class LimitState {
 public:
  using Evaluator = std::function<double(const Vector&)>;

  LimitState(std::string name, std::size_t dimension, Evaluator g, Vector fixed_params = {})
      : name_(std::move(name)),
        dimension_(dimension),
        g_(std::move(g)),
        fixed_params_(std::move(fixed_params)) {
    if (dimension_ == 0) throw ArgumentError("limit state dimension must be at least 1");
    if (!g_) throw ArgumentError("limit state needs an evaluator");
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t dimension() const noexcept { return dimension_; }
  const Vector& fixed_params() const noexcept { return fixed_params_; }

  /// Raw evaluation, no bookkeeping. Prefer evaluate() / evaluate_batch().
  double raw(const Vector& x) const { return g_(x); }

 private:
  std::string name_;
  std::size_t dimension_;
  Evaluator g_;
  Vector fixed_params_;
};

/// Counts true-model calls. History recording is off by default.
class EvalLedger {
 public:
  explicit EvalLedger(bool record_history = false) : record_(record_history) {}

  EvalLedger(const EvalLedger&) = delete;
  EvalLedger& operator=(const EvalLedger&) = delete;

  std::size_t call_count() const noexcept { return count_.load(); }
  bool recording() const noexcept { return record_; }

  void reset() {
    std::lock_guard lock(mutex_);
    count_ = 0;
    history_.clear();
  }

  std::vector<std::pair<Vector, double>> history() const {
    std::lock_guard lock(mutex_);
    return history_;
  }

  void record(const Vector& x, double y) {
    count_.fetch_add(1);
    if (record_) {
      std::lock_guard lock(mutex_);
      history_.emplace_back(x, y);
    }
  }

 private:
  bool record_;
  std::atomic<std::size_t> count_{0};
  mutable std::mutex mutex_;
  std::vector<std::pair<Vector, double>> history_;
};

inline double evaluate(const LimitState& ls, const Vector& x, EvalLedger& ledger) {
  if (static_cast<std::size_t>(x.size()) != ls.dimension())
    throw ArgumentError("limit state '" + ls.name() + "' expects dimension " +
                        std::to_string(ls.dimension()) + ", got " + std::to_string(x.size()));
  const double y = ls.raw(x);
  ledger.record(x, y);
  if (!std::isfinite(y)) throw ModelError("limit state '" + ls.name() + "' returned a non-finite value");
  return y;
}

/// g at every row of xs; rows may be evaluated concurrently.
inline Vector evaluate_batch(const LimitState& ls, const Matrix& xs, EvalLedger& ledger) {
  if (static_cast<std::size_t>(xs.cols()) != ls.dimension())
    throw ArgumentError("limit state '" + ls.name() + "' expects " +
                        std::to_string(ls.dimension()) + " columns, got " +
                        std::to_string(xs.cols()));
  Vector out(xs.rows());
  parallel_for(static_cast<std::size_t>(xs.rows()), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const Vector x = xs.row(r).transpose();
      const double y = ls.raw(x);
      ledger.record(x, y);
      out[r] = y;
    }
  });
  for (Eigen::Index r = 0; r < out.size(); ++r)
    if (!std::isfinite(out[r]))
      throw ModelError("limit state '" + ls.name() + "' returned a non-finite value at row " +
                       std::to_string(r));
  return out;
}

/// Observation set {(x_i, y_i)} of a surrogate.
class ExperimentalDesign {
 public:
  ExperimentalDesign() = default;
  ExperimentalDesign(Matrix points, Vector responses) {
    if (points.rows() != responses.size())
      throw ArgumentError("design has " + std::to_string(points.rows()) + " points but " +
                          std::to_string(responses.size()) + " responses");
    for (Eigen::Index i = 0; i < points.rows(); ++i)
      add(points.row(i).transpose(), responses[i]);
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  const Matrix& points() const noexcept { return points_; }
  const Vector& responses() const noexcept { return responses_; }

  bool contains(const Vector& x, double tol = 1e-12) const {
    for (Eigen::Index i = 0; i < points_.rows(); ++i)
      if ((points_.row(i).transpose() - x).cwiseAbs().maxCoeff() <= tol) return true;
    return false;
  }

  /// Appends (x, y). Duplicate rows (within 1e-12) are rejected.
  void add(const Vector& x, double y) {
    if (points_.rows() > 0 && x.size() != points_.cols())
      throw ArgumentError("design point dimension mismatch");
    if (contains(x)) throw ArgumentError("duplicate design point");
    const Eigen::Index n = points_.rows();
    points_.conservativeResize(n + 1, x.size());
    points_.row(n) = x.transpose();
    responses_.conservativeResize(n + 1);
    responses_[n] = y;
  }

 private:
  Matrix points_;
  Vector responses_;
};

// ---------------------------------------------------------------------------
// Benchmarks. Both are stated directly in the standard normal space.

/// Four-branch series system of Waarts (2000):
///   g(x) = min( 3 + (x1-x2)^2/10 - (x1+x2)/sqrt2,
///               3 + (x1-x2)^2/10 + (x1+x2)/sqrt2,
///               x1 - x2 + 7/sqrt2,
///               x2 - x1 + 7/sqrt2 )
inline LimitState benchmark_waarts() {
  return LimitState("waarts", 2, [](const Vector& x) {
    const double x1 = x[0], x2 = x[1];
    const double d = x1 - x2;
    const double s = (x1 + x2) / std::numbers::sqrt2;
    const double c = 7.0 / std::numbers::sqrt2;
    const double b1 = 3.0 + d * d / 10.0 - s;
    const double b2 = 3.0 + d * d / 10.0 + s;
    const double b3 = d + c;
    const double b4 = -d + c;
    return std::min(std::min(b1, b2), std::min(b3, b4));
  });
}

/// g(u) = beta0 - direction . u; exact Pf = Phi(-beta0).
inline LimitState benchmark_linear(double beta0, const Vector& direction) {
  if (direction.size() == 0) throw ArgumentError("linear benchmark needs a direction");
  const double norm = direction.norm();
  if (!(norm > 0.0)) throw ArgumentError("linear benchmark direction must be nonzero");
  if (std::abs(norm - 1.0) > 1e-10)
    throw ArgumentError("linear benchmark direction must have unit norm");
  Vector params(1 + direction.size());
  params << beta0, direction;
  return LimitState(
      "linear", static_cast<std::size_t>(direction.size()),
      [beta0, direction](const Vector& u) { return beta0 - direction.dot(u); }, params);
}

/// Linear benchmark along the first axis of an m-dimensional space.
inline LimitState benchmark_linear(double beta0, std::size_t m = 1) {
  return benchmark_linear(beta0, Vector(Vector::Unit(static_cast<Eigen::Index>(m), 0)));
}

/// Limit state from the expression language; dimension defaults to the
/// largest variable referenced.
inline LimitState expression_limit_state(const std::string& text, std::size_t dimension = 0) {
  auto expr = std::make_shared<const Expression>(Expression::parse(text));
  const std::size_t m = dimension == 0 ? expr->max_variable() : dimension;
  if (m == 0) throw ArgumentError("expression references no variables; give a dimension");
  if (expr->max_variable() > m)
    throw ArgumentError("expression references x" + std::to_string(expr->max_variable()) +
                        " but the dimension is " + std::to_string(m));
  return LimitState("expr", m, [expr](const Vector& x) { return (*expr)(x); });
}

}  // namespace reliab

#endif  // RELIAB_LIMITSTATE_HPP
