#ifndef RELIAB_MCMC_HPP
#define RELIAB_MCMC_HPP

// Componentwise slice sampling and k-means clustering with medoid snap-back.

#include "reliab/core.hpp"

#include <functional>
#include <limits>

namespace reliab {

struct SliceOptions {
  double width = 1.0;  ///< initial bracket width per coordinate
  int max_steps_out = 50;
  int max_shrink = 200;
  double burn_in = 0.2;  ///< fraction of the kept draws discarded first
  int thin = 10;
};

struct SliceStats {
  std::size_t target_evaluations = 0;
  std::size_t shrinks = 0;
};

/// One componentwise slice sweep (stepping out, then shrinkage) on an
/// unnormalized log density. `log_fx` is updated in place.
inline void slice_sweep(const std::function<double(const Vector&)>& log_f, Vector& x, double& log_fx,
                        const SliceOptions& opt, Rng& rng, SliceStats& stats) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double level = log_fx + std::log(uniform_open(rng));
    const double x0 = x[i];
    double lo = x0 - opt.width * uniform_open(rng);
    double hi = lo + opt.width;
    auto at = [&](double v) {
      x[i] = v;
      ++stats.target_evaluations;
      return log_f(x);
    };
    for (int s = 0; s < opt.max_steps_out && at(lo) > level; ++s) lo -= opt.width;
    for (int s = 0; s < opt.max_steps_out && at(hi) > level; ++s) hi += opt.width;
    bool accepted = false;
    for (int s = 0; s < opt.max_shrink; ++s) {
      const double cand = lo + (hi - lo) * uniform_open(rng);
      const double lf = at(cand);
      if (lf > level) {
        log_fx = lf;
        accepted = true;
        break;
      }
      ++stats.shrinks;
      (cand < x0 ? lo : hi) = cand;
    }
    if (!accepted) x[i] = x0;
  }
}

/// n thinned draws after burn-in from a chain started at x0 (log_f(x0) finite).
inline Matrix slice_sample(const std::function<double(const Vector&)>& log_f, const Vector& x0, std::size_t n,
                           Rng& rng, const SliceOptions& opt = {}, SliceStats* stats_out = nullptr) {
  Vector x = x0;
  double lf = log_f(x);
  if (!std::isfinite(lf)) throw SamplerError("slice sampler started outside the target support");
  SliceStats stats;
  const auto burn = static_cast<std::size_t>(std::ceil(opt.burn_in * static_cast<double>(n)));
  const std::size_t thin = static_cast<std::size_t>(std::max(1, opt.thin));
  for (std::size_t s = 0; s < burn * thin; ++s) slice_sweep(log_f, x, lf, opt, rng, stats);
  Matrix out(static_cast<Eigen::Index>(n), x.size());
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t s = 0; s < thin; ++s) slice_sweep(log_f, x, lf, opt, rng, stats);
    out.row(static_cast<Eigen::Index>(k)) = x.transpose();
  }
  if (stats_out) *stats_out = stats;
  return out;
}

struct Clustering {
  Matrix centroids;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> medoids;  ///< row of the sample nearest each centroid
};

/// Lloyd's k-means seeded by k-means++, followed by snapping each centroid to
/// its nearest sample. Clusters that would snap onto an already used sample
/// are dropped, so fewer than k medoids may come back for degenerate data.
inline Clustering kmeans_medoids(const Matrix& pts, std::size_t k, std::uint64_t seed, int max_iter = 100) {
  const auto n = static_cast<std::size_t>(pts.rows());
  if (k == 0) throw ArgumentError("cluster count must be at least 1");
  if (n == 0) throw ArgumentError("cannot cluster an empty sample");
  k = std::min(k, n);
  Rng rng(seed);
  Matrix c(static_cast<Eigen::Index>(k), pts.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(uniform_open(rng) * static_cast<double>(n));
  first = std::min(first, n - 1);
  c.row(0) = pts.row(static_cast<Eigen::Index>(first));
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (pts.row(static_cast<Eigen::Index>(i)) - c.row(static_cast<Eigen::Index>(j - 1))).squaredNorm());
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double target = uniform_open(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target <= 0.0) {
          pick = i;
          break;
        }
      }
    }
    c.row(static_cast<Eigen::Index>(j)) = pts.row(static_cast<Eigen::Index>(pick));
  }

  std::vector<std::size_t> labels(n, 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (c.rowwise() - pts.row(static_cast<Eigen::Index>(i))).rowwise().squaredNorm().minCoeff(&best);
      if (labels[i] != static_cast<std::size_t>(best)) changed = true;
      labels[i] = static_cast<std::size_t>(best);
    }
    if (!changed) break;
    Matrix sum = Matrix::Zero(c.rows(), c.cols());
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum.row(static_cast<Eigen::Index>(labels[i])) += pts.row(static_cast<Eigen::Index>(i));
      ++count[labels[i]];
    }
    for (std::size_t j = 0; j < k; ++j)
      if (count[j] > 0) c.row(static_cast<Eigen::Index>(j)) = sum.row(static_cast<Eigen::Index>(j)) / static_cast<double>(count[j]);
  }

  Clustering out{c, labels, {}};
  for (std::size_t j = 0; j < k; ++j) {
    Eigen::Index best = 0;
    (pts.rowwise() - c.row(static_cast<Eigen::Index>(j))).rowwise().squaredNorm().minCoeff(&best);
    const auto b = static_cast<std::size_t>(best);
    if (std::find(out.medoids.begin(), out.medoids.end(), b) == out.medoids.end()) out.medoids.push_back(b);
  }
  return out;
}

}  // namespace reliab

#endif  // RELIAB_MCMC_HPP
