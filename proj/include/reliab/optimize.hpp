#ifndef RELIAB_OPTIMIZE_HPP
#define RELIAB_OPTIMIZE_HPP

// Box-constrained quasi-Newton minimization with finite-difference gradients.

#include "reliab/core.hpp"

#include <functional>

namespace reliab {

struct BoxMinimizeOptions {
  int max_iter = 100;
  double gtol = 1e-6;   ///< on the projected gradient (inf-norm)
  double ftol = 1e-10;  ///< relative decrease between iterations
  double fd_step = 1e-5;
};

struct BoxMinimum {
  Vector x;
  double f = 0.0;
  int iterations = 0;
  bool at_bound = false;  ///< some coordinate finished on its bound
};

namespace detail {

inline Vector project(const Vector& x, const Vector& lo, const Vector& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double fx,
                          const Vector& lo, const Vector& hi, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    Vector xp = x, xm = x;
    const bool up = x[i] + step <= hi[i];
    const bool down = x[i] - step >= lo[i];
    if (up && down) {
      xp[i] += step;
      xm[i] -= step;
      g[i] = (f(xp) - f(xm)) / (2.0 * step);
    } else if (up) {
      xp[i] += step;
      g[i] = (f(xp) - fx) / step;
    } else {
      xm[i] -= step;
      g[i] = (fx - f(xm)) / step;
    }
  }
  return g;
}

}  // namespace detail

/// Projected BFGS: variables sitting on a bound with the gradient pushing
/// outward are frozen for the step; the rest follow the quasi-Newton
/// direction along a projected Armijo backtracking path.
inline BoxMinimum minimize_box(const std::function<double(const Vector&)>& f, const Vector& x0, const Vector& lo,
                               const Vector& hi, const BoxMinimizeOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  Vector x = detail::project(x0, lo, hi);
  double fx = f(x);
  Vector g = detail::fd_gradient(f, x, fx, lo, hi, opt.fd_step);
  Matrix h = Matrix::Identity(n, n);
  BoxMinimum out;
  for (int it = 0; it < opt.max_iter; ++it) {
    out.iterations = it + 1;
    std::vector<bool> frozen(static_cast<std::size_t>(n), false);
    double pg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool pinned = (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0);
      frozen[static_cast<std::size_t>(i)] = pinned;
      if (!pinned) pg = std::max(pg, std::abs(g[i]));
    }
    if (pg <= opt.gtol) break;

    Vector d = -(h * g);
    for (Eigen::Index i = 0; i < n; ++i)
      if (frozen[static_cast<std::size_t>(i)]) d[i] = 0.0;
    if (d.dot(g) >= 0.0) {
      h.setIdentity();
      d = -g;
      for (Eigen::Index i = 0; i < n; ++i)
        if (frozen[static_cast<std::size_t>(i)]) d[i] = 0.0;
    }
    double t = 1.0;
    Vector xn;
    double fn = fx;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      xn = detail::project(x + t * d, lo, hi);
      fn = f(xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * g.dot(xn - x)) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    const Vector gn = detail::fd_gradient(f, xn, fn, lo, hi, opt.fd_step);
    const Vector s = xn - x;
    const Vector y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Matrix i_n = Matrix::Identity(n, n);
      h = (i_n - rho * s * y.transpose()) * h * (i_n - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    const double df = fx - fn;
    x = xn;
    g = gn;
    fx = fn;
    if (df <= opt.ftol * std::max(1.0, std::abs(fx))) break;
  }
  out.x = x;
  out.f = fx;
  for (Eigen::Index i = 0; i < n; ++i)
    if (x[i] <= lo[i] || x[i] >= hi[i]) out.at_bound = true;
  return out;
}

}  // namespace reliab

#endif  // RELIAB_OPTIMIZE_HPP
