#ifndef RELIAB_QUADRATIC_RS_HPP
#define RELIAB_QUADRATIC_RS_HPP

#include "reliab/core.hpp"
#include "reliab/limitstate.hpp"

#include <sstream>

namespace reliab {

/// Number of quadratic basis terms: 1 + 2M (+ M(M-1)/2 cross terms).
inline std::size_t qrs_size(std::size_t m, bool cross_terms = true) {
  return 1 + 2 * m + (cross_terms ? m * (m - 1) / 2 : 0);
}

/// Basis (1, x1..xM, x1^2..xM^2, x1x2, x1x3, ..., x_{M-1}x_M).
inline Vector qrs_basis(const Vector& x, bool cross_terms = true) {
  const auto m = static_cast<std::size_t>(x.size());
  Vector f(static_cast<Eigen::Index>(qrs_size(m, cross_terms)));
  Eigen::Index k = 0;
  f[k++] = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) f[k++] = x[i];
  for (Eigen::Index i = 0; i < x.size(); ++i) f[k++] = x[i] * x[i];
  if (cross_terms)
    for (Eigen::Index i = 0; i < x.size(); ++i)
      for (Eigen::Index j = i + 1; j < x.size(); ++j) f[k++] = x[i] * x[j];
  return f;
}

struct QuadraticSurface {
  std::size_t dimension = 0;
  bool cross_terms = true;
  Vector coefficients;  ///< ordered as qrs_basis

  double operator()(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != dimension)
      throw ArgumentError("quadratic surface expects dimension " + std::to_string(dimension));
    return qrs_basis(x, cross_terms).dot(coefficients);
  }
};

inline double qrs_predict(const QuadraticSurface& s, const Vector& x) { return s(x); }

/// Least-squares fit of a quadratic surface.
///
/// Columns are centred and scaled before an SVD solve; the coefficients are
/// then mapped back to the raw coordinates.
inline QuadraticSurface qrs_fit(const ExperimentalDesign& design, bool cross_terms = true) {
  const std::size_t m = design.dimension();
  const std::size_t p = qrs_size(m, cross_terms);
  const std::size_t n = design.size();
  if (n < p)
    throw ArgumentError("quadratic fit needs at least " + std::to_string(p) + " points, got " +
                        std::to_string(n));
  const Matrix& x = design.points();
  const Vector centre = x.colwise().mean().transpose();
  Vector scale = ((x.rowwise() - centre.transpose()).cwiseAbs().colwise().maxCoeff()).transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    if (!(scale[j] > 0.0)) scale[j] = 1.0;

  Matrix f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector z = (x.row(i).transpose() - centre).cwiseQuotient(scale);
    f.row(i) = qrs_basis(z, cross_terms).transpose();
  }
  Eigen::BDCSVD<Matrix> svd(f, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector sv = svd.singularValues();
  if (sv[sv.size() - 1] <= 1e-10 * sv[0]) {
    const Vector null = svd.matrixV().col(sv.size() - 1);
    std::ostringstream msg;
    msg << "quadratic fit: information matrix is rank deficient; null direction (basis order) ["
        << null.transpose() << "]";
    throw FitError(msg.str());
  }
  const Vector b = svd.solve(design.responses());

  // Map the polynomial in z = (x - c)/s back to x.
  const auto mm = static_cast<Eigen::Index>(m);
  Vector a = Vector::Zero(static_cast<Eigen::Index>(p));
  Matrix quad = Matrix::Zero(mm, mm);  // symmetric: g = b0 + bl.z + z^T Q z
  Vector lin(mm);
  for (Eigen::Index i = 0; i < mm; ++i) {
    lin[i] = b[1 + i];
    quad(i, i) = b[1 + mm + i];
  }
  Eigen::Index k = 1 + 2 * mm;
  if (cross_terms)
    for (Eigen::Index i = 0; i < mm; ++i)
      for (Eigen::Index j = i + 1; j < mm; ++j) {
        quad(i, j) = 0.5 * b[k];
        quad(j, i) = 0.5 * b[k];
        ++k;
      }
  // z = D (x - c) with D = diag(1/s): g = b0 + bl^T D(x-c) + (x-c)^T D Q D (x-c)
  const Vector dinv = scale.cwiseInverse();
  const Matrix qx = dinv.asDiagonal() * quad * dinv.asDiagonal();
  const Vector lx = dinv.cwiseProduct(lin);
  a[0] = b[0] - lx.dot(centre) + centre.dot(qx * centre);
  const Vector lin_x = lx - 2.0 * qx * centre;
  for (Eigen::Index i = 0; i < mm; ++i) {
    a[1 + i] = lin_x[i];
    a[1 + mm + i] = qx(i, i);
  }
  k = 1 + 2 * mm;
  if (cross_terms)
    for (Eigen::Index i = 0; i < mm; ++i)
      for (Eigen::Index j = i + 1; j < mm; ++j) a[k++] = 2.0 * qx(i, j);
  return {m, cross_terms, a};
}

}  // namespace reliab

#endif  // RELIAB_QUADRATIC_RS_HPP
