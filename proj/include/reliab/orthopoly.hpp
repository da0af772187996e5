#ifndef RELIAB_ORTHOPOLY_HPP
#define RELIAB_ORTHOPOLY_HPP

// Univariate orthonormal polynomial families and their Gauss rules.
//
// Each family is orthonormal with respect to a probability density:
//   Hermite          standard normal
//   Legendre         uniform on (-1, 1), density 1/2
//   Laguerre(a)      x^a e^{-x} / Gamma(a+1) on (0, inf)
//   Jacobi(a, b)     (1-x)^a (1+x)^b / (2^{a+b+1} B(a+1, b+1)) on (-1, 1)
//
// All evaluation goes through the three-term recurrence of the orthonormal
// polynomials, x psi_k = sqrt(b_{k+1}) psi_{k+1} + a_k psi_k + sqrt(b_k) psi_{k-1},
// whose coefficients also define the Jacobi matrix of the Golub-Welsch rule.
// Signs follow the classical polynomials (Laguerre L_k^a(0) > 0).

#include "reliab/core.hpp"
#include "reliab/probmodel.hpp"

#include <string>
#include <utility>
#include <vector>

namespace reliab {

enum class PolyFamily { Hermite, Legendre, Laguerre, Jacobi };

struct PolySpec {
  PolyFamily family = PolyFamily::Hermite;
  double a = 0.0;  ///< Laguerre a, Jacobi a (exponent of 1-x)
  double b = 0.0;  ///< Jacobi b (exponent of 1+x)

  static PolySpec hermite() { return {PolyFamily::Hermite, 0.0, 0.0}; }
  static PolySpec legendre() { return {PolyFamily::Legendre, 0.0, 0.0}; }
  static PolySpec laguerre(double a) {
    if (!(a > -1.0)) throw ArgumentError("Laguerre parameter must exceed -1");
    return {PolyFamily::Laguerre, a, 0.0};
  }
  static PolySpec jacobi(double a, double b) {
    if (!(a > -1.0) || !(b > -1.0)) throw ArgumentError("Jacobi parameters must exceed -1");
    return {PolyFamily::Jacobi, a, b};
  }

  bool operator==(const PolySpec&) const = default;
};

inline const char* to_string(PolyFamily f) {
  switch (f) {
    case PolyFamily::Hermite: return "hermite";
    case PolyFamily::Legendre: return "legendre";
    case PolyFamily::Laguerre: return "laguerre";
    case PolyFamily::Jacobi: return "jacobi";
  }
  return "?";
}

inline PolyFamily poly_family_from_string(const std::string& s) {
  if (s == "hermite") return PolyFamily::Hermite;
  if (s == "legendre") return PolyFamily::Legendre;
  if (s == "laguerre") return PolyFamily::Laguerre;
  if (s == "jacobi") return PolyFamily::Jacobi;
  throw ArgumentError("unknown polynomial family '" + s + "'");
}

inline constexpr int kMaxPolyDegree = 1000;

/// Recurrence coefficients of the monic orthogonal polynomials:
/// p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1}, k = 0..n-1 (beta_0 = 1).
struct Recurrence {
  std::vector<double> alpha;
  std::vector<double> beta;
};

inline Recurrence recurrence(const PolySpec& s, int n) {
  Recurrence r;
  r.alpha.resize(static_cast<std::size_t>(n));
  r.beta.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double kk = k;
    auto& al = r.alpha[static_cast<std::size_t>(k)];
    auto& be = r.beta[static_cast<std::size_t>(k)];
    switch (s.family) {
      case PolyFamily::Hermite:
        al = 0.0;
        be = k == 0 ? 1.0 : kk;
        break;
      case PolyFamily::Legendre:
        al = 0.0;
        be = k == 0 ? 1.0 : kk * kk / (4.0 * kk * kk - 1.0);
        break;
      case PolyFamily::Laguerre:
        al = 2.0 * kk + s.a + 1.0;
        be = k == 0 ? 1.0 : kk * (kk + s.a);
        break;
      case PolyFamily::Jacobi: {
        const double a = s.a, b = s.b;
        const double ab = a + b;
        const double t = 2.0 * kk + ab;
        if (k == 0)
          al = (b - a) / (ab + 2.0);
        else
          al = (b * b - a * a) / (t * (t + 2.0));
        if (k == 0)
          be = 1.0;
        else if (k == 1)
          be = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
        else
          be = 4.0 * kk * (kk + a) * (kk + b) * (kk + ab) / (t * t * (t + 1.0) * (t - 1.0));
        break;
      }
    }
  }
  return r;
}

inline void check_poly_support(const PolySpec& s, double x) {
  if (std::isnan(x)) throw DomainError("polynomial argument is NaN");
  switch (s.family) {
    case PolyFamily::Hermite: return;
    case PolyFamily::Legendre:
    case PolyFamily::Jacobi:
      if (x < -1.0 || x > 1.0)
        throw DomainError(std::string(to_string(s.family)) + " polynomial argument outside [-1,1]");
      return;
    case PolyFamily::Laguerre:
      if (x < 0.0) throw DomainError("laguerre polynomial argument is negative");
      return;
  }
}

/// psi_0(x) .. psi_p(x), orthonormal under the family's probability weight.
inline std::vector<double> orthonormal_values(const PolySpec& s, int p, double x) {
  if (p < 0) throw ArgumentError("polynomial degree must be nonnegative");
  if (p > kMaxPolyDegree) throw ArgumentError("polynomial degree too large");
  check_poly_support(s, x);
  const auto rec = recurrence(s, p + 1);
  std::vector<double> v(static_cast<std::size_t>(p) + 1);
  v[0] = 1.0;
  for (int k = 0; k < p; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const double back = k == 0 ? 0.0 : std::sqrt(rec.beta[uk]) * v[uk - 1];
    v[uk + 1] = ((x - rec.alpha[uk]) * v[uk] - back) / std::sqrt(rec.beta[uk + 1]);
  }
  // Laguerre polynomials carry a leading coefficient of sign (-1)^k.
  if (s.family == PolyFamily::Laguerre)
    for (std::size_t k = 1; k < v.size(); k += 2) v[k] = -v[k];
  for (double val : v)
    if (!std::isfinite(val)) throw RangeError("polynomial evaluation overflowed");
  return v;
}

/// psi_k(x).
inline double univariate_orthonormal(const PolySpec& s, int k, double x) {
  return orthonormal_values(s, k, x)[static_cast<std::size_t>(k)];
}

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;  ///< sum to 1 (probability weight)
};

/// n-point Gauss rule by the Golub-Welsch eigenvalue method; exact for
/// polynomials of degree <= 2n-1 against the family's probability weight.
inline GaussRule gauss_rule(const PolySpec& s, int n) {
  if (n < 1) throw ArgumentError("quadrature level must be at least 1");
  const auto rec = recurrence(s, n);
  Matrix j = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    j(k, k) = rec.alpha[static_cast<std::size_t>(k)];
    if (k + 1 < n) {
      const double off = std::sqrt(rec.beta[static_cast<std::size_t>(k) + 1]);
      j(k, k + 1) = off;
      j(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(j);
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    rule.nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()[k];
    const double v0 = eig.eigenvectors()(0, k);
    rule.weights[static_cast<std::size_t>(k)] = v0 * v0;
    total += v0 * v0;
  }
  for (auto& w : rule.weights) w /= total;
  // Clamp nodes that roundoff pushed past a finite support edge.
  for (auto& x : rule.nodes) {
    if (s.family == PolyFamily::Legendre || s.family == PolyFamily::Jacobi)
      x = std::clamp(x, -1.0, 1.0);
    if (s.family == PolyFamily::Laguerre) x = std::max(x, 0.0);
  }
  return rule;
}

/// The distribution whose density is the family's weight ("germ").
inline Marginal germ_marginal(const PolySpec& s) {
  switch (s.family) {
    case PolyFamily::Hermite: return Marginal::standard_normal();
    case PolyFamily::Legendre: return Marginal::uniform(-1.0, 1.0);
    case PolyFamily::Laguerre: return Marginal::gamma(s.a + 1.0, 1.0);
    case PolyFamily::Jacobi: return Marginal::beta(s.b + 1.0, s.a + 1.0, -1.0, 1.0);
  }
  return Marginal::standard_normal();
}

/// The family whose weight matches a marginal after an affine map
/// (lognormal pairs with Hermite through its logarithm).
inline PolySpec natural_family(const Marginal& m) {
  switch (m.family()) {
    case Family::Gaussian:
    case Family::Lognormal: return PolySpec::hermite();
    case Family::Uniform: return PolySpec::legendre();
    case Family::Gamma: return PolySpec::laguerre(m.params()[0] - 1.0);
    case Family::Beta: return PolySpec::jacobi(m.params()[1] - 1.0, m.params()[0] - 1.0);
  }
  return PolySpec::hermite();
}

}  // namespace reliab

#endif  // RELIAB_ORTHOPOLY_HPP
