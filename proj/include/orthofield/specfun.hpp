#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "orthofield/quadrature.hpp"

namespace orthofield::specfun {

/// Thrown for spherical-harmonic requests outside d in {2, 3}.
struct UnsupportedDimension : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline unsigned long long binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned long long r = 1;
  for (unsigned i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
  }
  return r;
}

/// h(m, d): dimension of the space of degree-m spherical harmonics on S^{d-1}.
inline unsigned long long harmonic_count(unsigned m, unsigned d) {
  if (d < 1) throw std::invalid_argument("harmonic_count: d must be >= 1");
  if (m == 0) return 1;
  if (m == 1) return d;
  return binomial(d + m - 1, m) - binomial(d + m - 3, m - 2);
}

/// Bessel function of the first kind, real order nu >= -1/2, z >= 0.
/// Orders >= 0 are delegated to the C++17 special function; nu = -1/2 uses
/// the closed form sqrt(2/(pi z)) cos z.
inline double bessel_j(double nu, double z) {
  if (z < 0.0 || !std::isfinite(z))
    throw std::domain_error("bessel_j: z must be a nonnegative real");
  if (nu < -0.5 - 1e-12)
    throw std::domain_error("bessel_j: order must be >= -1/2");
  if (nu < 0.0) {
    if (z == 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(2.0 / (M_PI * z)) * std::cos(z);
  }
  if (z == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (nu == 0.5) return std::sqrt(2.0 / (M_PI * z)) * std::sin(z);
  if (nu == 1.5) {
    // small z: sin(z)/z - cos(z) cancels; fall back to the library there
    if (z > 0.1)
      return std::sqrt(2.0 / (M_PI * z)) * (std::sin(z) / z - std::cos(z));
  }
  return std::cyl_bessel_j(nu, z);
}

/// Numerical supremum of z -> sqrt(z) |J_nu(z)| over a log-spaced grid on
/// (0, 1e4]. Finite for every nu >= -1/2.
inline double sqrtz_bessel_sup(double nu, int grid_points = 20000) {
  const double lo = 1e-3, hi = 1e4;
  const double ratio = std::log(hi / lo) / (grid_points - 1);
  double sup = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double z = lo * std::exp(ratio * i);
    sup = std::max(sup, std::sqrt(z) * std::abs(bessel_j(nu, z)));
  }
  return sup;
}

/// Index (m, l, d) into the real spherical-harmonic basis, 1 <= l <= h(m, d).
struct HarmonicIndex {
  unsigned degree;
  unsigned index;
  unsigned dim;

  HarmonicIndex(unsigned m, unsigned l, unsigned d) : degree(m), index(l), dim(d) {
    if (d != 2 && d != 3)
      throw UnsupportedDimension("HarmonicIndex: only d in {2, 3} is supported");
    if (l < 1 || l > harmonic_count(m, d))
      throw std::invalid_argument("HarmonicIndex: index out of range [1, h(m, d)]");
  }
};

namespace detail {

/// Associated Legendre P_l^m(x), m >= 0, without Condon-Shortley phase.
inline double assoc_legendre(int l, int m, double x) {
  double pmm = 1.0;
  if (m > 0) {
    const double somx2 = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
    double fact = 1.0;
    for (int i = 1; i <= m; ++i) {
      pmm *= fact * somx2;
      fact += 2.0;
    }
  }
  if (l == m) return pmm;
  double pmmp1 = x * (2.0 * m + 1.0) * pmm;
  if (l == m + 1) return pmmp1;
  double pll = 0.0;
  for (int ll = m + 2; ll <= l; ++ll) {
    pll = ((2.0 * ll - 1.0) * x * pmmp1 - (ll + m - 1.0) * pmm) / (ll - m);
    pmm = pmmp1;
    pmmp1 = pll;
  }
  return pll;
}

inline double sh_norm_3d(int l, int m) {
  double f = 1.0;
  for (int k = l - m + 1; k <= l + m; ++k) f *= k;
  return std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI) / f);
}

}  // namespace detail

/// Real orthonormal spherical harmonic S_m^l evaluated at a unit vector.
/// d = 2: Fourier basis {1/sqrt(2 pi), cos(m phi)/sqrt(pi), sin(m phi)/sqrt(pi)};
/// d = 3: fully normalized real harmonics.
inline double spherical_harmonic(const HarmonicIndex& idx, const Eigen::VectorXd& u) {
  if (static_cast<unsigned>(u.size()) != idx.dim)
    throw std::invalid_argument("spherical_harmonic: point dimension mismatch");
  if (std::abs(u.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("spherical_harmonic: point must lie on the unit sphere");
  const int m = static_cast<int>(idx.degree);
  if (idx.dim == 2) {
    if (m == 0) return 1.0 / std::sqrt(2.0 * M_PI);
    const double phi = std::atan2(u[1], u[0]);
    return idx.index == 1 ? std::cos(m * phi) / std::sqrt(M_PI)
                          : std::sin(m * phi) / std::sqrt(M_PI);
  }
  // d == 3: map l in [1, 2m+1] to azimuthal order q in [-m, m]
  const int q = static_cast<int>(idx.index) - 1 - m;
  const double ct = u[2];
  const double phi = std::atan2(u[1], u[0]);
  const int aq = std::abs(q);
  const double p = detail::assoc_legendre(m, aq, ct);
  const double norm = detail::sh_norm_3d(m, aq);
  if (q == 0) return norm * p;
  if (q > 0) return std::sqrt(2.0) * norm * p * std::cos(q * phi);
  return std::sqrt(2.0) * norm * p * std::sin(aq * phi);
}

/// Quadrature design on S^{d-1}: rows of `points` are unit vectors, weights
/// sum to the surface area.
struct SphereGrid {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  Eigen::Index size() const { return points.rows(); }
};

/// Trapezoid rule on the circle; exact for trigonometric polynomials of
/// degree < n.
inline SphereGrid circle_grid(int n) {
  if (n < 4) throw std::invalid_argument("circle_grid: need at least 4 nodes");
  SphereGrid g;
  g.points.resize(n, 2);
  g.weights.setConstant(n, 2.0 * M_PI / n);
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * M_PI * i / n;
    g.points(i, 0) = std::cos(phi);
    g.points(i, 1) = std::sin(phi);
  }
  return g;
}

/// Product Gauss-Legendre (polar, in cos theta) x trapezoid (azimuth) on S^2.
inline SphereGrid sphere_grid(int n_polar, int n_azimuth) {
  if (n_polar < 2 || n_azimuth < 4)
    throw std::invalid_argument("sphere_grid: grid too small");
  std::vector<double> x, w;
  quad::gauss_legendre(n_polar, x, w);
  SphereGrid g;
  g.points.resize(n_polar * n_azimuth, 3);
  g.weights.resize(n_polar * n_azimuth);
  const double wphi = 2.0 * M_PI / n_azimuth;
  int r = 0;
  for (int i = 0; i < n_polar; ++i) {
    const double ct = x[i];
    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_azimuth; ++j, ++r) {
      const double phi = 2.0 * M_PI * j / n_azimuth;
      g.points(r, 0) = st * std::cos(phi);
      g.points(r, 1) = st * std::sin(phi);
      g.points(r, 2) = ct;
      g.weights[r] = w[i] * wphi;
    }
  }
  return g;
}

/// Dispatch by dimension; `resolution` controls the azimuthal node count.
inline SphereGrid sphere_quadrature(int dim, int resolution) {
  if (dim == 2) return circle_grid(resolution);
  if (dim == 3) return sphere_grid(std::max(2, resolution / 2), resolution);
  throw UnsupportedDimension("sphere_quadrature: only d in {2, 3} is supported");
}

}  // namespace orthofield::specfun
