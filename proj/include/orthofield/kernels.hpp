#pragma once

#include <cmath>
#include <stdexcept>

#include "orthofield/quadrature.hpp"

namespace orthofield::kernels {

/// Parameter pair (sigma2, alpha) of the exponential covariance family.
struct Theta {
  double sigma2;
  double alpha;

  Theta(double sigma2_, double alpha_) : sigma2(sigma2_), alpha(alpha_) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      throw std::invalid_argument("Theta: sigma2 must be a positive real");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("Theta: alpha must be a positive real");
  }

  friend bool operator==(const Theta& a, const Theta& b) {
    return a.sigma2 == b.sigma2 && a.alpha == b.alpha;
  }
};

/// Stationary isotropic exponential kernel on R^d.
struct CovarianceModel {
  Theta theta;
  int dim;

  CovarianceModel(Theta t, int d) : theta(t), dim(d) {
    if (d < 1) throw std::invalid_argument("CovarianceModel: dim must be >= 1");
  }
};

/// Surface area of the unit sphere S^{d-1}.
inline double surface_area(int d) {
  return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

/// phi_theta(tau) = sigma2 * exp(-alpha * tau).
inline double kernel_eval(const CovarianceModel& model, double tau) {
  if (tau < 0.0 || !std::isfinite(tau))
    throw std::domain_error("kernel_eval: tau must be a nonnegative real");
  return model.theta.sigma2 * std::exp(-model.theta.alpha * tau);
}

/// Radial spectral density of the exponential kernel. For d = 1 this is
/// sigma2 * alpha / (pi (alpha^2 + kappa^2)); for general d the isotropic
/// Fourier pair sigma2 Gamma((d+1)/2) alpha pi^{-(d+1)/2} (alpha^2+kappa^2)^{-(d+1)/2},
/// normalized so the total spectral mass equals sigma2 in every dimension.
struct RadialSpectralDensity {
  Theta theta;
  int dim;

  RadialSpectralDensity(Theta t, int d) : theta(t), dim(d) {
    if (d < 1) throw std::invalid_argument("RadialSpectralDensity: dim must be >= 1");
  }

  double operator()(double kappa) const {
    const double a = theta.alpha;
    const double c = theta.sigma2 * std::tgamma(0.5 * (dim + 1)) * a *
                     std::pow(M_PI, -0.5 * (dim + 1));
    return c * std::pow(a * a + kappa * kappa, -0.5 * (dim + 1));
  }

  /// sup over kappa >= 0, attained at kappa = 0.
  double max_value() const { return (*this)(0.0); }
};

inline RadialSpectralDensity spectral_density(const CovarianceModel& model) {
  return RadialSpectralDensity(model.theta, model.dim);
}

inline double spectral_eval(const RadialSpectralDensity& density, double kappa) {
  if (kappa < 0.0 || !std::isfinite(kappa))
    throw std::domain_error("spectral_eval: kappa must be a nonnegative real");
  return density(kappa);
}

/// Radial spectral measure Phi([0, b)) = S_{d-1} * int_0^b kappa^{d-1} g(kappa) dkappa.
/// Nondecreasing in b with limit sigma2 as b -> infinity.
inline double radial_measure_cdf(const RadialSpectralDensity& density, double b) {
  if (b < 0.0 || !std::isfinite(b))
    throw std::domain_error("radial_measure_cdf: b must be a nonnegative real");
  if (b == 0.0) return 0.0;
  const double sd = surface_area(density.dim);
  auto integrand = [&](double k) {
    return sd * std::pow(k, density.dim - 1) * density(k);
  };
  const double tol = 1e-11 * std::max(1.0, density.theta.sigma2);
  // split geometrically so the adaptive rule never sees a panel spanning
  // many decades of the decaying tail
  double total = 0.0, lo = 0.0;
  double hi = std::min(b, 10.0 * density.theta.alpha);
  while (true) {
    total += quad::adaptive_gl(integrand, lo, hi, tol);
    if (hi >= b) break;
    lo = hi;
    hi = std::min(b, 2.0 * hi);
  }
  return total;
}

}  // namespace orthofield::kernels
