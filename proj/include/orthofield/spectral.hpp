#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "orthofield/kernels.hpp"
#include "orthofield/quadrature.hpp"
#include "orthofield/specfun.hpp"

namespace orthofield::spectral {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// K_d^2 = 2^{d-1} Gamma(d/2) pi^{d/2}.
inline double expansion_constant_sq(int d) {
  return std::pow(2.0, d - 1) * std::tgamma(0.5 * d) * std::pow(M_PI, 0.5 * d);
}

/// Truncation and quadrature parameters of the isotropic expansion.
struct ExpansionConfig {
  int max_degree;
  double kappa_max;
  int kappa_panels;
  int dim;
  int sphere_resolution;

  ExpansionConfig(int max_degree_, double kappa_max_, int kappa_panels_, int dim_,
                  int sphere_resolution_ = 64)
      : max_degree(max_degree_),
        kappa_max(kappa_max_),
        kappa_panels(kappa_panels_),
        dim(dim_),
        sphere_resolution(sphere_resolution_) {
    if (max_degree < 0) throw std::invalid_argument("ExpansionConfig: max_degree >= 0");
    if (!(kappa_max > 0.0)) throw std::invalid_argument("ExpansionConfig: kappa_max > 0");
    if (kappa_panels < 8) throw std::invalid_argument("ExpansionConfig: panels >= 8");
    if (dim != 2 && dim != 3)
      throw specfun::UnsupportedDimension("ExpansionConfig: only d in {2, 3}");
  }
};

namespace detail {

struct Polar {
  double radius;
  Eigen::VectorXd direction;
};

inline Polar polar_decompose(const Eigen::VectorXd& x) {
  const double r = x.norm();
  if (r < 1e-12)
    throw std::domain_error("polar decomposition degenerate at the origin");
  return {r, x / r};
}

/// Radial kernel of the expansion: J_{m+(d-2)/2}(z) / z^{(d-2)/2}.
inline double radial_profile(int m, int d, double z) {
  const double nu = m + 0.5 * (d - 2);
  if (z < 1e-300) {
    // limit z -> 0 of J_nu(z)/z^{(d-2)/2}
    if (m == 0) return d == 2 ? 1.0 : std::sqrt(2.0 / M_PI) / 1.0;
    return 0.0;
  }
  return specfun::bessel_j(nu, z) / std::pow(z, 0.5 * (d - 2));
}

/// sum_l S_m^l(u) S_m^l(v) over the full degree-m basis.
inline double angular_product_sum(int m, int d, const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& v) {
  const auto h = specfun::harmonic_count(m, d);
  double s = 0.0;
  for (unsigned l = 1; l <= h; ++l) {
    specfun::HarmonicIndex idx(m, l, d);
    s += specfun::spherical_harmonic(idx, u) * specfun::spherical_harmonic(idx, v);
  }
  return s;
}

}  // namespace detail

/// Partial sum up to degree M of the isotropic covariance expansion, with the
/// radial spectral measure realized through its density. Converges to
/// kernel_eval(||x - y||) as M and kappa_max grow.
inline double isotropic_expansion(const kernels::CovarianceModel& model,
                                  const ExpansionConfig& cfg, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y) {
  if (model.dim != cfg.dim || x.size() != cfg.dim || y.size() != cfg.dim)
    throw std::invalid_argument("isotropic_expansion: dimension mismatch");
  const auto px = detail::polar_decompose(x);
  const auto py = detail::polar_decompose(y);
  const auto density = kernels::spectral_density(model);
  const auto grid = quad::composite_gl(0.0, cfg.kappa_max, cfg.kappa_panels);
  const double sd = kernels::surface_area(cfg.dim);

  std::vector<double> measure(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    measure[i] = grid.weights[i] * sd * std::pow(grid.nodes[i], cfg.dim - 1) *
                 density(grid.nodes[i]);

  const double kd2 = expansion_constant_sq(cfg.dim);
  double total = 0.0;
  for (int m = 0; m <= cfg.max_degree; ++m) {
    double radial = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double k = grid.nodes[i];
      radial += measure[i] * detail::radial_profile(m, cfg.dim, k * px.radius) *
                detail::radial_profile(m, cfg.dim, k * py.radius);
    }
    total += kd2 * detail::angular_product_sum(m, cfg.dim, px.direction, py.direction) *
             radial;
  }
  if (!std::isfinite(total))
    throw NumericalError("isotropic_expansion: quadrature produced a non-finite value");
  return total;
}

/// Projection of the covariance difference onto a pair of harmonics at fixed
/// radii: quadrature of (c1 - c2)(x, y) S_m^l(theta_x) S_i^j(theta_y) over
/// S^{d-1} x S^{d-1}.
inline double sphere_project_delta(const kernels::CovarianceModel& model1,
                                   const kernels::CovarianceModel& model2, unsigned m,
                                   unsigned l, unsigned i, unsigned j, double r1,
                                   double r2, const ExpansionConfig& cfg) {
  if (model1.dim != cfg.dim || model2.dim != cfg.dim)
    throw std::invalid_argument("sphere_project_delta: dimension mismatch");
  if (r1 < 0.0 || r2 < 0.0)
    throw std::domain_error("sphere_project_delta: radii must be nonnegative");
  const specfun::HarmonicIndex idx1(m, l, cfg.dim);
  const specfun::HarmonicIndex idx2(i, j, cfg.dim);
  const auto grid = specfun::sphere_quadrature(cfg.dim, cfg.sphere_resolution);
  const Eigen::Index n = grid.size();

  Eigen::VectorXd s1(n), s2(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::VectorXd u = grid.points.row(a).transpose();
    s1[a] = specfun::spherical_harmonic(idx1, u);
    s2[a] = specfun::spherical_harmonic(idx2, u);
  }
  double total = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::VectorXd xa = r1 * grid.points.row(a).transpose();
    double inner = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) {
      const double tau = (xa - r2 * grid.points.row(b).transpose()).norm();
      const double diff = kernels::kernel_eval(model1, tau) - kernels::kernel_eval(model2, tau);
      inner += grid.weights[b] * diff * s2[b];
    }
    total += grid.weights[a] * s1[a] * inner;
  }
  if (!std::isfinite(total))
    throw NumericalError("sphere_project_delta: quadrature produced a non-finite value");
  return total;
}

/// Grids and order of a one-dimensional Hankel transform.
struct HankelPlan {
  double order;
  quad::QuadGrid radial;
  quad::QuadGrid freq;

  HankelPlan(double order_, quad::QuadGrid radial_, quad::QuadGrid freq_)
      : order(order_), radial(std::move(radial_)), freq(std::move(freq_)) {
    if (order < -0.5) throw std::domain_error("HankelPlan: order must be >= -1/2");
    if (radial.size() == 0 || freq.size() == 0)
      throw std::invalid_argument("HankelPlan: empty grid");
  }

  HankelPlan swapped() const { return HankelPlan(order, freq, radial); }
};

inline HankelPlan make_plan(double order, double r_max, int r_nodes, double kappa_max,
                            int kappa_nodes) {
  return HankelPlan(order, quad::radial_grid(r_max, r_nodes),
                    quad::radial_grid(kappa_max, kappa_nodes));
}

/// A function sampled on a quadrature grid.
struct SampledFn {
  quad::QuadGrid grid;
  Eigen::VectorXd values;
};

template <class F>
SampledFn sample(const quad::QuadGrid& grid, F&& f) {
  SampledFn s{grid, Eigen::VectorXd(grid.size())};
  for (std::size_t i = 0; i < grid.size(); ++i) s.values[i] = f(grid.nodes[i]);
  return s;
}

namespace detail {
/// Transform matrix K(j, i) = w_i sqrt(r_i k_j) J_nu(r_i k_j).
inline Eigen::MatrixXd hankel_matrix(const HankelPlan& plan) {
  const auto& r = plan.radial;
  const auto& k = plan.freq;
  Eigen::MatrixXd K(k.size(), r.size());
  for (std::size_t j = 0; j < k.size(); ++j)
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double z = r.nodes[i] * k.nodes[j];
      K(j, i) = r.weights[i] * std::sqrt(z) * specfun::bessel_j(plan.order, z);
    }
  return K;
}
}  // namespace detail

/// Hankel transform g(k) = int f(r) sqrt(r k) J_nu(r k) dr on the plan's grids.
inline SampledFn hankel_1d(const HankelPlan& plan, const SampledFn& f) {
  if (f.grid.size() != plan.radial.size() || f.values.size() != static_cast<Eigen::Index>(plan.radial.size()))
    throw std::invalid_argument("hankel_1d: sample does not match the plan's radial grid");
  SampledFn g{plan.freq, detail::hankel_matrix(plan) * f.values};
  return g;
}

/// A bivariate function sampled on a tensor grid; values(i, j) = F(x_i, y_j).
struct SampledBivariate {
  quad::QuadGrid grid_x;
  quad::QuadGrid grid_y;
  Eigen::MatrixXd values;
};

template <class F>
SampledBivariate sample2(const quad::QuadGrid& gx, const quad::QuadGrid& gy, F&& f) {
  SampledBivariate s{gx, gy, Eigen::MatrixXd(gx.size(), gy.size())};
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gy.size(); ++j)
      s.values(i, j) = f(gx.nodes[i], gy.nodes[j]);
  return s;
}

/// Two-dimensional Hankel transform as iterated 1-D transforms (the kernel is
/// an exact product).
inline SampledBivariate hankel_2d(const HankelPlan& plan1, const HankelPlan& plan2,
                                  const SampledBivariate& F) {
  if (F.grid_x.size() != plan1.radial.size() || F.grid_y.size() != plan2.radial.size())
    throw std::invalid_argument("hankel_2d: sample does not match the plans' grids");
  const Eigen::MatrixXd K1 = detail::hankel_matrix(plan1);
  const Eigen::MatrixXd K2 = detail::hankel_matrix(plan2);
  return SampledBivariate{plan1.freq, plan2.freq, K1 * F.values * K2.transpose()};
}

/// Discrete squared norm int |f|^2 with the sample's own weights.
inline double square_mass(const SampledFn& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.grid.size(); ++i)
    s += f.grid.weights[i] * f.values[i] * f.values[i];
  return s;
}

inline double square_mass(const SampledBivariate& F) {
  double s = 0.0;
  for (std::size_t i = 0; i < F.grid_x.size(); ++i)
    for (std::size_t j = 0; j < F.grid_y.size(); ++j)
      s += F.grid_x.weights[i] * F.grid_y.weights[j] * F.values(i, j) * F.values(i, j);
  return s;
}

/// Truncated evaluations of the equivalence ratio integral and the verdict.
struct DivergenceReport {
  std::vector<double> truncation_radii;
  std::vector<double> values;
  bool diverges = false;
};

/// Evaluates int int |h(kappa, iota)|^2 / (g1(kappa) g2(iota)) for the Hankel
/// transform h of the candidate extension restricted to growing truncations
/// [0, R_t]^2. Verdict "diverges" when the value grows by a factor >= 4 across
/// the last two doublings of the truncation radius.
inline DivergenceReport equivalence_ratio_integral(
    const kernels::CovarianceModel& model1, const kernels::CovarianceModel& model2,
    const SampledBivariate& extension, const HankelPlan& plan1, const HankelPlan& plan2,
    int levels = 4) {
  if (levels < 3) throw std::invalid_argument("equivalence_ratio_integral: levels >= 3");
  const auto g1 = kernels::spectral_density(model1);
  const auto g2 = kernels::spectral_density(model2);
  const auto& fk1 = plan1.freq;
  const auto& fk2 = plan2.freq;

  Eigen::VectorXd d1(fk1.size()), d2(fk2.size());
  for (std::size_t i = 0; i < fk1.size(); ++i) {
    const double g = g1(fk1.nodes[i]);
    if (!(g > 1e-300))
      throw std::domain_error("equivalence_ratio_integral: spectral density vanishes");
    d1[i] = fk1.weights[i] / g;
  }
  for (std::size_t j = 0; j < fk2.size(); ++j) {
    const double g = g2(fk2.nodes[j]);
    if (!(g > 1e-300))
      throw std::domain_error("equivalence_ratio_integral: spectral density vanishes");
    d2[j] = fk2.weights[j] / g;
  }

  const double r_max =
      std::min(extension.grid_x.max_node(), extension.grid_y.max_node());
  DivergenceReport report;
  for (int t = 0; t < levels; ++t) {
    const double rt = r_max * std::pow(0.5, levels - 1 - t);
    SampledBivariate trunc = extension;
    for (std::size_t i = 0; i < trunc.grid_x.size(); ++i)
      for (std::size_t j = 0; j < trunc.grid_y.size(); ++j)
        if (trunc.grid_x.nodes[i] > rt || trunc.grid_y.nodes[j] > rt)
          trunc.values(i, j) = 0.0;
    const auto h = hankel_2d(plan1, plan2, trunc);
    double v = 0.0;
    for (std::size_t i = 0; i < fk1.size(); ++i)
      for (std::size_t j = 0; j < fk2.size(); ++j)
        v += d1[i] * d2[j] * h.values(i, j) * h.values(i, j);
    if (!std::isfinite(v))
      throw NumericalError("equivalence_ratio_integral: non-finite truncated value");
    report.truncation_radii.push_back(rt);
    report.values.push_back(v);
  }
  const double last = report.values.back();
  const double base = report.values[levels - 3];
  report.diverges = last > 1e-300 && base > 1e-300 && last >= 4.0 * base;
  return report;
}

/// Divergence witness of the dense-sampling theorems: the truncated squared
/// mass (2R)^d * int_{R^d} |k1 - k2|^2, linear in the truncation volume.
inline double delta_square_mass(const kernels::CovarianceModel& model1,
                                const kernels::CovarianceModel& model2, double R) {
  if (!(R > 0.0)) throw std::domain_error("delta_square_mass: R must be > 0");
  if (model1.dim != model2.dim)
    throw std::invalid_argument("delta_square_mass: dimension mismatch");
  const int d = model1.dim;
  const double amin = std::min(model1.theta.alpha, model2.theta.alpha);
  auto integrand = [&](double tau) {
    const double diff =
        kernels::kernel_eval(model1, tau) - kernels::kernel_eval(model2, tau);
    return std::pow(tau, d - 1) * diff * diff;
  };
  const double mass = kernels::surface_area(d) *
                      quad::adaptive_gl(integrand, 0.0, 40.0 / amin, 1e-12);
  return std::pow(2.0 * R, d) * mass;
}

/// Canonical continuous extension of the degree-m sphere projection of
/// c1 - c2 to all radii, computed from the radial spectral densities:
/// (2 pi)^d int J_nu(kappa r1) J_nu(kappa r2) / (kappa^2 r1 r2)^{(d-2)/2}
///   kappa^{d-1} (g1 - g2)(kappa) dkappa,  nu = m + (d-2)/2.
inline SampledBivariate projection_extension(const kernels::CovarianceModel& model1,
                                             const kernels::CovarianceModel& model2,
                                             unsigned degree,
                                             const quad::QuadGrid& rg1,
                                             const quad::QuadGrid& rg2,
                                             double kappa_max, int kappa_panels = 128) {
  if (model1.dim != model2.dim)
    throw std::invalid_argument("projection_extension: dimension mismatch");
  const int d = model1.dim;
  const auto g1 = kernels::spectral_density(model1);
  const auto g2 = kernels::spectral_density(model2);
  const auto kg = quad::composite_gl(0.0, kappa_max, kappa_panels);
  const double c = std::pow(2.0 * M_PI, d);
  const int m = static_cast<int>(degree);

  // precompute radial profiles on both axes
  Eigen::MatrixXd p1(rg1.size(), kg.size()), p2(rg2.size(), kg.size());
  for (std::size_t i = 0; i < rg1.size(); ++i)
    for (std::size_t q = 0; q < kg.size(); ++q)
      p1(i, q) = detail::radial_profile(m, d, kg.nodes[q] * rg1.nodes[i]);
  for (std::size_t j = 0; j < rg2.size(); ++j)
    for (std::size_t q = 0; q < kg.size(); ++q)
      p2(j, q) = detail::radial_profile(m, d, kg.nodes[q] * rg2.nodes[j]);

  Eigen::VectorXd meas(kg.size());
  for (std::size_t q = 0; q < kg.size(); ++q)
    meas[q] = kg.weights[q] * std::pow(kg.nodes[q], d - 1) *
              (g1(kg.nodes[q]) - g2(kg.nodes[q]));

  SampledBivariate out{rg1, rg2, Eigen::MatrixXd(rg1.size(), rg2.size())};
  out.values = c * p1 * meas.asDiagonal() * p2.transpose();
  return out;
}

/// Scale a projection by (r1 r2)^{(d-1)/2}, the weight appearing in the
/// square-integrability criterion.
inline SampledBivariate scale_projection(const SampledBivariate& F, int d) {
  SampledBivariate out = F;
  for (std::size_t i = 0; i < out.grid_x.size(); ++i)
    for (std::size_t j = 0; j < out.grid_y.size(); ++j)
      out.values(i, j) *= std::pow(out.grid_x.nodes[i] * out.grid_y.nodes[j],
                                   0.5 * (d - 1));
  return out;
}

}  // namespace orthofield::spectral
