#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "orthofield/kernels.hpp"
#include "orthofield/sampling.hpp"

namespace orthofield::gaussml {

/// Thrown when a covariance matrix fails to factor (near-duplicate points).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when the simplex search hits its iteration cap; carries the best
/// iterate found so far.
struct OptimizerError : std::runtime_error {
  double best_sigma2;
  double best_alpha;
  double best_value;

  OptimizerError(const std::string& msg, double s2, double a, double v)
      : std::runtime_error(msg), best_sigma2(s2), best_alpha(a), best_value(v) {}
};

/// A finite design with its covariance matrix Sigma_n(theta), lower Cholesky
/// factor, and log-determinant. Immutable after construction.
struct GaussianDesign {
  sampling::PointSet points;
  kernels::Theta theta;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd chol;  // lower triangular
  double log_det = 0.0;

  Eigen::Index size() const { return sigma.rows(); }
};

namespace detail {

/// Plain Cholesky that reports the failing pivot; used only to diagnose an
/// indefinite matrix after the fast factorization has already failed.
inline Eigen::Index first_bad_pivot(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0)) return j;
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
  }
  return -1;
}

}  // namespace detail

/// Assemble Sigma from pairwise distances and factor it. An indefinite matrix
/// is an error, never silently regularized.
inline GaussianDesign build_design(const sampling::PointSet& ps,
                                   const kernels::Theta& theta) {
  const Eigen::Index n = ps.size();
  if (n < 1) throw std::invalid_argument("build_design: empty point set");
  const kernels::CovarianceModel model(theta, ps.dim);
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sigma(i, i) = theta.sigma2;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double c = kernels::kernel_eval(model, (ps.points.row(i) - ps.points.row(j)).norm());
      sigma(i, j) = c;
      sigma(j, i) = c;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    const Eigen::Index bad = detail::first_bad_pivot(sigma);
    throw NumericalError("build_design: covariance matrix is numerically indefinite "
                         "at prefix " + std::to_string(bad + 1) +
                         " (near-duplicate points?)");
  }
  GaussianDesign d{ps, theta, std::move(sigma), llt.matrixL(), 0.0};
  double ld = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(d.chol(i, i) > 0.0))
      throw NumericalError("build_design: nonpositive Cholesky pivot at prefix " +
                           std::to_string(i + 1));
    ld += 2.0 * std::log(d.chol(i, i));
  }
  d.log_det = ld;
  if (!std::isfinite(ld)) throw NumericalError("build_design: non-finite log-determinant");
  return d;
}

/// Y = L Z with Z i.i.d. standard normal: exact draw from N(0, Sigma).
inline Eigen::VectorXd simulate_field(const GaussianDesign& design,
                                      unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(design.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = gauss(rng);
  return design.chol.triangularView<Eigen::Lower>() * z;
}

/// log p_n(theta) via the triangular factor: one solve, no explicit inverse.
inline double log_likelihood(const GaussianDesign& design, const Eigen::VectorXd& y) {
  const Eigen::Index n = design.size();
  if (y.size() != n) throw std::invalid_argument("log_likelihood: length mismatch");
  const Eigen::VectorXd w = design.chol.triangularView<Eigen::Lower>().solve(y);
  return -0.5 * n * std::log(2.0 * M_PI) - 0.5 * design.log_det - 0.5 * w.squaredNorm();
}

/// log p_k(theta) for every prefix k = 1..n in one pass. The leading k x k
/// block of L is the Cholesky factor of the leading block of Sigma, so the
/// whitened coordinates w = L^{-1} y accumulate prefix likelihoods exactly.
inline Eigen::VectorXd prefix_log_likelihoods(const GaussianDesign& design,
                                              const Eigen::VectorXd& y) {
  const Eigen::Index n = design.size();
  if (y.size() != n)
    throw std::invalid_argument("prefix_log_likelihoods: length mismatch");
  const Eigen::VectorXd w = design.chol.triangularView<Eigen::Lower>().solve(y);
  Eigen::VectorXd out(n);
  double ld = 0.0, quad = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    ld += 2.0 * std::log(design.chol(k, k));
    quad += w[k] * w[k];
    out[k] = -0.5 * (k + 1) * std::log(2.0 * M_PI) - 0.5 * ld - 0.5 * quad;
  }
  return out;
}

/// Whitened squared coordinates w_k^2 of y under the design's factor;
/// cumulative sums give the quadratic forms y_k' Sigma_k^{-1} y_k.
inline Eigen::VectorXd whitened_squares(const GaussianDesign& design,
                                        const Eigen::VectorXd& y) {
  const Eigen::VectorXd w = design.chol.triangularView<Eigen::Lower>().solve(y);
  return w.array().square();
}

/// log phi_n(theta) along nested prefixes of the design order for a grid of
/// comparison parameters.
struct RatioTrace {
  std::vector<kernels::Theta> thetas;
  std::vector<Eigen::Index> prefixes;
  Eigen::MatrixXd log_phi;  // thetas x prefixes
};

inline void check_prefixes(const std::vector<Eigen::Index>& prefixes, Eigen::Index n) {
  if (prefixes.empty()) throw std::invalid_argument("prefix schedule is empty");
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    if (prefixes[i] < 1 || prefixes[i] > n)
      throw std::invalid_argument("prefix schedule leaves [1, n]");
    if (i > 0 && prefixes[i] < prefixes[i - 1])
      throw std::invalid_argument("prefix schedule must be nondecreasing");
  }
}

/// phi_n(theta) = p_n(theta) / p_n(theta0) on each prefix. theta = theta0
/// goes through the identical code path, so log phi is exactly zero there.
inline RatioTrace likelihood_ratio_trace(const sampling::PointSet& ps,
                                         const kernels::Theta& theta0,
                                         const std::vector<kernels::Theta>& thetas,
                                         const Eigen::VectorXd& y,
                                         const std::vector<Eigen::Index>& prefixes) {
  check_prefixes(prefixes, ps.size());
  const Eigen::VectorXd base = prefix_log_likelihoods(build_design(ps, theta0), y);
  RatioTrace trace;
  trace.thetas = thetas;
  trace.prefixes = prefixes;
  trace.log_phi.resize(static_cast<Eigen::Index>(thetas.size()),
                       static_cast<Eigen::Index>(prefixes.size()));
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    const Eigen::VectorXd ll = prefix_log_likelihoods(build_design(ps, thetas[t]), y);
    for (std::size_t p = 0; p < prefixes.size(); ++p)
      trace.log_phi(t, p) = ll[prefixes[p] - 1] - base[prefixes[p] - 1];
  }
  return trace;
}

/// Closed box Theta' in (0, inf)^2.
struct ThetaBox {
  double sigma2_lo, sigma2_hi;
  double alpha_lo, alpha_hi;

  ThetaBox(double s2lo, double s2hi, double alo, double ahi)
      : sigma2_lo(s2lo), sigma2_hi(s2hi), alpha_lo(alo), alpha_hi(ahi) {
    if (!(s2lo > 0.0) || !(s2hi >= s2lo) || !(alo > 0.0) || !(ahi >= alo))
      throw std::invalid_argument("ThetaBox: need 0 < lo <= hi on both axes");
  }

  double clamp_sigma2(double v) const { return std::clamp(v, sigma2_lo, sigma2_hi); }
  double clamp_alpha(double v) const { return std::clamp(v, alpha_lo, alpha_hi); }
};

enum class MlMode { sigma2_only, joint };

/// Estimates per requested prefix, with clamp flags against the box.
struct MlFit {
  std::vector<Eigen::Index> prefixes;
  std::vector<kernels::Theta> estimates;
  std::vector<bool> clamped;
  ThetaBox box;
  MlMode mode;
  std::vector<int> iterations;  // simplex iterations per prefix (0 in closed form)
};

/// Exact log-likelihood of the 1-D exponential kernel via its Markov
/// property: sorted coordinates give an AR(1)-type product of conditionals in
/// O(n). Equals the dense-Cholesky value to rounding.
inline double exp1d_log_likelihood(const std::vector<double>& x_sorted,
                                   const std::vector<double>& y,
                                   const kernels::Theta& theta) {
  const std::size_t n = x_sorted.size();
  if (n == 0 || y.size() != n)
    throw std::invalid_argument("exp1d_log_likelihood: bad input lengths");
  const double s2 = theta.sigma2;
  double ll = -0.5 * std::log(2.0 * M_PI * s2) - 0.5 * y[0] * y[0] / s2;
  for (std::size_t i = 1; i < n; ++i) {
    const double rho = std::exp(-theta.alpha * (x_sorted[i] - x_sorted[i - 1]));
    const double v = s2 * (1.0 - rho * rho);
    if (!(v > 0.0))
      throw NumericalError("exp1d_log_likelihood: coincident coordinates");
    const double resid = y[i] - rho * y[i - 1];
    ll += -0.5 * std::log(2.0 * M_PI * v) - 0.5 * resid * resid / v;
  }
  return ll;
}

namespace detail {

/// Log-likelihood of a prefix as a function of theta, choosing the O(n)
/// Markov route in d = 1 and the dense factorization otherwise.
struct PrefixObjective {
  const sampling::PointSet& ps;
  Eigen::Index n;
  Eigen::VectorXd y;
  bool use_markov;
  std::vector<double> xs;  // sorted coordinates (d = 1 route)
  std::vector<double> ys;  // observations in the same order

  PrefixObjective(const sampling::PointSet& ps_, const Eigen::VectorXd& y_full,
                  Eigen::Index n_)
      : ps(ps_), n(n_), y(y_full.head(n_)), use_markov(ps_.dim == 1) {
    if (use_markov) {
      std::vector<Eigen::Index> order(n);
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return ps.points(a, 0) < ps.points(b, 0);
      });
      xs.resize(n);
      ys.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        xs[i] = ps.points(order[i], 0);
        ys[i] = y[order[i]];
      }
    }
  }

  double operator()(const kernels::Theta& theta) const {
    if (use_markov) return exp1d_log_likelihood(xs, ys, theta);
    sampling::PointSet head;
    head.dim = ps.dim;
    head.points = ps.points.topRows(n);
    head.provenance = ps.provenance;
    return log_likelihood(build_design(head, theta), y);
  }
};

struct SimplexResult {
  double u, v;  // log sigma2, log alpha
  double value;
  int iterations;
  bool converged;
};

/// Nelder-Mead on a 2-D box in log-parameters; coordinates are clamped into
/// the box before every evaluation.
template <class F>
SimplexResult nelder_mead_2d(F&& f, double ulo, double uhi, double vlo, double vhi,
                             double u0, double v0, int max_iter = 400) {
  auto clamp_eval = [&](double u, double v) {
    return f(std::clamp(u, ulo, uhi), std::clamp(v, vlo, vhi));
  };
  const double du = 0.1 * std::max(1e-3, uhi - ulo);
  const double dv = 0.1 * std::max(1e-3, vhi - vlo);
  double pu[3] = {u0, u0 + du, u0};
  double pv[3] = {v0, v0, v0 + dv};
  double fv[3];
  for (int i = 0; i < 3; ++i) fv[i] = clamp_eval(pu[i], pv[i]);
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    int idx[3] = {0, 1, 2};
    std::sort(idx, idx + 3, [&](int a, int b) { return fv[a] < fv[b]; });
    const int lo = idx[0], mid = idx[1], hi = idx[2];
    const double spread = fv[hi] - fv[lo];
    const double size = std::max({std::abs(pu[0] - pu[1]), std::abs(pu[0] - pu[2]),
                                  std::abs(pv[0] - pv[1]), std::abs(pv[0] - pv[2])});
    if (spread < 1e-11 && size < 1e-9) {
      return {std::clamp(pu[lo], ulo, uhi), std::clamp(pv[lo], vlo, vhi), fv[lo],
              iter, true};
    }
    const double cu = 0.5 * (pu[lo] + pu[mid]);
    const double cv = 0.5 * (pv[lo] + pv[mid]);
    double ru = cu + (cu - pu[hi]), rv = cv + (cv - pv[hi]);
    double fr = clamp_eval(ru, rv);
    if (fr < fv[lo]) {
      const double eu = cu + 2.0 * (cu - pu[hi]), ev = cv + 2.0 * (cv - pv[hi]);
      const double fe = clamp_eval(eu, ev);
      if (fe < fr) {
        pu[hi] = eu; pv[hi] = ev; fv[hi] = fe;
      } else {
        pu[hi] = ru; pv[hi] = rv; fv[hi] = fr;
      }
    } else if (fr < fv[mid]) {
      pu[hi] = ru; pv[hi] = rv; fv[hi] = fr;
    } else {
      const double ku = cu + 0.5 * (pu[hi] - cu), kv = cv + 0.5 * (pv[hi] - cv);
      const double fk = clamp_eval(ku, kv);
      if (fk < fv[hi]) {
        pu[hi] = ku; pv[hi] = kv; fv[hi] = fk;
      } else {
        for (int i = 0; i < 3; ++i) {
          if (i == lo) continue;
          pu[i] = pu[lo] + 0.5 * (pu[i] - pu[lo]);
          pv[i] = pv[lo] + 0.5 * (pv[i] - pv[lo]);
          fv[i] = clamp_eval(pu[i], pv[i]);
        }
      }
    }
  }
  int lo = 0;
  for (int i = 1; i < 3; ++i)
    if (fv[i] < fv[lo]) lo = i;
  return {std::clamp(pu[lo], ulo, uhi), std::clamp(pv[lo], vlo, vhi), fv[lo], iter,
          false};
}

}  // namespace detail

/// Maximum-likelihood estimates on the requested prefixes.
///
/// sigma2_only: closed form sigma2_hat = y' R(alpha0)^{-1} y / n projected
/// onto the box (R = correlation matrix at the supplied alpha0).
/// joint: simplex search in (log sigma2, log alpha) with three restarts (box
/// center and two corners); ties broken toward the lexicographically smaller
/// parameter.
inline MlFit ml_estimate(const sampling::PointSet& ps, const Eigen::VectorXd& y,
                         const ThetaBox& box, MlMode mode,
                         const std::vector<Eigen::Index>& prefixes,
                         double alpha0 = 1.0) {
  check_prefixes(prefixes, ps.size());
  if (y.size() != ps.size()) throw std::invalid_argument("ml_estimate: length mismatch");
  MlFit fit{prefixes, {}, {}, box, mode, {}};

  if (mode == MlMode::sigma2_only) {
    const GaussianDesign corr = build_design(ps, kernels::Theta(1.0, alpha0));
    const Eigen::VectorXd w2 = whitened_squares(corr, y);
    double quad = 0.0;
    Eigen::Index k = 0;
    for (const Eigen::Index n : prefixes) {
      for (; k < n; ++k) quad += w2[k];
      const double raw = quad / static_cast<double>(n);
      const double est = box.clamp_sigma2(raw);
      fit.estimates.emplace_back(est, alpha0);
      fit.clamped.push_back(est != raw);
      fit.iterations.push_back(0);
    }
    return fit;
  }

  const double ulo = std::log(box.sigma2_lo), uhi = std::log(box.sigma2_hi);
  const double vlo = std::log(box.alpha_lo), vhi = std::log(box.alpha_hi);
  const double starts[3][2] = {{0.5 * (ulo + uhi), 0.5 * (vlo + vhi)},
                               {ulo + 0.1 * (uhi - ulo), vhi - 0.1 * (vhi - vlo)},
                               {uhi - 0.1 * (uhi - ulo), vlo + 0.1 * (vhi - vlo)}};
  for (const Eigen::Index n : prefixes) {
    const detail::PrefixObjective obj(ps, y, n);
    auto neg = [&](double u, double v) {
      return -obj(kernels::Theta(std::exp(u), std::exp(v)));
    };
    bool any_converged = false;
    detail::SimplexResult best{0.0, 0.0, std::numeric_limits<double>::infinity(), 0,
                               false};
    int total_iter = 0;
    for (const auto& s : starts) {
      const auto r = detail::nelder_mead_2d(neg, ulo, uhi, vlo, vhi, s[0], s[1]);
      total_iter += r.iterations;
      any_converged = any_converged || r.converged;
      if (r.value < best.value ||
          (r.value == best.value && (r.u < best.u || (r.u == best.u && r.v < best.v))))
        best = r;
    }
    if (!any_converged)
      throw OptimizerError("ml_estimate: simplex search hit the iteration cap at "
                           "prefix " + std::to_string(n),
                           std::exp(best.u), std::exp(best.v), -best.value);
    const double s2 = box.clamp_sigma2(std::exp(best.u));
    const double a = box.clamp_alpha(std::exp(best.v));
    fit.estimates.emplace_back(s2, a);
    fit.clamped.push_back(s2 == box.sigma2_lo || s2 == box.sigma2_hi ||
                          a == box.alpha_lo || a == box.alpha_hi);
    fit.iterations.push_back(total_iter);
  }
  return fit;
}

/// Fractions of interior grid triples violating midpoint concavity, per scan
/// direction, for a scalar function on a k x k grid over the box.
struct ConcavityReport {
  int grid_k = 0;
  long triples = 0;
  long violations_axis1 = 0;
  long violations_axis2 = 0;
  long violations_diag = 0;

  double violation_fraction() const {
    return triples == 0
               ? 0.0
               : static_cast<double>(violations_axis1 + violations_axis2 +
                                     violations_diag) /
                     static_cast<double>(triples);
  }
};

/// Probe midpoint concavity of an arbitrary surface f(sigma2, alpha) on a
/// uniform k x k grid over the box.
template <class F>
ConcavityReport log_concavity_probe(F&& f, const ThetaBox& box, int grid_k,
                                    double tol = 1e-9) {
  if (grid_k < 3) throw std::invalid_argument("log_concavity_probe: grid_k >= 3");
  Eigen::MatrixXd vals(grid_k, grid_k);
  for (int i = 0; i < grid_k; ++i) {
    const double s2 = box.sigma2_lo +
                      (box.sigma2_hi - box.sigma2_lo) * i / (grid_k - 1.0);
    for (int j = 0; j < grid_k; ++j) {
      const double a = box.alpha_lo + (box.alpha_hi - box.alpha_lo) * j / (grid_k - 1.0);
      vals(i, j) = f(s2, a);
    }
  }
  ConcavityReport rep;
  rep.grid_k = grid_k;
  const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
  auto violates = [&](double a, double m, double b) {
    return m + tol * scale < 0.5 * (a + b);
  };
  for (int i = 0; i < grid_k; ++i)
    for (int j = 1; j + 1 < grid_k; ++j) {
      ++rep.triples;
      if (violates(vals(i, j - 1), vals(i, j), vals(i, j + 1))) ++rep.violations_axis2;
    }
  for (int j = 0; j < grid_k; ++j)
    for (int i = 1; i + 1 < grid_k; ++i) {
      ++rep.triples;
      if (violates(vals(i - 1, j), vals(i, j), vals(i + 1, j))) ++rep.violations_axis1;
    }
  for (int i = 1; i + 1 < grid_k; ++i)
    for (int j = 1; j + 1 < grid_k; ++j) {
      rep.triples += 2;
      if (violates(vals(i - 1, j - 1), vals(i, j), vals(i + 1, j + 1)))
        ++rep.violations_diag;
      if (violates(vals(i - 1, j + 1), vals(i, j), vals(i + 1, j - 1)))
        ++rep.violations_diag;
    }
  return rep;
}

/// Probe log phi_n(theta) = log p_n(theta) - log p_n(theta0) on the design's
/// full prefix. The theta0 shift is constant in theta and cannot change
/// concavity, so the likelihood surface itself is probed.
inline ConcavityReport log_concavity_probe(const sampling::PointSet& ps,
                                           const Eigen::VectorXd& y,
                                           const ThetaBox& box, int grid_k) {
  const detail::PrefixObjective obj(ps, y, ps.size());
  return log_concavity_probe(
      [&](double s2, double a) { return obj(kernels::Theta(s2, a)); }, box, grid_k);
}

}  // namespace orthofield::gaussml
