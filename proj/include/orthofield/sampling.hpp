#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace orthofield::sampling {

enum class Provenance { grid, cloud, bounded, brownian };

inline const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::grid: return "grid";
    case Provenance::cloud: return "cloud";
    case Provenance::bounded: return "bounded";
    case Provenance::brownian: return "brownian";
  }
  return "unknown";
}

/// An ordered finite design in R^d; rows of `points` are the x_i in their
/// generation order (time order for paths, row-major for grids).
struct PointSet {
  int dim = 0;
  Eigen::MatrixXd points;  // n x dim
  Provenance provenance = Provenance::grid;

  Eigen::Index size() const { return points.rows(); }
};

namespace detail {

/// Merge points closer than 1e-9 (keep the earlier one), preserving order.
/// A sort along a random-ish projection would miss nothing for our designs,
/// but n stays small enough that the grid-hash approach is simplest.
inline Eigen::MatrixXd merge_close(const Eigen::MatrixXd& pts) {
  const double tol = 1e-9;
  const Eigen::Index n = pts.rows();
  std::vector<Eigen::Index> keep;
  keep.reserve(n);
  // sort by first coordinate to limit the scan window
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return pts(a, 0) < pts(b, 0);
  });
  std::vector<char> dropped(n, 0);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Eigen::Index i = order[s];
    if (dropped[i]) continue;
    for (Eigen::Index t = s + 1; t < n; ++t) {
      const Eigen::Index j = order[t];
      if (pts(j, 0) - pts(i, 0) > tol) break;
      if (dropped[j]) continue;
      if ((pts.row(i) - pts.row(j)).norm() < tol)
        dropped[i > j ? i : j] = 1;  // keep the earlier index
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (!dropped[i]) keep.push_back(i);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(keep.size()), pts.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) out.row(r) = pts.row(keep[r]);
  return out;
}

inline std::mt19937_64 engine(unsigned long long seed) {
  return std::mt19937_64(seed);
}

}  // namespace detail

/// Sorted radii of a design truncated at r_max, with the largest gap between
/// consecutive radii (the gap down from 0 and up to r_max included).
struct RadiiSet {
  std::vector<double> radii;
  double max_gap = 0.0;
  double r_max = 0.0;
};

/// A d-dimensional Brownian path on the uniform time grid t_k = k h. Row 0 of
/// `positions` is the origin.
struct BrownianPath {
  int dim = 0;
  double step = 0.0;
  double horizon = 0.0;
  unsigned long long seed = 0;
  Eigen::MatrixXd positions;  // (steps + 1) x dim

  /// Sampling design along the path; B_0 = 0 is dropped (polar coordinates
  /// downstream need r > 0).
  PointSet to_point_set() const {
    PointSet ps;
    ps.dim = dim;
    ps.points = detail::merge_close(positions.bottomRows(positions.rows() - 1));
    ps.provenance = Provenance::brownian;
    return ps;
  }
};

/// Lattice points of [-L, L]^d with the given spacing, origin excluded,
/// row-major order.
inline PointSet make_grid(int d, double L, double s, Eigen::Index cap = 200000) {
  if (d < 1) throw std::invalid_argument("make_grid: d must be >= 1");
  if (!(L > 0.0) || !(s > 0.0) || s > L)
    throw std::invalid_argument("make_grid: need L > 0 and 0 < s <= L");
  const Eigen::Index K = static_cast<Eigen::Index>(std::floor(2.0 * L / s + 1e-9)) + 1;
  double total = 1.0;
  for (int k = 0; k < d; ++k) {
    total *= static_cast<double>(K);
    if (total > static_cast<double>(cap) + 1.0)
      throw std::length_error("make_grid: point count exceeds the configured cap");
  }
  const Eigen::Index n_full = static_cast<Eigen::Index>(total);
  PointSet ps;
  ps.dim = d;
  ps.provenance = Provenance::grid;
  ps.points.resize(n_full, d);
  Eigen::Index rows = 0;
  std::vector<Eigen::Index> idx(d, 0);
  Eigen::VectorXd x(d);
  for (Eigen::Index c = 0; c < n_full; ++c) {
    Eigen::Index rem = c;
    bool origin = true;
    for (int k = d - 1; k >= 0; --k) {
      idx[k] = rem % K;
      rem /= K;
    }
    for (int k = 0; k < d; ++k) {
      x[k] = -L + s * static_cast<double>(idx[k]);
      if (std::abs(x[k]) > 1e-12) origin = false;
    }
    if (origin) continue;
    ps.points.row(rows++) = x.transpose();
  }
  ps.points.conservativeResize(rows, d);
  return ps;
}

/// n i.i.d. uniform points in the ball B_R(0), origin excluded, reproducible
/// under the seed. Direction from a normalized Gaussian, radius R * U^{1/d}.
inline PointSet make_bounded_cloud(int d, double R, Eigen::Index n,
                                   unsigned long long seed) {
  if (d < 1) throw std::invalid_argument("make_bounded_cloud: d must be >= 1");
  if (!(R > 0.0) || n < 1)
    throw std::invalid_argument("make_bounded_cloud: need R > 0 and n >= 1");
  auto rng = detail::engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd pts(n, d);
  Eigen::VectorXd g(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    double nrm = 0.0;
    do {
      for (int k = 0; k < d; ++k) g[k] = gauss(rng);
      nrm = g.norm();
    } while (nrm < 1e-12);
    double r = 0.0;
    do {
      r = R * std::pow(unif(rng), 1.0 / d);
    } while (r < 1e-12);
    pts.row(i) = (r / nrm) * g.transpose();
  }
  PointSet ps;
  ps.dim = d;
  ps.points = detail::merge_close(pts);
  ps.provenance = Provenance::bounded;
  return ps;
}

/// Brownian motion from the origin on the uniform grid t_k = k h up to T_max:
/// cumulative sum of independent N(0, h I_d) increments.
inline BrownianPath sample_brownian(int d, double h, double T_max,
                                    unsigned long long seed) {
  if (d < 1) throw std::invalid_argument("sample_brownian: d must be >= 1");
  if (!(h > 0.0) || T_max < h)
    throw std::invalid_argument("sample_brownian: need h > 0 and T_max >= h");
  const Eigen::Index steps = static_cast<Eigen::Index>(std::floor(T_max / h + 1e-9));
  auto rng = detail::engine(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  BrownianPath path;
  path.dim = d;
  path.step = h;
  path.horizon = T_max;
  path.seed = seed;
  path.positions.resize(steps + 1, d);
  path.positions.row(0).setZero();
  const double sd = std::sqrt(h);
  for (Eigen::Index k = 1; k <= steps; ++k)
    for (int c = 0; c < d; ++c)
      path.positions(k, c) = path.positions(k - 1, c) + sd * gauss(rng);
  return path;
}

/// Radii profile of the design: sorted norms truncated at r_max, and the
/// largest gap along [0, r_max].
inline RadiiSet radii_coverage(const PointSet& ps, double r_max) {
  if (!(r_max > 0.0)) throw std::invalid_argument("radii_coverage: r_max must be > 0");
  RadiiSet rs;
  rs.r_max = r_max;
  rs.radii.reserve(ps.size());
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    const double r = ps.points.row(i).norm();
    if (r <= r_max) rs.radii.push_back(r);
  }
  if (rs.radii.empty())
    throw std::domain_error("radii_coverage: no radii at or below r_max");
  std::sort(rs.radii.begin(), rs.radii.end());
  double gap = rs.radii.front();  // from 0 up to the smallest radius
  for (std::size_t i = 1; i < rs.radii.size(); ++i)
    gap = std::max(gap, rs.radii[i] - rs.radii[i - 1]);
  gap = std::max(gap, r_max - rs.radii.back());
  rs.max_gap = gap;
  return rs;
}

/// Smallest pairwise distance; the merge filter keeps this above 1e-9.
inline double min_separation(const PointSet& ps) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ps.size(); ++i)
    for (Eigen::Index j = i + 1; j < ps.size(); ++j)
      best = std::min(best, (ps.points.row(i) - ps.points.row(j)).norm());
  return best;
}

}  // namespace orthofield::sampling
