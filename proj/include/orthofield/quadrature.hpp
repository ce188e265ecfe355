#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace orthofield::quad {

/// Thrown when an adaptive rule fails to reach the requested tolerance.
struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on the
/// Legendre recurrence.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

/// A fixed quadrature design: strictly increasing nodes with positive weights.
struct QuadGrid {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  double max_node() const { return nodes.empty() ? 0.0 : nodes.back(); }
};

namespace detail {
inline const std::pair<std::vector<double>, std::vector<double>>& gl_cache(int order) {
  thread_local int cached_order = -1;
  thread_local std::pair<std::vector<double>, std::vector<double>> cache;
  if (order != cached_order) {
    gauss_legendre(order, cache.first, cache.second);
    cached_order = order;
  }
  return cache;
}

inline void append_panel(QuadGrid& g, double a, double b, int order) {
  const auto& [x, w] = gl_cache(order);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int i = 0; i < order; ++i) {
    g.nodes.push_back(c + h * x[i]);
    g.weights.push_back(h * w[i]);
  }
}
}  // namespace detail

/// Composite Gauss-Legendre with uniform panels on [a, b].
inline QuadGrid composite_gl(double a, double b, int panels, int order = 8) {
  if (!(b > a) || panels < 1) throw std::invalid_argument("composite_gl: bad interval");
  QuadGrid g;
  g.nodes.reserve(static_cast<std::size_t>(panels) * order);
  g.weights.reserve(static_cast<std::size_t>(panels) * order);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p)
    detail::append_panel(g, a + p * h, a + (p + 1) * h, order);
  return g;
}

/// Radial grid on (0, r_max]: uniform panels of width h = r_max/(uni + 1),
/// with the first panel [0, h] geometrically subdivided toward the origin so
/// square-root-type behavior at r = 0 is resolved. No panel is ever wider
/// than h (oscillatory integrands stay within the per-panel rule's reach),
/// and nodes never touch the axis r = 0.
inline QuadGrid radial_grid(double r_max, int target_nodes = 512, int order = 8) {
  if (!(r_max > 0.0)) throw std::invalid_argument("radial_grid: r_max must be > 0");
  const int panels = std::max(4, target_nodes / order);
  const int geo = std::min(24, std::max(2, panels / 4));
  const int uni = panels - geo;
  const double h = r_max / (uni + 1);
  QuadGrid g;
  g.nodes.reserve(static_cast<std::size_t>(panels) * order);
  g.weights.reserve(static_cast<std::size_t>(panels) * order);
  // innermost panel closes the gap down to 0
  double lo = h * std::pow(0.5, geo - 1);
  detail::append_panel(g, 0.0, lo, order);
  for (int k = geo - 2; k >= 0; --k) {
    const double hi = h * std::pow(0.5, k);
    detail::append_panel(g, lo, hi, order);
    lo = hi;
  }
  for (int p = 0; p < uni; ++p)
    detail::append_panel(g, h * (p + 1), h * (p + 2), order);
  return g;
}

template <class F>
double integrate(const QuadGrid& g, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * f(g.nodes[i]);
  return s;
}

template <class F>
double panel_gl(F&& f, double a, double b, int panels, int order = 8) {
  const auto& [x, w] = detail::gl_cache(order);
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h, hh = 0.5 * h;
    for (int i = 0; i < order; ++i) s += hh * w[i] * f(c + hh * x[i]);
  }
  return s;
}

namespace detail {
template <class F>
double adaptive_rec(F& f, double a, double b, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double left = panel_gl(f, a, m, 1, 15);
  const double right = panel_gl(f, m, b, 1, 15);
  if (std::abs(left + right - whole) <= tol || (b - a) < 1e-14 * (std::abs(a) + 1.0))
    return left + right;
  if (depth <= 0)
    throw QuadratureError("adaptive quadrature failed to converge on [" +
                          std::to_string(a) + ", " + std::to_string(b) +
                          "], residual " + std::to_string(std::abs(left + right - whole)));
  return adaptive_rec(f, a, m, left, 0.5 * tol, depth - 1) +
         adaptive_rec(f, m, b, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

/// Adaptive bisection with a 15-point Gauss-Legendre rule per panel.
template <class F>
double adaptive_gl(F&& f, double a, double b, double abs_tol, int max_depth = 48) {
  if (b == a) return 0.0;
  if (b < a) return -adaptive_gl(std::forward<F>(f), b, a, abs_tol, max_depth);
  const double whole = panel_gl(f, a, b, 1, 15);
  return detail::adaptive_rec(f, a, b, whole, abs_tol, max_depth);
}

}  // namespace orthofield::quad
