#pragma once

// Ornstein-Uhlenbeck semigroup on R^n (n = 1, 2) through the Mehler kernel,
// and the Dirichlet semigroup of a half-space obtained by odd reflection.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "gfou/field.hpp"
#include "gfou/gauss.hpp"

namespace gfou {

/// Smallest time accepted by the quadrature-based semigroup: below it the
/// kernel is too peaked for the fixed panel rules.
inline constexpr double kMinSemigroupTime = 1e-3;

/// Mehler kernel M_t(x, y) against d gamma(y), in dimension 1 or 2.
inline double mehler_kernel(const Point& x, const Point& y, double t, int dim) {
  if (!(t > 0.0)) throw std::domain_error("mehler_kernel: t must be positive");
  const double e1 = std::exp(-t);
  const double e2 = e1 * e1;
  const double one_minus = -std::expm1(-2.0 * t);
  double xx = x.x1 * x.x1, yy = y.x1 * y.x1, xy = x.x1 * y.x1;
  if (dim == 2) {
    xx += x.x2 * x.x2;
    yy += y.x2 * y.x2;
    xy += x.x2 * y.x2;
  }
  const double q = (e2 * xx - 2.0 * e1 * xy + e2 * yy) / (2.0 * one_minus);
  return std::pow(one_minus, -0.5 * dim) * std::exp(-q);
}

inline double mehler_kernel(double x, double y, double t) { return mehler_kernel({x, 0.0}, {y, 0.0}, t, 1); }

namespace detail {
inline void check_time(double t) {
  if (!(t > 0.0)) throw std::domain_error("semigroup: t must be positive");
  if (t < kMinSemigroupTime) throw NumericalError("semigroup: t below 1e-3 is not resolved by the quadrature");
}
}  // namespace detail

/// e^{-tL} g at arbitrary target points, g given on a full-space quadrature grid.
inline std::vector<double> apply_semigroup_at(const GridField& g, double t, const std::vector<Point>& targets) {
  detail::check_time(t);
  const Grid& q = g.grid();
  if (q.support_measure < 1.0 - 1e-12) throw ConfigError("apply_semigroup: field must live on a full-space quadrature");
  std::vector<double> out(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) acc += q.weights[j] * mehler_kernel(targets[i], q.nodes[j], t, q.dim) * g[j];
    out[i] = acc;
  }
  return out;
}

/// e^{-tL} g evaluated on the nodes of g's own quadrature grid.
inline GridField apply_semigroup(const GridField& g, double t) {
  return GridField(g.grid_ptr(), apply_semigroup_at(g, t, g.grid().nodes), g.label());
}

/// Odd reflection across {x1 = 0}: the full-space grid and the reflected values.
inline GridField odd_extension(const GridField& f) {
  const Grid& h = f.grid();
  auto full = std::make_shared<Grid>();
  full->dim = h.dim;
  full->support_measure = 1.0;
  full->nodes.reserve(2 * h.size());
  full->weights.reserve(2 * h.size());
  std::vector<double> v;
  v.reserve(2 * h.size());
  for (std::size_t j = 0; j < h.size(); ++j) {
    full->nodes.push_back({-h.nodes[j].x1, h.nodes[j].x2});
    full->weights.push_back(h.weights[j]);
    v.push_back(-f[j]);
  }
  for (std::size_t j = 0; j < h.size(); ++j) {
    full->nodes.push_back(h.nodes[j]);
    full->weights.push_back(h.weights[j]);
    v.push_back(f[j]);
  }
  return GridField(std::move(full), std::move(v), f.label());
}

namespace detail {
inline void check_half_space_grid(const Grid& h) {
  for (const Point& p : h.nodes)
    if (p.x1 < 0.0) throw ConfigError("apply_halfspace_semigroup: field must live on {x1 > 0}");
  if (std::abs(h.support_measure - 0.5) > 1e-9) throw ConfigError("apply_halfspace_semigroup: grid is not the half-space {x1 > 0}");
}
}  // namespace detail

/// Dirichlet semigroup of H = {x1 > 0} at target points:
/// integral over H of [M_t(x, y) - M_t(x, y*)] f(y) d gamma(y), y* = reflected y.
inline std::vector<double> apply_halfspace_semigroup_at(const GridField& f, double t, const std::vector<Point>& targets) {
  detail::check_time(t);
  const Grid& h = f.grid();
  detail::check_half_space_grid(h);
  std::vector<double> out(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < h.size(); ++j) {
      const Point& y = h.nodes[j];
      const Point ry{-y.x1, y.x2};
      acc += h.weights[j] * (mehler_kernel(targets[i], y, t, h.dim) - mehler_kernel(targets[i], ry, t, h.dim)) * f[j];
    }
    out[i] = acc;
  }
  return out;
}

inline GridField apply_halfspace_semigroup(const GridField& f, double t) {
  return GridField(f.grid_ptr(), apply_halfspace_semigroup_at(f, t, f.grid().nodes), f.label());
}

}  // namespace gfou
