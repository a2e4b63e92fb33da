#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "gfou/gauss.hpp"

namespace gfou {

/// Samples of a scalar function on the nodes of a Grid.
class GridField {
 public:
  GridField() = default;
  GridField(std::shared_ptr<const Grid> grid, std::vector<double> values, std::string label = {})
      : grid_(std::move(grid)), values_(std::move(values)), label_(std::move(label)) {
    if (!grid_) throw ConfigError("GridField: null grid");
    if (values_.size() != grid_->size()) throw ConfigError("GridField: value count does not match node count");
  }

  template <class F>
  static GridField sample(std::shared_ptr<const Grid> grid, F&& f, std::string label = {}) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point& p = grid->nodes[i];
      if constexpr (std::is_invocable_r_v<double, F, double>) {
        v[i] = f(p.x1);
      } else {
        v[i] = f(p);
      }
    }
    return GridField(std::move(grid), std::move(v), std::move(label));
  }

  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::string& label() const { return label_; }
  void set_label(std::string l) { label_ = std::move(l); }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  double integral() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < size(); ++i) acc += grid_->weights[i] * values_[i];
    return acc;
  }
  double lp_norm(double p) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < size(); ++i) acc += grid_->weights[i] * std::pow(std::abs(values_[i]), p);
    return std::pow(acc, 1.0 / p);
  }
  double l2_norm() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < size(); ++i) acc += grid_->weights[i] * values_[i] * values_[i];
    return std::sqrt(acc);
  }
  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  GridField& operator+=(const GridField& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  GridField& operator-=(const GridField& o) {
    check_same_grid(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  GridField& operator*=(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }
  friend GridField operator+(GridField a, const GridField& b) { return a += b; }
  friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
  friend GridField operator*(double c, GridField a) { return a *= c; }

  bool same_grid(const GridField& o) const { return grid_ == o.grid_; }

 private:
  void check_same_grid(const GridField& o) const {
    if (grid_ != o.grid_) throw ConfigError("GridField: operands live on different grids");
  }

  std::shared_ptr<const Grid> grid_;
  std::vector<double> values_;
  std::string label_;
};

/// gamma-weighted inner product of two fields on the same grid.
inline double inner(const GridField& u, const GridField& v) {
  if (!u.same_grid(v)) throw ConfigError("inner: fields on different grids");
  double acc = 0.0;
  const auto& w = u.grid().weights;
  for (std::size_t i = 0; i < u.size(); ++i) acc += w[i] * u[i] * v[i];
  return acc;
}

inline double sup_distance(const GridField& u, const GridField& v) {
  if (u.size() != v.size()) throw ConfigError("sup_distance: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i] - v[i]));
  return m;
}

/// Sup distance over nodes with |x1|, |x2| <= window. Far out in the Gaussian
/// tail the modes reach 1e9 and only relative rounding survives there.
inline double sup_distance(const GridField& u, const GridField& v, double window) {
  if (u.size() != v.size()) throw ConfigError("sup_distance: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Point& p = u.grid().nodes[i];
    if (std::abs(p.x1) > window || std::abs(p.x2) > window) continue;
    m = std::max(m, std::abs(u[i] - v[i]));
  }
  return m;
}

}  // namespace gfou
