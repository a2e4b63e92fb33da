#pragma once

// Gaussian-measure primitives: density, tail function, its inverse, the
// isoperimetric profile, domains of finite Gaussian measure and the
// quadrature rules used for every gamma-weighted integral in the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace gfou {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Points with |x| beyond this value carry less than 1e-30 Gaussian mass and
/// are dropped from every unbounded computation.
inline constexpr double kTruncation = 12.0;

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scalar Gaussian functions
// ---------------------------------------------------------------------------

/// Standard normal density (2 pi)^{-1/2} exp(-x^2/2).
inline double gauss_density(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Density of the product measure on R^2.
inline double gauss_density(double x1, double x2) {
  return std::exp(-0.5 * (x1 * x1 + x2 * x2)) / (2.0 * std::numbers::pi);
}

/// Gaussian tail Phi(l) = gamma((l, inf)) on the extended real line.
inline double phi_tail(double lambda) {
  if (lambda == kInf) return 0.0;
  if (lambda == -kInf) return 1.0;
  return 0.5 * std::erfc(lambda / std::numbers::sqrt2);
}

/// Gaussian mass of (a, b).
inline double interval_measure(double a, double b) {
  if (b <= a) return 0.0;
  // Subtract on the side where both tails are small to keep relative accuracy.
  if (a >= 0.0) return phi_tail(a) - phi_tail(b);
  if (b <= 0.0) return phi_tail(-b) - phi_tail(-a);
  return 1.0 - phi_tail(b) - phi_tail(-a);
}

/// Inverse of phi_tail. Returns +inf at 0 and -inf at 1.
///
/// Safeguarded Newton iteration: the bracket [lo, hi] always contains the
/// root and any Newton step leaving it is replaced by bisection.
inline double phi_inverse(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::domain_error("phi_inverse: argument outside [0,1]");
  if (r == 0.0) return kInf;
  if (r == 1.0) return -kInf;
  if (r == 0.5) return 0.0;
  // Work on the upper tail and use symmetry for r > 1/2.
  const bool upper = r < 0.5;
  const double q = upper ? r : 1.0 - r;
  if (!upper && q == 0.0) return -kInf;
  double lo = 0.0;
  double hi = 40.0;
  // Tail asymptotic start: Phi(x) ~ phi(x)/x.
  double x = std::sqrt(-2.0 * std::log(q));
  x = std::clamp(x - std::log(x + 1.0) / std::max(x, 1.0), lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = phi_tail(x) - q;
    if (fx > 0.0) lo = x; else hi = x;
    const double dfx = -gauss_density(x);
    double next = (dfx != 0.0) ? x - fx / dfx : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) {
      x = next;
      break;
    }
    x = next;
  }
  return upper ? x : -x;
}

/// Gaussian isoperimetric profile I(r) = phi(Phi^{-1}(r)); zero at r in {0,1}.
inline double isoperimetric_profile(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::domain_error("isoperimetric_profile: argument outside [0,1]");
  if (r == 0.0 || r == 1.0) return 0.0;
  return gauss_density(phi_inverse(r));
}

// ---------------------------------------------------------------------------
// Fractional parameters
// ---------------------------------------------------------------------------

struct FractionalParams {
  double s;
  double a;    ///< 1 - 2s, exponent of the extension weight y^a
  double c_s;  ///< Gamma(1-s) / (4^{s-1/2} Gamma(s))

  explicit FractionalParams(double s_) : s(s_), a(1.0 - 2.0 * s_), c_s(0.0) {
    if (!(s > 0.0 && s < 1.0)) throw ConfigError("fractional order s must lie in (0,1)");
    c_s = std::tgamma(1.0 - s) / (std::pow(4.0, s - 0.5) * std::tgamma(s));
  }
};

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

/// {x : x1 > lambda} in dimension 1 or 2.
struct HalfSpace {
  double lambda = 0.0;
};

/// (a, b) on the line; b may be +inf.
struct Interval {
  double a = 0.0;
  double b = kInf;
};

/// Staircase subset of a uniform lattice in the plane: node (i, j) sits at
/// (x0 + i h, y0 + j h) and owns the cell of side h around it.
struct Grid2dShape {
  double x0 = 0.0;
  double y0 = 0.0;
  double h = 0.1;
  int nx = 0;
  int ny = 0;
  std::vector<char> mask;  ///< row-major (j * nx + i), nonzero = inside

  bool inside(int i, int j) const {
    return i >= 0 && j >= 0 && i < nx && j < ny && mask[static_cast<std::size_t>(j) * nx + i] != 0;
  }
  double cell_measure(int i, int j) const {
    const double cx = x0 + i * h;
    const double cy = y0 + j * h;
    return interval_measure(cx - 0.5 * h, cx + 0.5 * h) * interval_measure(cy - 0.5 * h, cy + 0.5 * h);
  }
};

class GaussianDomain {
 public:
  using Kind = std::variant<HalfSpace, Interval, Grid2dShape>;

  static GaussianDomain half_space(double lambda, int dim = 1) {
    return GaussianDomain(HalfSpace{lambda}, dim);
  }
  static GaussianDomain interval(double a, double b) {
    if (!(b > a)) throw ConfigError("interval domain needs a < b");
    return GaussianDomain(Interval{a, b}, 1);
  }
  /// Builds a staircase domain from an indicator on the box [x0, x0+(nx-1)h] x [y0, ...].
  template <class Indicator>
  static GaussianDomain grid2d(double x0, double y0, double h, int nx, int ny, Indicator&& inside) {
    Grid2dShape g{x0, y0, h, nx, ny, std::vector<char>(static_cast<std::size_t>(nx) * ny, 0)};
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        g.mask[static_cast<std::size_t>(j) * nx + i] = inside(x0 + i * h, y0 + j * h) ? 1 : 0;
    return GaussianDomain(std::move(g), 2);
  }
  static GaussianDomain grid2d(Grid2dShape shape) { return GaussianDomain(std::move(shape), 2); }

  const Kind& kind() const { return kind_; }
  int dim() const { return dim_; }
  double measure() const { return measure_; }

  bool is_half_space() const { return std::holds_alternative<HalfSpace>(kind_); }
  bool is_interval() const { return std::holds_alternative<Interval>(kind_); }
  bool is_grid2d() const { return std::holds_alternative<Grid2dShape>(kind_); }

  /// Left and right ends of a one-dimensional domain (half-spaces are (lambda, inf)).
  std::pair<double, double> bounds_1d() const {
    if (const auto* h = std::get_if<HalfSpace>(&kind_)) return {h->lambda, kInf};
    if (const auto* i = std::get_if<Interval>(&kind_)) return {i->a, i->b};
    throw ConfigError("domain is not one-dimensional");
  }

  std::string describe() const;

 private:
  GaussianDomain(Kind k, int dim) : kind_(std::move(k)), dim_(dim) {
    if (dim_ != 1 && dim_ != 2) throw ConfigError("only dimensions 1 and 2 are supported");
    measure_ = compute_measure();
  }

  double compute_measure() const {
    if (const auto* h = std::get_if<HalfSpace>(&kind_)) return phi_tail(h->lambda);
    if (const auto* i = std::get_if<Interval>(&kind_)) return interval_measure(i->a, i->b);
    const auto& g = std::get<Grid2dShape>(kind_);
    double m = 0.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (g.inside(i, j)) m += g.cell_measure(i, j);
    return m;
  }

  Kind kind_;
  int dim_;
  double measure_ = 0.0;
};

inline std::string GaussianDomain::describe() const {
  if (const auto* h = std::get_if<HalfSpace>(&kind_))
    return "half-space(lambda=" + std::to_string(h->lambda) + ",dim=" + std::to_string(dim_) + ")";
  if (const auto* i = std::get_if<Interval>(&kind_))
    return "interval(" + std::to_string(i->a) + "," + std::to_string(i->b) + ")";
  const auto& g = std::get<Grid2dShape>(kind_);
  return "grid2d(" + std::to_string(g.nx) + "x" + std::to_string(g.ny) + ",h=" + std::to_string(g.h) + ")";
}

// ---------------------------------------------------------------------------
// Node sets and quadrature
// ---------------------------------------------------------------------------

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

/// Nodes with gamma-weights. Both quadrature rules and finite-difference
/// grids are represented this way so that fields on either share one type.
struct Grid {
  int dim = 1;
  std::vector<Point> nodes;
  std::vector<double> weights;
  double support_measure = 0.0;  ///< gamma of the region the nodes represent

  std::size_t size() const { return nodes.size(); }
  double total_weight() const {
    double t = 0.0;
    for (double w : weights) t += w;
    return t;
  }
};

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the three-term recurrence).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  if (n < 1) throw ConfigError("gauss_legendre: n must be positive");
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) { p1 = z; p0 = 1.0; }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n == 1) { x[0] = 0.0; w[0] = 2.0; }
  return {x, w};
}

/// Composite Gauss-Legendre rule: nodes and Lebesgue weights on [a, b] split
/// into panels no wider than max_width, `order` points per panel.
struct PanelRule {
  std::vector<double> x;
  std::vector<double> w;
};

inline PanelRule panel_rule(double a, double b, int order, double max_width) {
  PanelRule r;
  if (!(b > a)) return r;
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / max_width - 1e-12)));
  const auto [gx, gw] = gauss_legendre(order);
  const double width = (b - a) / panels;
  r.x.reserve(static_cast<std::size_t>(panels) * order);
  r.w.reserve(static_cast<std::size_t>(panels) * order);
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double mid = lo + 0.5 * width;
    for (int k = 0; k < order; ++k) {
      r.x.push_back(mid + 0.5 * width * gx[k]);
      r.w.push_back(0.5 * width * gw[k]);
    }
  }
  return r;
}

/// Integrates f over [a, b] with a composite Gauss-Legendre rule.
template <class F>
double integrate_panels(F&& f, double a, double b, int order, double max_width) {
  const PanelRule r = panel_rule(a, b, order, max_width);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) acc += r.w[i] * f(r.x[i]);
  return acc;
}

using QuadratureRule = Grid;

/// Gamma-weighted quadrature on a one- or two-dimensional domain.
///
/// One-dimensional supports are truncated to |x| <= 12 and covered by
/// unit-width Gauss-Legendre panels with `order` points each, weighted by the
/// explicit density. Two-dimensional half-spaces use the tensor product of
/// the one-dimensional rules; staircase domains reuse their cell measures.
inline QuadratureRule build_quadrature(const GaussianDomain& domain, int order) {
  if (order < 2) throw ConfigError("quadrature order must be at least 2");
  QuadratureRule q;
  q.dim = domain.dim();
  q.support_measure = domain.measure();

  auto line_rule = [order](double a, double b) {
    a = std::max(a, -kTruncation);
    b = std::min(b, kTruncation);
    PanelRule r = panel_rule(a, b, order, 1.0);
    for (std::size_t i = 0; i < r.x.size(); ++i) r.w[i] *= gauss_density(r.x[i]);
    return r;
  };

  if (domain.is_grid2d()) {
    const auto& g = std::get<Grid2dShape>(domain.kind());
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (g.inside(i, j)) {
          q.nodes.push_back({g.x0 + i * g.h, g.y0 + j * g.h});
          q.weights.push_back(g.cell_measure(i, j));
        }
    return q;
  }

  double a = -kInf, b = kInf;
  if (const auto* h = std::get_if<HalfSpace>(&domain.kind())) a = h->lambda;
  if (const auto* iv = std::get_if<Interval>(&domain.kind())) { a = iv->a; b = iv->b; }
  const PanelRule r1 = line_rule(a, b);
  if (domain.dim() == 1) {
    for (std::size_t i = 0; i < r1.x.size(); ++i) {
      q.nodes.push_back({r1.x[i], 0.0});
      q.weights.push_back(r1.w[i]);
    }
    return q;
  }
  const PanelRule r2 = line_rule(-kInf, kInf);
  for (std::size_t j = 0; j < r2.x.size(); ++j)
    for (std::size_t i = 0; i < r1.x.size(); ++i) {
      q.nodes.push_back({r1.x[i], r2.x[j]});
      q.weights.push_back(r1.w[i] * r2.w[j]);
    }
  return q;
}

/// Full-space rule (the whole line or plane).
inline QuadratureRule build_full_space_quadrature(int dim, int order) {
  QuadratureRule q = build_quadrature(GaussianDomain::half_space(-kInf, dim), order);
  q.support_measure = 1.0;
  return q;
}

}  // namespace gfou
