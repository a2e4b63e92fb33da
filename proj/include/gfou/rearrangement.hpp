#pragma once

// Gaussian decreasing rearrangements and the checks built on them.
//
// Discrete fields are rearranged by sorting nodes on |value| (ties broken by
// node index) and accumulating gamma-weights, so u^⊛ is a step function on
// (0, gamma(Omega)]. The derivation-formula checks work instead on smooth
// one-dimensional slices w(., y), where level sets are finite point sets found
// by root bracketing.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

#include "gfou/extension.hpp"
#include "gfou/field.hpp"
#include "gfou/gauss.hpp"

namespace gfou {

/// Nonincreasing step function on (0, measure]: value[i] on (breakpoints[i-1], breakpoints[i]],
/// zero on (breakpoints.back(), measure].
class RearrangedProfile {
 public:
  RearrangedProfile() = default;
  RearrangedProfile(double measure, std::vector<double> breakpoints, std::vector<double> values)
      : measure_(measure), breaks_(std::move(breakpoints)), values_(std::move(values)) {
    if (breaks_.size() != values_.size()) throw ConfigError("RearrangedProfile: size mismatch");
    cumulative_.resize(values_.size());
    double prev = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (breaks_[i] < prev) throw ConfigError("RearrangedProfile: breakpoints must increase");
      if (i > 0 && values_[i] > values_[i - 1]) throw ConfigError("RearrangedProfile: values must not increase");
      acc += values_[i] * (breaks_[i] - prev);
      cumulative_[i] = acc;
      prev = breaks_[i];
    }
    if (!breaks_.empty() && breaks_.back() > measure_ * (1.0 + 1e-12) + 1e-300)
      throw ConfigError("RearrangedProfile: breakpoints exceed the measure");
  }

  /// Step profile from consecutive (width, value) pieces.
  static RearrangedProfile from_steps(double measure, const std::vector<std::pair<double, double>>& steps) {
    std::vector<double> b, v;
    double r = 0.0;
    for (const auto& [width, value] : steps) {
      r += width;
      b.push_back(r);
      v.push_back(value);
    }
    return RearrangedProfile(measure, std::move(b), std::move(v));
  }

  double measure() const { return measure_; }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& cumulative() const { return cumulative_; }

  /// u^⊛(r), left-continuous step evaluation.
  double value_at(double r) const {
    if (r <= 0.0) return values_.empty() ? 0.0 : values_.front();
    const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), r);
    if (it == breaks_.end()) return 0.0;
    return values_[static_cast<std::size_t>(it - breaks_.begin())];
  }

  /// int_0^r u^⊛, exact for the step profile.
  double cumulative_at(double r) const {
    if (r <= 0.0) return 0.0;
    const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), r);
    if (it == breaks_.end()) return cumulative_.empty() ? 0.0 : cumulative_.back();
    const std::size_t i = static_cast<std::size_t>(it - breaks_.begin());
    const double left = i == 0 ? 0.0 : breaks_[i - 1];
    const double base = i == 0 ? 0.0 : cumulative_[i - 1];
    return base + values_[i] * (r - left);
  }

  double integral() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  double lp_norm(double p) const {
    double acc = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      acc += std::pow(std::abs(values_[i]), p) * (breaks_[i] - prev);
      prev = breaks_[i];
    }
    return std::pow(acc, 1.0 / p);
  }

  RearrangedProfile scaled(double c) const {
    std::vector<double> v = values_;
    for (double& x : v) x *= c;
    return RearrangedProfile(measure_, breaks_, std::move(v));
  }

 private:
  double measure_ = 0.0;
  std::vector<double> breaks_;
  std::vector<double> values_;
  std::vector<double> cumulative_;
};

/// gamma({|u| > t}) as the sum of weights of nodes with |value| > t.
inline double distribution_function(const GridField& u, double t) {
  double m = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (std::abs(u[i]) > t) m += u.grid().weights[i];
  return m;
}

inline RearrangedProfile decreasing_rearrangement(const GridField& u) {
  std::vector<std::size_t> order(u.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return std::abs(u[i]) > std::abs(u[j]); });
  std::vector<double> b(u.size()), v(u.size());
  double r = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    r += u.grid().weights[order[k]];
    b[k] = r;
    v[k] = std::abs(u[order[k]]);
  }
  return RearrangedProfile(std::max(u.grid().support_measure, r), std::move(b), std::move(v));
}

/// u^★(x) = u^⊛(Phi(x1)) on the nodes of `grid`.
inline GridField sample_rearranged(const RearrangedProfile& p, std::shared_ptr<const Grid> grid, std::string label = "u_star") {
  return GridField::sample(std::move(grid), [&](const Point& x) { return p.value_at(phi_tail(x.x1)); }, std::move(label));
}

/// The half-space of the same Gaussian measure as the support of u, with u^★ sampled on it.
struct StarField {
  GaussianDomain domain;
  GridField field;
};

inline StarField gaussian_rearrangement_field(const GridField& u, int order = 16) {
  const RearrangedProfile p = decreasing_rearrangement(u);
  GaussianDomain star = GaussianDomain::half_space(phi_inverse(p.measure()), 1);
  auto grid = std::make_shared<const Grid>(build_quadrature(star, order));
  return {star, sample_rearranged(p, grid)};
}

// ---------------------------------------------------------------------------
// Concentration order and Hardy-Littlewood
// ---------------------------------------------------------------------------

struct ConcentrationResult {
  bool holds = true;
  double r = 0.0;        ///< first violation location
  double gap = 0.0;      ///< cumulative excess at the first violation
  double max_gap = 0.0;  ///< largest int_0^r p - int_0^r q over all breakpoints (may be negative)
};

/// Checks int_0^r p <= int_0^r q + tol at every breakpoint of either profile.
inline ConcentrationResult concentration_leq(const RearrangedProfile& p, const RearrangedProfile& q, double tol) {
  if (std::abs(p.measure() - q.measure()) > 1e-10) throw ConfigError("concentration_leq: profiles have different measures");
  std::vector<double> rs = p.breakpoints();
  rs.insert(rs.end(), q.breakpoints().begin(), q.breakpoints().end());
  rs.push_back(p.measure());
  std::sort(rs.begin(), rs.end());
  ConcentrationResult res;
  res.max_gap = -kInf;
  for (double r : rs) {
    const double gap = p.cumulative_at(r) - q.cumulative_at(r);
    res.max_gap = std::max(res.max_gap, gap);
    if (res.holds && gap > tol) {
      res.holds = false;
      res.r = r;
      res.gap = gap;
    }
  }
  return res;
}

/// int_0^m p q for two step profiles, over the merged breakpoints.
inline double profile_product_integral(const RearrangedProfile& p, const RearrangedProfile& q) {
  std::vector<double> rs = p.breakpoints();
  rs.insert(rs.end(), q.breakpoints().begin(), q.breakpoints().end());
  std::sort(rs.begin(), rs.end());
  double acc = 0.0, prev = 0.0;
  for (double r : rs) {
    if (r <= prev) continue;
    const double mid = 0.5 * (prev + r);
    acc += p.value_at(mid) * q.value_at(mid) * (r - prev);
    prev = r;
  }
  return acc;
}

struct HardyLittlewoodResult {
  bool holds = true;
  double lhs = 0.0;  ///< int |u v| d gamma
  double rhs = 0.0;  ///< int u^⊛ v^⊛ dr
};

inline HardyLittlewoodResult hardy_littlewood_check(const GridField& u, const GridField& v, double slack = 1e-8) {
  if (u.size() != v.size()) throw ConfigError("hardy_littlewood_check: fields on different grids");
  HardyLittlewoodResult r;
  for (std::size_t i = 0; i < u.size(); ++i) r.lhs += u.grid().weights[i] * std::abs(u[i] * v[i]);
  r.rhs = profile_product_integral(decreasing_rearrangement(u), decreasing_rearrangement(v));
  r.holds = r.lhs <= r.rhs + slack;
  return r;
}

/// Slice-wise rearrangement of an extension field at each of its y-levels.
inline std::vector<RearrangedProfile> steiner_symmetrize(const ExtensionField& ext) {
  std::vector<RearrangedProfile> out;
  out.reserve(ext.levels.size());
  for (const auto& level : ext.levels) out.push_back(decreasing_rearrangement(level));
  return out;
}

// ---------------------------------------------------------------------------
// Smooth one-dimensional slices and the derivation formulas
// ---------------------------------------------------------------------------

/// A field w(x, y) on an interval (a, b), smooth in both variables.
/// `at(y)` returns an evaluator x -> (w, w_x, w_y, w_yy) for that level.
struct SliceField {
  double a = 0.0;
  double b = kInf;
  std::function<std::function<std::array<double, 4>(double)>(double)> at;
};

/// Slice view of a canonical extension over the analytic half-line basis.
inline SliceField slice_field(const ExtensionField& ext) {
  if (ext.base->basis() != BasisKind::analytic_hermite)
    throw ConfigError("slice_field: needs the analytic half-line basis for pointwise evaluation");
  const auto [a, b] = ext.base->domain().bounds_1d();
  SliceField f;
  f.a = a;
  f.b = b;
  f.at = [ext](double y) {
    const int K = ext.base->size();
    std::vector<double> m(static_cast<std::size_t>(K)), my(m.size()), myy(m.size());
    for (int k = 0; k < K; ++k) {
      if (ext.coefficients[k] == 0.0) continue;
      m[k] = ext.mode(k, y);
      my[k] = ext.mode_dy(k, y);
      myy[k] = ext.mode_dyy(k, y);
    }
    return std::function<std::array<double, 4>(double)>([=](double x) {
      std::vector<double> h, dh;
      OddHermiteBasis::normalized_hermite(2 * K - 1, x, h, dh);
      std::array<double, 4> out{0.0, 0.0, 0.0, 0.0};
      for (int k = 0; k < K; ++k) {
        const double psi = std::numbers::sqrt2 * h[2 * k + 1];
        const double dpsi = std::numbers::sqrt2 * dh[2 * k + 1];
        out[0] += m[k] * psi;
        out[1] += m[k] * dpsi;
        out[2] += my[k] * psi;
        out[3] += myy[k] * psi;
      }
      return out;
    });
  };
  return f;
}

/// Superlevel structure of |w(., y)| at height t.
struct LevelSet {
  std::vector<std::pair<double, double>> intervals;  ///< {|w| > t}
  std::vector<double> points;                        ///< interior points with |w| = t
  double measure = 0.0;
};

namespace detail {

inline constexpr int kSliceSamples = 2000;

inline double slice_upper(const SliceField& f) { return std::min(f.b, kTruncation); }
inline double slice_lower(const SliceField& f) { return std::max(f.a, -kTruncation); }

inline LevelSet level_set(const SliceField& f, const std::function<std::array<double, 4>(double)>& ev, double t) {
  const double lo = slice_lower(f), hi = slice_upper(f);
  const int n = kSliceSamples;
  auto g = [&](double x) { return std::abs(ev(x)[0]) - t; };
  LevelSet L;
  double x_prev = lo, g_prev = g(lo);
  double start = g_prev > 0.0 ? lo : kInf;
  for (int i = 1; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    const double gx = g(x);
    if ((g_prev > 0.0) != (gx > 0.0)) {
      double l = x_prev, r = x;
      const bool rising = gx > 0.0;
      for (int it = 0; it < 100 && r - l > 1e-15 * std::max(1.0, std::abs(r)); ++it) {
        const double mid = 0.5 * (l + r);
        ((g(mid) > 0.0) == rising ? r : l) = mid;
      }
      const double root = 0.5 * (l + r);
      L.points.push_back(root);
      if (rising) start = root;
      else {
        L.intervals.emplace_back(start, root);
        start = kInf;
      }
    }
    x_prev = x;
    g_prev = gx;
  }
  if (start != kInf) L.intervals.emplace_back(start, f.b == kInf ? kInf : hi);
  for (const auto& [l, r] : L.intervals) L.measure += interval_measure(l, r);
  return L;
}

/// int over {|w| > t} of g(x) d gamma, with g from the slice evaluator.
template <class G>
double superlevel_integral(const LevelSet& L, G&& g) {
  double acc = 0.0;
  for (const auto& [l, r0] : L.intervals) {
    const double r = std::min(r0, kTruncation);
    const PanelRule rule = panel_rule(l, r, 20, 0.25);
    for (std::size_t i = 0; i < rule.x.size(); ++i) acc += rule.w[i] * gauss_density(rule.x[i]) * g(rule.x[i]);
  }
  return acc;
}

struct RearrangedLevel {
  double t = 0.0;  ///< w^⊛(r, y)
  LevelSet set;
  bool plateau = false;
};

/// Solves gamma({|w(., y)| > t}) = r for t by bisection.
inline RearrangedLevel rearranged_level(const SliceField& f, const std::function<std::array<double, 4>(double)>& ev, double r) {
  const double lo = slice_lower(f), hi = slice_upper(f);
  double tmax = 0.0;
  for (int i = 0; i <= kSliceSamples; ++i) tmax = std::max(tmax, std::abs(ev(lo + (hi - lo) * i / kSliceSamples)[0]));
  RearrangedLevel out;
  const LevelSet at_zero = level_set(f, ev, 0.0);
  if (r >= at_zero.measure * (1.0 - 1e-14)) {
    out.t = 0.0;
    out.set = at_zero;
    return out;
  }
  double tl = 0.0, th = tmax;  // measure(tl) > r >= measure(th)
  for (int it = 0; it < 200 && th - tl > 1e-15 * tmax; ++it) {
    const double mid = 0.5 * (tl + th);
    (level_set(f, ev, mid).measure > r ? tl : th) = mid;
  }
  out.t = 0.5 * (tl + th);
  out.set = level_set(f, ev, out.t);
  // A jump of the distribution function across t means a plateau {|w| = t}.
  const double jump = level_set(f, ev, tl).measure - level_set(f, ev, th).measure;
  out.plateau = jump > 1e-9;
  for (double x : out.set.points)
    if (std::abs(ev(x)[1]) < 1e-8) out.plateau = true;
  return out;
}

/// int_0^r w^⊛(sigma, y) d sigma.
inline double cumulative_rearranged(const SliceField& f, double y, double r) {
  const auto ev = f.at(y);
  const RearrangedLevel lv = rearranged_level(f, ev, r);
  const double inside = superlevel_integral(lv.set, [&](double x) { return std::abs(ev(x)[0]); });
  return inside + lv.t * (r - lv.set.measure);
}

inline double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace detail

/// Step for the y-differences in the derivation checks.
inline constexpr double kDerivationStep = 1e-3;

struct FirstDerivationResult {
  double lhs = 0.0;  ///< int_{|w| > w^⊛(r,y)} d_y |w| d gamma
  double rhs = 0.0;  ///< d_y int_0^r w^⊛(sigma, y) d sigma
  double residual = 0.0;
  bool inconclusive = false;
};

/// First-order derivation formula at (y, r); the right side by Richardson-refined central differences.
inline FirstDerivationResult first_derivation_check(const SliceField& f, double y, double r) {
  if (!(y > 2.0 * kDerivationStep)) throw ConfigError("first_derivation_check: y too close to 0");
  FirstDerivationResult res;
  const auto ev = f.at(y);
  const auto lv = detail::rearranged_level(f, ev, r);
  res.inconclusive = lv.plateau;
  res.lhs = detail::superlevel_integral(lv.set, [&](double x) {
    const auto v = ev(x);
    return detail::sign_of(v[0]) * v[2];
  });
  const double h = kDerivationStep;
  auto F = [&](double yy) { return detail::cumulative_rearranged(f, yy, r); };
  const double d1 = (F(y + h) - F(y - h)) / (2.0 * h);
  const double d2 = (F(y + 0.5 * h) - F(y - 0.5 * h)) / h;
  res.rhs = (4.0 * d2 - d1) / 3.0;
  res.residual = std::abs(res.lhs - res.rhs);
  return res;
}

inline FirstDerivationResult first_derivation_check(const ExtensionField& ext, double y, double r) {
  return first_derivation_check(slice_field(ext), y, r);
}

struct SecondDerivationResult {
  double lhs = 0.0;          ///< int_{|w| > w^⊛} d_yy |w| d gamma
  double rhs = 0.0;          ///< d_yy int_0^r w^⊛ + correction
  double correction = 0.0;   ///< -sum a_i^2 b_i + (sum a_i b_i)^2 / sum b_i, always <= 0
  double residual = 0.0;
  int level_points = 0;
  bool inconclusive = false;
};

/// Second-order derivation formula in one dimension: level-set integrals
/// become sums over level points x_i with b_i = phi(x_i)/|w_x(x_i)|, a_i = d_y |w|(x_i).
inline SecondDerivationResult second_derivation_check_1d(const SliceField& f, double y, double r) {
  if (!(y > 2.0 * kDerivationStep)) throw ConfigError("second_derivation_check_1d: y too close to 0");
  SecondDerivationResult res;
  const auto ev = f.at(y);
  const auto lv = detail::rearranged_level(f, ev, r);
  res.level_points = static_cast<int>(lv.set.points.size());
  res.inconclusive = lv.plateau || lv.set.points.empty();
  res.lhs = detail::superlevel_integral(lv.set, [&](double x) {
    const auto v = ev(x);
    return detail::sign_of(v[0]) * v[3];
  });
  double sab = 0.0, sa2b = 0.0, sb = 0.0;
  for (double x : lv.set.points) {
    const auto v = ev(x);
    const double b = gauss_density(x) / std::abs(v[1]);
    const double a = detail::sign_of(v[0]) * v[2];
    sab += a * b;
    sa2b += a * a * b;
    sb += b;
  }
  res.correction = sb > 0.0 ? -sa2b + sab * sab / sb : 0.0;
  const double h = kDerivationStep;
  auto F = [&](double yy) { return detail::cumulative_rearranged(f, yy, r); };
  const double f0 = F(y);
  const double dh = (F(y + h) - 2.0 * f0 + F(y - h)) / (h * h);
  const double dh2 = (F(y + 0.5 * h) - 2.0 * f0 + F(y - 0.5 * h)) / (0.25 * h * h);
  res.rhs = (4.0 * dh2 - dh) / 3.0 + res.correction;
  res.residual = std::abs(res.lhs - res.rhs);
  return res;
}

inline SecondDerivationResult second_derivation_check_1d(const ExtensionField& ext, double y, double r) {
  return second_derivation_check_1d(slice_field(ext), y, r);
}

struct SlopeResult {
  double numeric = 0.0;  ///< -d_r w^⊛(r, y) by central differences in r
  double formula = 0.0;  ///< (sum phi(x_i)/|w_x(x_i)|)^{-1}
  double residual = 0.0;
};

/// Derivative of the rearrangement in r against the level-point formula.
inline SlopeResult rearrangement_slope_check(const SliceField& f, double y, double r, double dr = 1e-5) {
  const auto ev = f.at(y);
  const auto lv = detail::rearranged_level(f, ev, r);
  double sb = 0.0;
  for (double x : lv.set.points) sb += gauss_density(x) / std::abs(ev(x)[1]);
  SlopeResult s;
  s.formula = 1.0 / sb;
  s.numeric = -(detail::rearranged_level(f, ev, r + dr).t - detail::rearranged_level(f, ev, r - dr).t) / (2.0 * dr);
  s.residual = std::abs(s.numeric - s.formula);
  return s;
}

}  // namespace gfou
