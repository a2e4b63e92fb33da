#pragma once

// Zygmund-space norms of rearranged profiles, regularity ratios for the
// fractional Dirichlet problem, and the half-line Green's function
//   G(x, y) = (1/Gamma(s)) int_0^inf [M_t(x, y) - M_t(x, -y)] t^{s-1} dt
// split at c(p) and T(x, y) = max{c(p), log(x^2 + y^2)}.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "gfou/field.hpp"
#include "gfou/gauss.hpp"
#include "gfou/rearrangement.hpp"
#include "gfou/semigroup.hpp"
#include "gfou/spectral.hpp"

namespace gfou {

// ---------------------------------------------------------------------------
// Zygmund norms
// ---------------------------------------------------------------------------

enum class ZygmundVariant { quasi, maximal };

struct ZygmundNorm {
  double p = 2.0;
  double alpha = 0.0;
  double value = 0.0;
  ZygmundVariant variant = ZygmundVariant::quasi;
};

namespace detail {

/// int_a^b (1 - log t)^q g(t) dt in the variable u = 1 - log t, t = e^{1-u}.
/// a = 0 is handled by integrating u over [U(b), U(b) + 60].
template <class G>
double log_weighted_integral(double a, double b, double q, G&& g) {
  if (!(b > a)) return 0.0;
  const double ub = 1.0 - std::log(b);
  const double ua = a > 0.0 ? 1.0 - std::log(a) : ub + 60.0;
  auto integrand = [&](double u) {
    const double t = std::exp(1.0 - u);
    return std::pow(u, q) * g(t) * t;
  };
  return integrate_panels(integrand, ub, ua, 10, 1.0);
}

}  // namespace detail

/// quasi:   (int_0^m [(1 - log t)^alpha u^⊛(t)]^p dt)^{1/p}
/// maximal: the same with u^⊛⊛(t) = (1/t) int_0^t u^⊛.
inline ZygmundNorm zygmund_norm(const RearrangedProfile& prof, double p, double alpha,
                                ZygmundVariant variant = ZygmundVariant::quasi) {
  if (!(p >= 1.0)) throw ConfigError("zygmund_norm: p must be at least 1");
  if (prof.measure() > 1.0 + 1e-12) throw ConfigError("zygmund_norm: profile measure exceeds 1");
  const double q = alpha * p;
  double acc = 0.0, prev = 0.0, cum_prev = 0.0;
  const auto& b = prof.breakpoints();
  const auto& v = prof.values();
  for (std::size_t i = 0; i <= b.size(); ++i) {
    const double right = i < b.size() ? b[i] : prof.measure();
    const double value = i < b.size() ? v[i] : 0.0;
    if (right > prev) {
      if (variant == ZygmundVariant::quasi) {
        if (value != 0.0)
          acc += std::pow(std::abs(value), p) * detail::log_weighted_integral(prev, right, q, [](double) { return 1.0; });
      } else {
        // On this step u^⊛⊛(t) = value + (cum_prev - value * prev) / t.
        const double c = cum_prev - value * prev;
        acc += detail::log_weighted_integral(prev, right, q, [&](double t) { return std::pow(std::abs(value + c / t), p); });
      }
    }
    if (i < b.size()) cum_prev = prof.cumulative()[i];
    prev = std::max(prev, right);
  }
  if (!std::isfinite(acc)) throw NumericalError("zygmund_norm: integral diverged");
  return {p, alpha, std::pow(acc, 1.0 / p), variant};
}

// ---------------------------------------------------------------------------
// Regularity ratios
// ---------------------------------------------------------------------------

struct RatioReport {
  double ratio = 0.0;
  double solution_norm = 0.0;  ///< ||u|| in L^p(log L)^{alpha+s}
  double datum_norm = 0.0;     ///< ||f|| in L^p(log L)^alpha
  double tail_fraction = 0.0;
  bool truncation_warning = false;
};

inline void check_regularity_hypotheses(double measure, double s, double p, double alpha) {
  FractionalParams check(s);
  (void)check;
  if (measure > 0.5 + 1e-12) throw ConfigError("regularity_ratio: needs gamma(Omega) <= 1/2");
  if (!(p >= 2.0)) throw ConfigError("regularity_ratio: needs p >= 2");
  if (p == 2.0 && alpha < -0.5 * s) throw ConfigError("regularity_ratio: needs alpha >= -s/2 at p = 2");
}

/// ||L^{-s} f||_{L^p(log L)^{alpha+s}} / ||f||_{L^p(log L)^alpha}; 0 for f = 0.
inline RatioReport regularity_ratio(const SpectralModel& model, const GridField& f, double s, double p, double alpha) {
  check_regularity_hypotheses(model.domain().measure(), s, p, alpha);
  RatioReport r;
  const SpectralResult u = fractional_apply(model, f, -s);
  r.tail_fraction = u.tail_fraction;
  r.truncation_warning = u.truncation_warning;
  r.datum_norm = zygmund_norm(decreasing_rearrangement(f), p, alpha).value;
  if (r.datum_norm == 0.0) return r;
  r.solution_norm = zygmund_norm(decreasing_rearrangement(u.field), p, alpha + s).value;
  r.ratio = r.solution_norm / r.datum_norm;
  return r;
}

/// Largest ratio over a family of data (the empirical constant).
inline double regularity_constant(const SpectralModel& model, const std::vector<GridField>& data, double s, double p,
                                  double alpha) {
  double best = 0.0;
  for (const auto& f : data) best = std::max(best, regularity_ratio(model, f, s, p, alpha).ratio);
  return best;
}

/// ||u||_{L^2(log L)^{s/2}} / ||u||_{H^s}.
inline double embedding_ratio(const SpectralModel& model, const GridField& u, double s) {
  const double h = hs_norm(model, u, s);
  if (h == 0.0) return 0.0;
  return zygmund_norm(decreasing_rearrangement(u), 2.0, 0.5 * s).value / h;
}

// ---------------------------------------------------------------------------
// Green's function of the half-line
// ---------------------------------------------------------------------------

/// c(p) = max{1, log 4p} + 0.5.
inline double c_of_p(double p) { return std::max(1.0, std::log(4.0 * p)) + 0.5; }

struct GreensKernel {
  double s = 0.5;
  double p = 2.0;
  double c_p = 0.0;

  GreensKernel(double s_, double p_) : s(s_), p(p_), c_p(c_of_p(p_)) {
    FractionalParams check(s_);
    (void)check;
    if (!(p_ >= 1.0)) throw ConfigError("GreensKernel: p must be at least 1");
  }

  double T(double x, double y) const { return std::max(c_p, std::log(x * x + y * y)); }
};

struct GreensValue {
  double G = 0.0;
  double G1 = 0.0;
  double G2 = 0.0;
  double G3 = 0.0;
};

/// Closest approach to the diagonal accepted by greens_kernel_eval.
inline constexpr double kDiagonalExclusion = 1e-3;

namespace detail {

/// M_t(x, y) - M_t(x, -y) in the cancellation-free sinh form.
inline double reflected_mehler(double x, double y, double t) {
  const double om = -std::expm1(-2.0 * t);
  const double e1 = std::exp(-t);
  const double q = e1 * e1 * (x * x + y * y) / (2.0 * om);
  const double z = e1 * x * y / om;
  // exp(-q) sinh(z) with both exponents combined, so small t cannot overflow.
  return (std::exp(z - q) * -std::expm1(-2.0 * z)) / std::sqrt(om);
}

/// (1/Gamma(s)) int_{t0}^{t1} f(t) t^{s-1} dt in tau = log t.
template <class F>
double log_time_integral(F&& f, double s, double t0, double t1, double width = 0.25) {
  if (!(t1 > t0)) return 0.0;
  auto g = [&](double tau) {
    const double t = std::exp(tau);
    return f(t) * std::pow(t, s);
  };
  return integrate_panels(g, std::log(t0), std::log(t1), 16, width) / std::tgamma(s);
}

/// Lower time cutoff: below it exp(-(x-y)^2/(4t)) is under e^{-60}.
inline double time_floor(double x, double y) {
  const double d = std::max(std::abs(x - y), kDiagonalExclusion * 0.5);
  return std::min(1e-3, d * d / 240.0);
}

inline double time_ceiling(double T) { return T + 60.0; }

}  // namespace detail

inline GreensValue greens_kernel_eval(const GreensKernel& k, double x, double y) {
  if (!(x > 0.0 && y > 0.0)) throw std::domain_error("greens_kernel_eval: x and y must be positive");
  if (std::abs(x - y) < kDiagonalExclusion) throw NumericalError("greens_kernel_eval: too close to the diagonal");
  const double T = k.T(x, y);
  const double t0 = detail::time_floor(x, y);
  auto f = [&](double t) { return detail::reflected_mehler(x, y, t); };
  GreensValue g;
  g.G1 = detail::log_time_integral(f, k.s, t0, k.c_p);
  g.G2 = detail::log_time_integral(f, k.s, k.c_p, T);
  g.G3 = detail::log_time_integral(f, k.s, T, detail::time_ceiling(T));
  // Independent single-pass evaluation of the whole integral from the plain
  // kernel difference on a differently spaced rule.
  auto plain = [&](double t) { return mehler_kernel(x, y, t) - mehler_kernel(x, -y, t); };
  g.G = detail::log_time_integral(plain, k.s, t0, detail::time_ceiling(T), 0.2);
  return g;
}

/// Displayed majorant of |G2|: c_s / c(p)^{1-s} * T / (phi(x) phi(y))^{4 e^{-c(p)}}.
inline double g2_majorant(const GreensKernel& k, double x, double y) {
  const FractionalParams fp(k.s);
  const double e = 4.0 * std::exp(-k.c_p);
  return fp.c_s / std::pow(k.c_p, 1.0 - k.s) * k.T(x, y) / std::pow(gauss_density(x) * gauss_density(y), e);
}

/// Explicit uniform bound for |G3|: with z = e^{-t} x y / (1 - e^{-2t}) <= 0.6
/// for t >= T, 2 sinh z <= 2 z cosh(0.6) and (x^2 + y^2) e^{-T} <= 1 give
///   |G3| <= c(p)^{s-1} (1 - e^{-2c(p)})^{-3/2} cosh(0.6) / Gamma(s).
inline double g3_uniform_bound(const GreensKernel& k) {
  return std::pow(k.c_p, k.s - 1.0) * std::pow(-std::expm1(-2.0 * k.c_p), -1.5) * std::cosh(0.6) / std::tgamma(k.s);
}

// ---------------------------------------------------------------------------
// Kernel-route solver on the half-line
// ---------------------------------------------------------------------------

struct KernelSolveOptions {
  int order = 10;             ///< Gauss-Legendre points per panel
  double band = kDiagonalExclusion;
  double y_max = 10.0;
};

/// psi(x_i) = int_0^inf G(x_i, y) h(y) d gamma(y) at the given targets.
///
/// The y-integral avoids the band |y - x| < band, where G behaves like
/// A + B |x - y|^{2s-1} (A + B log|x - y| at s = 1/2); there it is replaced
/// by the integral of that local model, fitted from G at distances band and
/// 2 band, times h(x) phi(x). Outside the band the panels are geometrically
/// graded toward the diagonal.
class KernelSolver {
 public:
  KernelSolver(double s, std::vector<double> targets, const KernelSolveOptions& opt = {})
      : kernel_(s, 2.0), targets_(std::move(targets)), opt_(opt) {
    for (double x : targets_) {
      if (!(x > 2.0 * opt_.band)) throw ConfigError("KernelSolver: targets must exceed twice the band width");
      rows_.push_back(build_row(x));
    }
  }

  const std::vector<double>& targets() const { return targets_; }

  template <class H>
  std::vector<double> apply(H&& h) const {
    std::vector<double> out(targets_.size());
    for (std::size_t i = 0; i < targets_.size(); ++i) {
      const Row& r = rows_[i];
      double acc = r.band_weight * h(targets_[i]);
      for (std::size_t j = 0; j < r.y.size(); ++j) acc += r.w[j] * h(r.y[j]);
      out[i] = acc;
    }
    return out;
  }

 private:
  struct Row {
    std::vector<double> y;
    std::vector<double> w;  ///< includes G(x, y) phi(y) and the panel weight
    double band_weight = 0.0;
  };

  Row build_row(double x) const {
    Row r;
    const double d0 = opt_.band;
    auto add = [&](double a, double b) {
      const PanelRule pr = panel_rule(a, b, opt_.order, kInf);
      for (std::size_t i = 0; i < pr.x.size(); ++i) {
        const double y = pr.x[i];
        r.y.push_back(y);
        r.w.push_back(pr.w[i] * full_g(x, y) * gauss_density(y));
      }
    };
    // Left side: distances from d0 up to x, doubling.
    for (double d = d0; d < x; d *= 2.0) add(std::max(0.0, x - std::min(2.0 * d, x)), x - d);
    // Right side: distances from d0 up to 1, doubling, then unit panels.
    double d = d0;
    for (; d < 1.0 && x + d < opt_.y_max; d *= 2.0) add(x + d, std::min(x + 2.0 * d, opt_.y_max));
    for (double a = x + d; a < opt_.y_max; a += 1.0) add(a, std::min(a + 1.0, opt_.y_max));
    // Band model from symmetric averages at d0 and 2 d0.
    const double s = kernel_.s;
    auto basis = [&](double dist) { return std::abs(s - 0.5) < 1e-12 ? std::log(dist) : std::pow(dist, 2.0 * s - 1.0); };
    auto sym = [&](double dist) { return 0.5 * (full_g(x, x + dist) + full_g(x, x - dist)); };
    const double g1 = sym(d0), g2 = sym(2.0 * d0);
    const double b1 = basis(d0), b2 = basis(2.0 * d0);
    const double B = (g1 - g2) / (b1 - b2);
    const double A = g1 - B * b1;
    const double basis_integral = std::abs(s - 0.5) < 1e-12 ? d0 * (std::log(d0) - 1.0) : std::pow(d0, 2.0 * s) / (2.0 * s);
    r.band_weight = gauss_density(x) * (2.0 * A * d0 + 2.0 * B * basis_integral);
    return r;
  }

  double full_g(double x, double y) const {
    const double T = kernel_.T(x, y);
    auto f = [&](double t) { return detail::reflected_mehler(x, y, t); };
    return detail::log_time_integral(f, kernel_.s, detail::time_floor(x, y), detail::time_ceiling(T), 0.5);
  }

  GreensKernel kernel_;
  std::vector<double> targets_;
  KernelSolveOptions opt_;
  std::vector<Row> rows_;
};

/// Kernel-route solution on the nodes of `grid` (a half-line grid).
template <class H>
GridField solve_by_kernel(H&& h, double s, std::shared_ptr<const Grid> grid, const KernelSolveOptions& opt = {}) {
  std::vector<double> xs;
  for (const auto& n : grid->nodes) xs.push_back(n.x1);
  const KernelSolver solver(s, xs, opt);
  return GridField(std::move(grid), solver.apply(std::forward<H>(h)), "psi_kernel");
}

/// Target grid for kernel solves: Gauss-Legendre panels on (0, x_max] with
/// gamma-weights, `order` points per unit panel.
inline std::shared_ptr<const Grid> kernel_target_grid(int order = 8, double x_max = 8.0) {
  auto g = std::make_shared<Grid>();
  g->dim = 1;
  g->support_measure = interval_measure(0.0, x_max);
  const PanelRule r = panel_rule(0.0, x_max, order, 1.0);
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    g->nodes.push_back({r.x[i], 0.0});
    g->weights.push_back(r.w[i] * gauss_density(r.x[i]));
  }
  return g;
}

}  // namespace gfou
