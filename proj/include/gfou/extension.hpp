#pragma once

// Extension problem for the fractional Dirichlet OU operator: the degenerate
// elliptic field w(x, y) on Omega x (0, inf) with weight y^{1-2s} whose
// boundary value is u and whose weighted Neumann trace is c_s L^s u.
//
// Every field here is modal: w(x, y) = sum_k a_k(y) psi_k(x) over the modes
// of a SpectralModel. The canonical extension has
//   a_k(y) = <u, psi_k> P(sqrt(lambda_k) y),  P(z) = 2^{1-s}/Gamma(s) z^s K_s(z).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "gfou/field.hpp"
#include "gfou/gauss.hpp"
#include "gfou/spectral.hpp"

namespace gfou {

/// Modified Bessel function of the second kind, K_nu(z) for real nu, z > 0,
/// from K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt.
inline double bessel_k(double nu, double z) {
  if (!(z > 0.0)) throw std::domain_error("bessel_k: z must be positive");
  nu = std::abs(nu);
  static const auto gl = gauss_legendre(16);
  constexpr double kWidth = 0.5;
  // For tiny z the integrand stays O(cosh(nu t)) until z cosh t ~ 1.
  const double t_max = std::max(30.0, std::acosh(1.0 + 60.0 / z) + 4.0);
  // Integrate exp(-z (cosh t - 1)) cosh(nu t) and restore exp(-z) at the end.
  auto f = [&](double t) { return std::exp(-z * (std::cosh(t) - 1.0)) * std::cosh(nu * t); };
  double acc = 0.0;
  double peak = 0.0;
  for (double lo = 0.0; lo < t_max; lo += kWidth) {
    const double mid = lo + 0.5 * kWidth;
    double panel = 0.0;
    for (std::size_t k = 0; k < gl.first.size(); ++k) panel += gl.second[k] * f(mid + 0.5 * kWidth * gl.first[k]);
    panel *= 0.5 * kWidth;
    acc += panel;
    peak = std::max(peak, panel);
    // Past the maximum of the integrand the panels decay doubly exponentially.
    if (panel < 1e-18 * acc && z * (std::cosh(lo) - 1.0) > nu * lo) break;
  }
  return std::exp(-z) * acc;
}

/// P(z) = 2^{1-s}/Gamma(s) z^s K_s(z); P(0) = 1.
inline double extension_profile(double s, double z) {
  if (z == 0.0) return 1.0;
  return std::pow(2.0, 1.0 - s) / std::tgamma(s) * std::pow(z, s) * bessel_k(s, z);
}

/// P'(z) = -2^{1-s}/Gamma(s) z^s K_{s-1}(z).
inline double extension_profile_dz(double s, double z) {
  return -std::pow(2.0, 1.0 - s) / std::tgamma(s) * std::pow(z, s) * bessel_k(s - 1.0, z);
}

/// P''(z) = -2^{1-s}/Gamma(s) [z^{s-1} K_{s-1}(z) - z^s K_{s-2}(z)].
inline double extension_profile_dzz(double s, double z) {
  return -std::pow(2.0, 1.0 - s) / std::tgamma(s) *
         (std::pow(z, s - 1.0) * bessel_k(s - 1.0, z) - std::pow(z, s) * bessel_k(s - 2.0, z));
}

/// The extension variable after the change y = 2s z^{1/(2s)}.
inline double y_from_z(double s, double z) { return 2.0 * s * std::pow(z, 1.0 / (2.0 * s)); }

/// Canonical extension of u sampled on a ladder of y-levels.
struct ExtensionField {
  std::shared_ptr<const SpectralModel> base;
  FractionalParams params{0.5};
  Eigen::VectorXd coefficients;  ///< <u, psi_k>
  std::vector<double> y_levels;
  std::vector<GridField> levels;  ///< w(., y_levels[i])
  GridField trace;                ///< w(., 0) = projection of u on the retained modes
  double tail_fraction = 0.0;
  bool truncation_warning = false;

  double lambda(int k) const { return base->eigenvalues()[static_cast<std::size_t>(k)]; }

  /// a_k(y) and its y-derivatives, k 0-based.
  double mode(int k, double y) const {
    return coefficients[k] * extension_profile(params.s, std::sqrt(lambda(k)) * y);
  }
  double mode_dy(int k, double y) const {
    const double r = std::sqrt(lambda(k));
    return coefficients[k] * r * extension_profile_dz(params.s, r * y);
  }
  double mode_dyy(int k, double y) const {
    const double r = std::sqrt(lambda(k));
    return coefficients[k] * r * r * extension_profile_dzz(params.s, r * y);
  }

  /// w(., y) on the model grid.
  GridField at(double y) const {
    Eigen::VectorXd a(coefficients.size());
    for (Eigen::Index k = 0; k < a.size(); ++k) a[k] = mode(static_cast<int>(k), y);
    return base->synthesize(a, "w");
  }
};

/// Extension of u at a single level y >= 0.
inline SpectralResult extend_spectral(const SpectralModel& model, const GridField& u, const FractionalParams& params,
                                      double y) {
  if (y < 0.0) throw std::domain_error("extend_spectral: y must be nonnegative");
  Eigen::VectorXd c = model.coefficients(u);
  const double tail = model.tail_fraction(u, c);
  for (int k = 0; k < model.size(); ++k)
    c[k] *= extension_profile(params.s, std::sqrt(model.eigenvalues()[static_cast<std::size_t>(k)]) * y);
  return {model.synthesize(c, u.label()), tail, tail > kTailWarningFraction};
}

/// Canonical extension of u on the given y-levels.
inline ExtensionField make_extension(std::shared_ptr<const SpectralModel> model, const GridField& u,
                                     const FractionalParams& params, std::vector<double> y_levels) {
  ExtensionField e;
  e.base = std::move(model);
  e.params = params;
  e.coefficients = e.base->coefficients(u);
  e.tail_fraction = e.base->tail_fraction(u, e.coefficients);
  e.truncation_warning = e.tail_fraction > kTailWarningFraction;
  e.trace = e.base->synthesize(e.coefficients, "trace");
  e.y_levels = std::move(y_levels);
  for (double y : e.y_levels) {
    if (!(y > 0.0)) throw std::domain_error("extension levels must be positive");
    e.levels.push_back(e.at(y));
  }
  return e;
}

/// Scalar factor (1/Gamma(s)) int_0^inf exp(-y^2/(4t)) exp(-lambda t) t^{s-1} dt
/// by panel quadrature in tau = log t; `err` receives the difference to the
/// half-resolution rule.
inline double semigroup_extension_factor(double lambda, double s, double y, double* err = nullptr) {
  const double y2 = 0.25 * y * y;
  auto integrand = [&](double tau) {
    const double t = std::exp(tau);
    const double expo = s * tau - lambda * t - (y2 > 0.0 ? y2 / t : 0.0);
    return std::exp(expo);
  };
  double lo = -40.0;
  if (y2 > 0.0) lo = std::max(lo, std::log(y2 / 80.0));
  const double hi = std::log(80.0 / lambda) + 1.0;
  if (!(hi > lo)) return 0.0;
  double tail = 0.0;
  if (y2 == 0.0 || std::log(y2 / 80.0) < -40.0) {
    // Small-t remainder, where exp(-lambda t) ~ 1 - lambda t.
    tail = std::exp(s * lo) / s - lambda * std::exp((s + 1.0) * lo) / (s + 1.0);
  }
  const double fine = integrate_panels(integrand, lo, hi, 16, 0.5);
  if (err) {
    const double coarse = integrate_panels(integrand, lo, hi, 8, 1.0);
    *err = std::abs(fine - coarse) / std::tgamma(s);
  }
  return (fine + tail) / std::tgamma(s);
}

/// (1/Gamma(s)) int_0^inf exp(-y^2/(4t)) e^{-t L_Omega} f dt / t^{1-s}.
/// Throws NumericalError if the estimated quadrature error exceeds 1e-6
/// relative to the largest mode factor.
inline SpectralResult extend_semigroup(const SpectralModel& model, const GridField& f, const FractionalParams& params,
                                       double y) {
  if (y < 0.0) throw std::domain_error("extend_semigroup: y must be nonnegative");
  Eigen::VectorXd c = model.coefficients(f);
  const double tail = model.tail_fraction(f, c);
  double worst = 0.0;
  for (int k = 0; k < model.size(); ++k) {
    const double lam = model.eigenvalues()[static_cast<std::size_t>(k)];
    double err = 0.0;
    const double factor = semigroup_extension_factor(lam, params.s, y, &err);
    worst = std::max(worst, err / std::max(1e-300, std::pow(lam, -params.s)));
    c[k] *= factor;
  }
  if (worst > 1e-6) throw NumericalError("extend_semigroup: t-quadrature did not converge");
  return {model.synthesize(c, f.label()), tail, tail > kTailWarningFraction};
}

/// Ladder y0, y0/2, y0/4 used by neumann_trace.
inline std::vector<double> trace_ladder(double y0 = 1e-2) { return {y0, 0.5 * y0, 0.25 * y0}; }

/// -lim_{y -> 0+} y^a w_y, estimated from the ladder levels of `ext`.
///
/// D(y) = 2s (w(0) - w(y)) / y^{2s} tends to the trace with error terms in
/// y^{2-2s} and y^2; two Richardson steps remove both.
inline GridField neumann_trace(const ExtensionField& ext) {
  if (ext.levels.size() < 3) throw ConfigError("neumann_trace: need three ladder levels");
  const double y0 = ext.y_levels[0];
  if (y0 > 1e-2 + 1e-15) throw ConfigError("neumann_trace: ladder must start at y0 <= 1e-2");
  for (int i = 1; i < 3; ++i)
    if (std::abs(ext.y_levels[i] - y0 / std::pow(2.0, i)) > 1e-12 * y0)
      throw ConfigError("neumann_trace: ladder must be y0, y0/2, y0/4");
  const double s = ext.params.s;
  const std::size_t n = ext.trace.size();
  auto D = [&](int i) {
    std::vector<double> d(n);
    const double scale = 2.0 * s / std::pow(ext.y_levels[i], 2.0 * s);
    for (std::size_t j = 0; j < n; ++j) d[j] = scale * (ext.trace[j] - ext.levels[i][j]);
    return d;
  };
  const auto d1 = D(0), d2 = D(1), d3 = D(2);
  const double r1 = std::pow(2.0, 2.0 - 2.0 * s);
  std::vector<double> out(n), first(n);
  double diff = 0.0, norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double ea = (r1 * d2[j] - d1[j]) / (r1 - 1.0);
    const double eb = (r1 * d3[j] - d2[j]) / (r1 - 1.0);
    out[j] = (4.0 * eb - ea) / 3.0;
    first[j] = eb;
    const double w = ext.trace.grid().weights[j];
    diff += w * (out[j] - eb) * (out[j] - eb);
    norm += w * out[j] * out[j];
  }
  if (norm > 0.0 && std::sqrt(diff / norm) > 0.05) throw NumericalError("neumann_trace: ladder did not converge");
  return GridField(ext.trace.grid_ptr(), std::move(out), "neumann_trace");
}

// ---------------------------------------------------------------------------
// Weighted Dirichlet energy of modal cylinder fields
// ---------------------------------------------------------------------------

/// A modal perturbation xi(x, y) = sum_k b_k(y) psi_k(x); `profile(k, y)`
/// returns (b_k(y), b_k'(y)) for 0-based k.
struct ModalPerturbation {
  std::function<std::pair<double, double>(int, double)> profile;
};

/// Nodes in y = e^tau covering (0, Y] for the weighted energy integral.
struct EnergyQuadrature {
  std::vector<double> y;
  std::vector<double> w;  ///< includes the Jacobian dy = y dtau

  static EnergyQuadrature make(double y_max, double tau_min = -40.0) {
    EnergyQuadrature q;
    const PanelRule r = panel_rule(tau_min, std::log(y_max), 16, 0.5);
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      const double y = std::exp(r.x[i]);
      q.y.push_back(y);
      q.w.push_back(r.w[i] * y);
    }
    return q;
  }
};

/// Cutoff Y such that every canonical mode profile has decayed below 1e-8
/// in energy beyond Y.
inline double energy_cutoff(const ExtensionField& ext) {
  const double lam1 = ext.base->eigenvalues().front();
  return 30.0 / std::sqrt(lam1);
}

namespace detail {
inline double energy_impl(const ExtensionField& ext, double eps, const ModalPerturbation* xi, double y_max,
                          double tau_min = -40.0) {
  const EnergyQuadrature q = EnergyQuadrature::make(y_max, tau_min);
  const double a = ext.params.a;
  double total = 0.0;
  for (int k = 0; k < ext.base->size(); ++k) {
    const double lam = ext.lambda(k);
    const double r = std::sqrt(lam);
    for (std::size_t i = 0; i < q.y.size(); ++i) {
      const double y = q.y[i];
      double v = 0.0, dv = 0.0;
      if (ext.coefficients[k] != 0.0) {
        v = ext.coefficients[k] * extension_profile(ext.params.s, r * y);
        dv = ext.coefficients[k] * r * extension_profile_dz(ext.params.s, r * y);
      }
      if (xi) {
        const auto [b, db] = xi->profile(k, y);
        v += eps * b;
        dv += eps * db;
      }
      total += q.w[i] * std::pow(y, a) * (dv * dv + lam * v * v);
    }
  }
  return total;
}
}  // namespace detail

/// Integral over the cylinder of y^a |grad_{x,y} w|^2 d gamma dy for the
/// canonical extension. The x-gradient part uses the discrete Dirichlet form,
/// under which int |grad_x psi_k|^2 d gamma = lambda_k.
inline double energy(const ExtensionField& ext) {
  const double y_max = energy_cutoff(ext);
  const double e = detail::energy_impl(ext, 0.0, nullptr, y_max);
  // Tail beyond Y: every profile decays like exp(-2 sqrt(lambda_1) y).
  const double tail = detail::energy_impl(ext, 0.0, nullptr, 2.0 * y_max, std::log(y_max));
  if (std::abs(tail) > 1e-8 * std::max(1.0, e)) throw NumericalError("energy: tail budget exceeded");
  return e;
}

/// Energy of w + eps xi, with xi a modal perturbation vanishing at y = 0.
inline double energy(const ExtensionField& ext, double eps, const ModalPerturbation& xi, double y_max = 0.0) {
  return detail::energy_impl(ext, eps, &xi, y_max > 0.0 ? y_max : energy_cutoff(ext));
}

/// ||L^{s/2} u||^2 = sum_k lambda_k^s c_k^2 from the extension's coefficients.
inline double half_power_norm_sq(const ExtensionField& ext) {
  double acc = 0.0;
  for (int k = 0; k < ext.base->size(); ++k) acc += std::pow(ext.lambda(k), ext.params.s) * ext.coefficients[k] * ext.coefficients[k];
  return acc;
}

}  // namespace gfou
