#pragma once

// Comparison between the fractional Dirichlet problem on Omega and its
// Gaussian symmetrization: u = L^{-s} f on Omega against psi = L^{-s} f^★ on
// the half-space of equal measure, compared in the concentration order.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gfou/field.hpp"
#include "gfou/gauss.hpp"
#include "gfou/rearrangement.hpp"
#include "gfou/semigroup.hpp"
#include "gfou/spectral.hpp"

namespace gfou {

/// u = L^{-s} f on the model's domain.
inline SpectralResult solve_problem(const SpectralModel& model, const GridField& f, double s) {
  FractionalParams check(s);
  (void)check;
  return fractional_apply(model, f, -s);
}

struct SymmetrizedSolution {
  std::shared_ptr<const SpectralModel> model;  ///< on Omega^★ = {x1 > Phi^{-1}(measure)}
  GridField datum;                             ///< f^★(x) = f^⊛(Phi(x1))
  SpectralResult solution;
};

struct SymmetrizedOptions {
  int K = 0;  ///< 0 keeps the full discrete spectrum
  int resolution = 512;
  GridGrading grading = GridGrading::graded;
  BasisKind basis = BasisKind::finite_difference;
};

/// Solves the one-dimensional symmetrized problem with datum f^⊛(Phi(x1)).
inline SymmetrizedSolution solve_symmetrized(double omega_measure, const RearrangedProfile& f_star_profile, double s,
                                             const SymmetrizedOptions& opt = {}) {
  FractionalParams check(s);
  (void)check;
  if (!(omega_measure > 0.0 && omega_measure < 1.0)) throw ConfigError("solve_symmetrized: measure must lie in (0,1)");
  const GaussianDomain star = GaussianDomain::half_space(phi_inverse(omega_measure), 1);
  SpectralOptions so;
  so.grading = opt.grading;
  so.basis = opt.basis;
  so.full_spectrum = opt.K == 0 && opt.basis == BasisKind::finite_difference;
  auto model = std::make_shared<const SpectralModel>(build_spectral_model(star, opt.K == 0 ? 1 : opt.K, opt.resolution, so));
  GridField datum = sample_rearranged(f_star_profile, model->grid_ptr(), "f_star");
  SpectralResult sol = fractional_apply(*model, datum, -s);
  sol.field.set_label("psi");
  return {model, std::move(datum), std::move(sol)};
}

enum class Verdict { confirmed, violated };

inline const char* to_string(Verdict v) { return v == Verdict::confirmed ? "confirmed" : "violated-beyond-budget"; }

struct ComparisonConfig {
  int resolution = 512;       ///< interior nodes of the Omega-route 1D grid
  int star_resolution = 512;  ///< interior nodes of the Omega^★-route grid
  int K = 0;                  ///< 0 keeps the full discrete spectrum on both routes
  double calibration = 3.0;
  double floor = 1e-8;
};

struct ComparisonReport {
  std::string domain;
  double s = 0.0;
  std::string datum;
  RearrangedProfile u_profile;
  RearrangedProfile psi_profile;
  double max_gap = 0.0;           ///< max_r int_0^r u^⊛ - int_0^r psi^⊛ (positive = violation)
  double control_gap = 0.0;       ///< |gap| in the equality case at the same resolution
  double tolerance_budget = 0.0;  ///< calibration * control_gap + floor
  double tail_fraction = 0.0;     ///< worst truncation tail over both routes
  bool truncation_warning = false;
  Verdict verdict = Verdict::confirmed;
  ConcentrationResult concentration;
};

namespace detail {

inline SpectralModel omega_model(const GaussianDomain& domain, const ComparisonConfig& cfg, GridGrading grading) {
  SpectralOptions so;
  so.grading = grading;
  so.full_spectrum = cfg.K == 0;
  return build_spectral_model(domain, cfg.K == 0 ? 1 : cfg.K, cfg.resolution, so);
}

/// Largest |int_0^r u^⊛ - int_0^r psi^⊛| when Omega is already the half-space
/// of the given measure and the datum is the rearranged f: the two routes then
/// solve the same problem on different grids.
inline double control_gap(double measure, const RearrangedProfile& f_profile, double s, const ComparisonConfig& cfg) {
  const GaussianDomain star = GaussianDomain::half_space(phi_inverse(measure), 1);
  const SpectralModel m = omega_model(star, cfg, GridGrading::uniform);
  const GridField f = sample_rearranged(f_profile, m.grid_ptr(), "f_star");
  const RearrangedProfile up = decreasing_rearrangement(solve_problem(m, f, s).field);
  SymmetrizedOptions so;
  so.K = cfg.K;
  so.resolution = cfg.star_resolution;
  const auto sym = solve_symmetrized(measure, f_profile, s, so);
  const RearrangedProfile pp = decreasing_rearrangement(sym.solution.field);
  const RearrangedProfile a(measure, up.breakpoints(), up.values());
  const RearrangedProfile b(measure, pp.breakpoints(), pp.values());
  const double forward = concentration_leq(a, b, kInf).max_gap;
  const double backward = concentration_leq(b, a, kInf).max_gap;
  return std::max({0.0, forward, backward});
}

}  // namespace detail

/// Gap of the symmetrized-problem equality control at the given resolution.
inline double comparison_control_gap(double measure, const RearrangedProfile& f_profile, double s, const ComparisonConfig& cfg) {
  return detail::control_gap(measure, f_profile, s, cfg);
}

/// Solves on Omega and Omega^★ and checks u^★ ≺ psi within the calibrated budget.
/// `f` must be nonnegative and live on the grid of `omega_model`.
inline ComparisonReport verify_comparison(const SpectralModel& omega_model, const GridField& f, double s,
                                          const ComparisonConfig& cfg = {}, std::string datum_label = "custom") {
  FractionalParams check(s);
  (void)check;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] < 0.0) throw ConfigError("verify_comparison: datum must be nonnegative");
  ComparisonReport rep;
  rep.domain = omega_model.domain().describe();
  rep.s = s;
  rep.datum = std::move(datum_label);
  const double measure = omega_model.domain().measure();

  const SpectralResult u = solve_problem(omega_model, f, s);
  const RearrangedProfile f_profile = decreasing_rearrangement(f);
  SymmetrizedOptions so;
  so.K = cfg.K;
  so.resolution = cfg.star_resolution;
  const auto sym = solve_symmetrized(measure, f_profile, s, so);

  const RearrangedProfile up = decreasing_rearrangement(u.field);
  const RearrangedProfile pp = decreasing_rearrangement(sym.solution.field);
  rep.u_profile = RearrangedProfile(measure, up.breakpoints(), up.values());
  rep.psi_profile = RearrangedProfile(measure, pp.breakpoints(), pp.values());
  rep.tail_fraction = std::max(u.tail_fraction, sym.solution.tail_fraction);
  rep.truncation_warning = u.truncation_warning || sym.solution.truncation_warning;

  rep.control_gap = detail::control_gap(measure, f_profile, s, cfg);
  rep.tolerance_budget = cfg.calibration * rep.control_gap + cfg.floor;
  // Truncation inflates the budget by the unresolved fraction of the data; it never shrinks it.
  if (rep.truncation_warning) rep.tolerance_budget += std::sqrt(rep.tail_fraction) * rep.psi_profile.integral();
  rep.concentration = concentration_leq(rep.u_profile, rep.psi_profile, rep.tolerance_budget);
  rep.max_gap = rep.concentration.max_gap;
  rep.verdict = rep.max_gap <= rep.tolerance_budget ? Verdict::confirmed : Verdict::violated;
  return rep;
}

/// Convenience overload: builds the Omega model (uniform grid in 1D, the
/// domain's lattice in 2D) and samples f from a callable.
template <class F>
ComparisonReport verify_comparison(const GaussianDomain& domain, F&& f, double s, const ComparisonConfig& cfg = {},
                                   std::string datum_label = "custom") {
  const SpectralModel m = detail::omega_model(domain, cfg, GridGrading::uniform);
  const GridField fg = GridField::sample(m.grid_ptr(), std::forward<F>(f), "f");
  return verify_comparison(m, fg, s, cfg, std::move(datum_label));
}

// ---------------------------------------------------------------------------
// Half-space domination
// ---------------------------------------------------------------------------

struct DominationResult {
  bool holds = true;
  double x = 0.0;    ///< first violating node
  double gap = 0.0;  ///< psi - zeta there
  double max_gap = -kInf;
  double budget = 0.0;
};

struct DominationConfig {
  int resolution = 600;
  double calibration = 3.0;
  double floor = 1e-8;
};

namespace detail {

/// Piecewise-linear interpolation of a 1D grid field (zero outside the nodes,
/// matching the Dirichlet ends).
inline double interpolate_1d(const GridField& f, double x, double left_end) {
  const auto& n = f.grid().nodes;
  if (x <= n.front().x1) {
    const double t = (x - left_end) / (n.front().x1 - left_end);
    return std::max(0.0, t) * f[0];
  }
  if (x >= n.back().x1) return f[f.size() - 1];
  std::size_t lo = 0, hi = n.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (n[mid].x1 <= x ? lo : hi) = mid;
  }
  const double t = (x - n[lo].x1) / (n[hi].x1 - n[lo].x1);
  return (1.0 - t) * f[lo] + t * f[hi];
}

struct HalfLineSolve {
  SpectralModel model;
  GridField solution;
};

inline HalfLineSolve solve_on_half_line(double left, const std::function<double(double)>& datum, double s, int resolution) {
  SpectralOptions so;
  so.full_spectrum = true;
  SpectralModel m = build_spectral_model(GaussianDomain::half_space(left, 1), 1, resolution, so);
  const GridField f = GridField::sample(m.grid_ptr(), datum, "h");
  GridField u = fractional_apply(m, f, -s).field;
  return {std::move(m), std::move(u)};
}

/// Pointwise comparisons stop here: beyond it nodal values of full-spectrum
/// solves carry roundoff amplified by w_i^{-1/2}.
inline constexpr double kPointwiseWindow = 6.0;

inline double max_difference_on(const GridField& psi, const GridField& zeta, double zeta_left, double* where) {
  double best = -kInf;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double x = psi.grid().nodes[i].x1;
    if (x > kPointwiseWindow) break;
    const double d = psi[i] - interpolate_1d(zeta, x, zeta_left);
    if (d > best) {
      best = d;
      if (where) *where = x;
    }
  }
  return best;
}

}  // namespace detail

/// Half-space domination: psi solves the problem on H_omega = {x1 > omega}
/// with datum h^★, zeta solves it on H = {x1 > 0} with h extended by zero;
/// checks psi <= zeta + budget on the nodes of H_omega with x1 <= 6.
inline DominationResult verify_halfspace_domination(double omega, const RearrangedProfile& h_profile, double s,
                                                    const DominationConfig& cfg = {}) {
  FractionalParams check(s);
  (void)check;
  if (!(omega > 0.0)) throw ConfigError("verify_halfspace_domination: omega must be positive");
  auto h = [&](double x) { return x > omega ? h_profile.value_at(phi_tail(x)) : 0.0; };
  const auto psi = detail::solve_on_half_line(omega, h, s, cfg.resolution);
  const auto zeta = detail::solve_on_half_line(0.0, h, s, cfg.resolution);
  // Equality control: the same problem on H solved on the H_omega-type grid
  // (shifted to 0) against the interpolated reference.
  const auto zeta_alt = detail::solve_on_half_line(0.0, h, s, cfg.resolution + cfg.resolution / 3);
  const double control = std::abs(detail::max_difference_on(zeta_alt.solution, zeta.solution, 0.0, nullptr));
  DominationResult r;
  r.budget = cfg.calibration * control + cfg.floor;
  r.max_gap = detail::max_difference_on(psi.solution, zeta.solution, 0.0, &r.x);
  r.gap = r.max_gap;
  r.holds = r.max_gap <= r.budget;
  return r;
}

struct SemigroupDominationResult {
  bool holds = true;
  double min_margin = kInf;  ///< min over nodes of e^{-tL_H} h_bar - e^{-tL_{H_omega}} h
};

/// e^{-t L_H} h_bar >= e^{-t L_{H_omega}} h at `nodes` points of H_omega:
/// the left side by the reflected Mehler kernel, the right side spectrally.
inline SemigroupDominationResult semigroup_domination_check(double omega, const std::function<double(double)>& h, double t,
                                                            int nodes = 20, int resolution = 600, double slack = 1e-6) {
  SpectralOptions so;
  so.full_spectrum = true;
  const SpectralModel m = build_spectral_model(GaussianDomain::half_space(omega, 1), 1, resolution, so);
  const GridField hw = GridField::sample(m.grid_ptr(), h, "h");
  const GridField inner_sg = dirichlet_semigroup(m, hw, t).field;

  // Quadrature of {x1 > 0} with a panel break at omega, where h_bar jumps.
  auto half = std::make_shared<Grid>(build_quadrature(GaussianDomain::interval(0.0, omega), 32));
  const Grid outer_part = build_quadrature(GaussianDomain::half_space(omega, 1), 32);
  half->nodes.insert(half->nodes.end(), outer_part.nodes.begin(), outer_part.nodes.end());
  half->weights.insert(half->weights.end(), outer_part.weights.begin(), outer_part.weights.end());
  half->support_measure = 0.5;
  const GridField hbar = GridField::sample(half, [&](double x) { return x > omega ? h(x) : 0.0; }, "h_bar");
  std::vector<Point> targets;
  for (int i = 0; i < nodes; ++i) targets.push_back({omega + (4.0 - omega) * (i + 0.5) / nodes, 0.0});
  const std::vector<double> outer = apply_halfspace_semigroup_at(hbar, t, targets);

  SemigroupDominationResult r;
  for (int i = 0; i < nodes; ++i) {
    const double in = detail::interpolate_1d(inner_sg, targets[static_cast<std::size_t>(i)].x1, omega);
    r.min_margin = std::min(r.min_margin, outer[static_cast<std::size_t>(i)] - in);
  }
  r.holds = r.min_margin >= -slack;
  return r;
}

}  // namespace gfou
