#include <gtest/gtest.h>

#include <cmath>

#include "gfou/comparison.hpp"

using namespace gfou;

TEST(SolveProblem, InvertsOnModes) {
  const SpectralModel m = build_spectral_model(GaussianDomain::interval(0.5, 2.5), 4, 400);
  const GridField u = solve_problem(m, m.eigenfield(2), 0.4).field;
  GridField ref = m.eigenfield(2);
  ref *= std::pow(m.eigenvalue(2), -0.4);
  EXPECT_LT(sup_distance(u, ref), 1e-10);
  EXPECT_THROW(solve_problem(m, u, 1.2), ConfigError);
}

TEST(Symmetrized, SolvesOnTheRightHalfLine) {
  const auto prof = RearrangedProfile::from_steps(0.2, {{0.2, 1.0}});
  SymmetrizedOptions o;
  o.resolution = 256;
  const auto sym = solve_symmetrized(0.2, prof, 0.5, o);
  EXPECT_NEAR(sym.model->domain().measure(), 0.2, 1e-14);
  for (std::size_t i = 0; i < sym.solution.field.size(); ++i) EXPECT_GE(sym.solution.field[i], -1e-12);
  EXPECT_THROW(solve_symmetrized(1.0, prof, 0.5, o), ConfigError);
}

TEST(Comparison, ControlGapShrinksWithResolution) {
  const auto prof = RearrangedProfile::from_steps(0.3, {{0.3, 1.0}});
  ComparisonConfig a, b;
  a.resolution = a.star_resolution = 256;
  b.resolution = b.star_resolution = 512;
  const double ga = comparison_control_gap(0.3, prof, 0.5, a);
  const double gb = comparison_control_gap(0.3, prof, 0.5, b);
  EXPECT_GT(ga, 0.0);
  EXPECT_LE(gb, 0.5 * ga);
}

TEST(Comparison, IntervalIsConfirmed) {
  ComparisonConfig c;
  c.resolution = c.star_resolution = 256;
  const auto r = verify_comparison(GaussianDomain::interval(1.0, 3.0), [](double) { return 1.0; }, 0.5, c, "one");
  EXPECT_EQ(r.verdict, Verdict::confirmed) << r.max_gap << " vs " << r.tolerance_budget;
  EXPECT_LE(r.max_gap, r.tolerance_budget);
  EXPECT_NEAR(r.u_profile.measure(), GaussianDomain::interval(1.0, 3.0).measure(), 1e-12);
}

TEST(Comparison, EqualityCaseStaysInsideBudget) {
  ComparisonConfig c;
  c.resolution = c.star_resolution = 256;
  const auto r = verify_comparison(GaussianDomain::half_space(0.5), [](double) { return 1.0; }, 0.3, c, "one");
  EXPECT_EQ(r.verdict, Verdict::confirmed);
  EXPECT_LE(std::abs(r.max_gap), r.tolerance_budget);
}

TEST(Comparison, RejectsSignedData) {
  ComparisonConfig c;
  c.resolution = c.star_resolution = 128;
  EXPECT_THROW(verify_comparison(GaussianDomain::interval(0.0, 1.0), [](double x) { return x - 0.5; }, 0.5, c), ConfigError);
}

TEST(Domination, HalfSpaceSolutions) {
  const auto hp = RearrangedProfile::from_steps(phi_tail(0.5), {{phi_tail(0.5), 1.0}});
  const auto d = verify_halfspace_domination(0.5, hp, 0.5);
  EXPECT_TRUE(d.holds) << d.max_gap << " vs " << d.budget;
}

TEST(Domination, Semigroups) {
  for (double t : {0.2, 1.0}) {
    const auto r = semigroup_domination_check(0.5, [](double) { return 1.0; }, t);
    EXPECT_TRUE(r.holds) << t << ": " << r.min_margin;
  }
}
