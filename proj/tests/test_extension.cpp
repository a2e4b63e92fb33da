#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gfou/extension.hpp"

using namespace gfou;

namespace {
std::shared_ptr<const SpectralModel> hermite_model(int K) {
  SpectralOptions an;
  an.basis = BasisKind::analytic_hermite;
  return std::make_shared<const SpectralModel>(build_spectral_model(GaussianDomain::half_space(0.0), K, 0, an));
}
}  // namespace

TEST(BesselK, HighPrecisionValues) {
  // mpmath reference values.
  EXPECT_NEAR(bessel_k(0.3, 0.7) / 0.68956248975697506, 1.0, 1e-13);
  EXPECT_NEAR(bessel_k(1.2, 2.5) / 0.079569622056138426, 1.0, 1e-13);
  EXPECT_NEAR(bessel_k(0.75, 1e-3) / 183.23463852175822, 1.0, 1e-13);
  EXPECT_NEAR(bessel_k(-0.6, 12.0) / 2.2327966779473750e-6, 1.0, 1e-12);
  // Half-integer order closes.
  for (double z : {0.01, 1.0, 7.5}) EXPECT_NEAR(bessel_k(0.5, z) / (std::sqrt(std::numbers::pi / (2.0 * z)) * std::exp(-z)), 1.0, 1e-14);
  EXPECT_THROW(bessel_k(0.5, 0.0), std::domain_error);
}

TEST(ExtensionProfile, ValuesAndLimits) {
  EXPECT_NEAR(extension_profile(0.3, 0.8), 0.29852518334204896, 1e-14);
  for (double z : {0.1, 1.0, 4.0}) EXPECT_NEAR(extension_profile(0.5, z), std::exp(-z), 1e-14);
  EXPECT_NEAR(extension_profile(0.7, 1e-9), 1.0, 1e-6);
  // Derivatives against central differences.
  for (double s : {0.25, 0.6}) {
    const double z = 1.3, h = 1e-5;
    EXPECT_NEAR(extension_profile_dz(s, z), (extension_profile(s, z + h) - extension_profile(s, z - h)) / (2 * h), 1e-8);
    EXPECT_NEAR(extension_profile_dzz(s, z), (extension_profile_dz(s, z + h) - extension_profile_dz(s, z - h)) / (2 * h), 1e-7);
  }
}

// Deep in the y -> 0 limit the cosh integral runs far past t = 30.
TEST(ExtensionProfile, TinyArgument) {
  // mpmath, 30 digits: 1 - P(z) and P'(z).
  EXPECT_NEAR(1.0 - extension_profile(0.25, 1e-13), 3.023e-7, 1e-10);
  EXPECT_NEAR(1.0 - extension_profile(0.25, 1e-17), 3.023e-9, 1e-12);
  EXPECT_NEAR(extension_profile_dz(0.25, 1e-17) / -1.512e8, 1.0, 1e-3);
  EXPECT_NEAR(extension_profile(0.5, 1e-15), 1.0, 1e-14);
  EXPECT_NEAR(extension_profile_dz(0.5, 1e-15), -1.0, 1e-12);
  EXPECT_NEAR(extension_profile_dz(0.75, 1e-13) / -6.616e-7, 1.0, 1e-3);
}

TEST(ExtensionSpectral, HalfOrderClosedForm) {
  const auto m = hermite_model(6);
  const GridField u = m->eigenfield(1) + m->eigenfield(3);
  const double y = 0.4;
  const GridField w = extend_spectral(*m, u, FractionalParams(0.5), y).field;
  // Reference sum over the quadrature inner products <u, psi_k>.
  Eigen::VectorXd c = m->coefficients(u);
  for (int k = 0; k < m->size(); ++k) c[k] *= std::exp(-std::sqrt(m->eigenvalue(k + 1)) * y);
  EXPECT_LT(sup_distance(w, m->synthesize(c)), 1e-9);
  EXPECT_NEAR(c[0], std::exp(-y), 1e-12);
  EXPECT_NEAR(c[2], std::exp(-std::sqrt(5.0) * y), 1e-12);
  EXPECT_THROW(extend_spectral(*m, u, FractionalParams(0.5), -1.0), std::domain_error);
}

TEST(ExtensionSemigroup, FactorMatchesIntegral) {
  // (1/Gamma(s)) int exp(-y^2/4t) exp(-lambda t) t^{s-1} dt at s=0.4, lambda=3, y=0.6 (mpmath).
  double err = 0.0;
  EXPECT_NEAR(semigroup_extension_factor(3.0, 0.4, 0.6, &err), 0.18840637442990872, 1e-12);
  EXPECT_LT(err, 1e-6);
  // y -> 0 recovers lambda^{-s}.
  EXPECT_NEAR(semigroup_extension_factor(3.0, 0.4, 0.0), std::pow(3.0, -0.4), 1e-12);
}

TEST(ExtensionSemigroup, RouteEquivalence) {
  const auto m = hermite_model(8);
  const GridField f = m->eigenfield(1) + m->eigenfield(2);
  for (double s : {0.3, 0.7}) {
    const FractionalParams P(s);
    const GridField a = extend_semigroup(*m, f, P, 0.7).field;
    const GridField b = extend_spectral(*m, fractional_apply(*m, f, -s).field, P, 0.7).field;
    EXPECT_LT((a - b).l2_norm() / b.l2_norm(), 1e-5) << s;
  }
}

TEST(NeumannTrace, RecoversFractionalPower) {
  const auto m = hermite_model(6);
  const GridField u = m->eigenfield(1) + m->eigenfield(2);
  for (double s : {0.25, 0.5, 0.75}) {
    const FractionalParams P(s);
    const ExtensionField e = make_extension(m, u, P, trace_ladder());
    GridField ref = fractional_apply(*m, u, s).field;
    ref *= P.c_s;
    EXPECT_LT((neumann_trace(e) - ref).l2_norm() / ref.l2_norm(), 0.02) << s;
  }
}

TEST(NeumannTrace, RejectsBadLadder) {
  const auto m = hermite_model(3);
  const ExtensionField e = make_extension(m, m->eigenfield(1), FractionalParams(0.5), {0.1, 0.2});
  EXPECT_THROW(neumann_trace(e), ConfigError);
}

TEST(Energy, IdentityAndMinimality) {
  const auto m = hermite_model(6);
  const GridField u = m->eigenfield(1) + m->eigenfield(2);
  for (double s : {0.3, 0.6}) {
    const FractionalParams P(s);
    const ExtensionField e = make_extension(m, u, P, {});
    const double E = energy(e);
    EXPECT_NEAR(E / (P.c_s * half_power_norm_sq(e)), 1.0, 1e-2) << s;
    // Perturbations vanishing at y = 0 raise the energy.
    ModalPerturbation xi;
    xi.profile = [](int k, double y) { return std::pair<double, double>{k == 0 ? y * std::exp(-y) : 0.0, k == 0 ? (1.0 - y) * std::exp(-y) : 0.0}; };
    EXPECT_GT(energy(e, 0.1, xi), E);
    EXPECT_GT(energy(e, -0.1, xi), E);
  }
}
