#pragma once

// Dirichlet eigen-decompositions of the Ornstein-Uhlenbeck operator
// L = -Laplacian + x . grad on a GaussianDomain, and the spectral calculus
// built on them: fractional powers, fractional norms and the Dirichlet
// semigroup.
//
// The operator is discretised in divergence form, -div(phi grad u) = lambda
// phi u, with second-order finite differences. The stiffness matrix A is
// symmetric and the mass matrix is the diagonal of node gamma-weights W, so
// the generalized problem A v = lambda W v is self-adjoint and its
// eigenvectors are orthonormal in the discrete L^2(gamma) inner product.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gfou/field.hpp"
#include "gfou/gauss.hpp"

namespace gfou {

enum class GridGrading {
  uniform,  ///< equally spaced nodes
  graded,   ///< node density 1 + 3 exp(-(x - c)^2 / 2), c the density peak inside the domain
};

enum class BasisKind {
  finite_difference,
  analytic_hermite,  ///< odd Hermite polynomials, (0, inf) only
};

struct SpectralOptions {
  GridGrading grading = GridGrading::uniform;
  BasisKind basis = BasisKind::finite_difference;
  bool full_spectrum = false;  ///< keep every discrete mode (K ignored)
  int analytic_order = 24;     ///< Gauss-Legendre points per unit panel for the analytic basis
};

/// Orthonormal odd probabilists' Hermite functions on the half-line:
/// psi_k = sqrt(2) He_{2k-1} / sqrt((2k-1)!), eigenvalue 2k - 1.
struct OddHermiteBasis {
  /// Values and x-derivatives of the normalised He_0..He_n at x.
  static void normalized_hermite(int n, double x, std::vector<double>& h, std::vector<double>& dh) {
    h.assign(static_cast<std::size_t>(n) + 1, 0.0);
    dh.assign(static_cast<std::size_t>(n) + 1, 0.0);
    h[0] = 1.0;
    if (n >= 1) { h[1] = x; dh[1] = 1.0; }
    for (int m = 1; m < n; ++m)
      h[m + 1] = (x * h[m] - std::sqrt(static_cast<double>(m)) * h[m - 1]) / std::sqrt(m + 1.0);
    for (int m = 1; m <= n; ++m) dh[m] = std::sqrt(static_cast<double>(m)) * h[m - 1];
  }
  static double value(int k, double x) {
    std::vector<double> h, dh;
    normalized_hermite(2 * k - 1, x, h, dh);
    return std::numbers::sqrt2 * h[2 * k - 1];
  }
  static double derivative(int k, double x) {
    std::vector<double> h, dh;
    normalized_hermite(2 * k - 1, x, h, dh);
    return std::numbers::sqrt2 * dh[2 * k - 1];
  }
  static double eigenvalue(int k) { return 2.0 * k - 1.0; }
};

struct SpectralResult {
  GridField field;
  double tail_fraction = 0.0;  ///< ||u - P_K u||^2 / ||u||^2 for the input
  bool truncation_warning = false;
};

inline constexpr double kTailWarningFraction = 0.01;

class SpectralModel {
 public:
  SpectralModel(GaussianDomain domain, std::shared_ptr<const Grid> grid, std::vector<double> eigenvalues,
                Eigen::MatrixXd eigenvectors, Eigen::SparseMatrix<double> stiffness, BasisKind basis, int resolved)
      : domain_(std::move(domain)),
        grid_(std::move(grid)),
        eigenvalues_(std::move(eigenvalues)),
        vectors_(std::move(eigenvectors)),
        stiffness_(std::move(stiffness)),
        basis_(basis),
        resolved_modes_(resolved) {}

  const GaussianDomain& domain() const { return domain_; }
  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  int size() const { return static_cast<int>(eigenvalues_.size()); }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  double eigenvalue(int k) const { return eigenvalues_.at(static_cast<std::size_t>(k - 1)); }
  /// Nodal values, one column per mode.
  const Eigen::MatrixXd& eigenvectors() const { return vectors_; }
  const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }
  BasisKind basis() const { return basis_; }
  /// Number of leading modes sampled by at least ten nodes per oscillation.
  int resolved_modes() const { return resolved_modes_; }

  /// k-th eigenfield, 1-based.
  GridField eigenfield(int k) const {
    std::vector<double> v(grid_->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = vectors_(static_cast<Eigen::Index>(i), k - 1);
    return GridField(grid_, std::move(v), "psi_" + std::to_string(k));
  }

  /// Coefficients <u, psi_k> in L^2(gamma).
  Eigen::VectorXd coefficients(const GridField& u) const {
    check(u);
    Eigen::VectorXd wu(static_cast<Eigen::Index>(u.size()));
    for (std::size_t i = 0; i < u.size(); ++i) wu[static_cast<Eigen::Index>(i)] = grid_->weights[i] * u[i];
    return vectors_.transpose() * wu;
  }

  GridField synthesize(const Eigen::VectorXd& coef, std::string label = {}) const {
    const Eigen::VectorXd v = vectors_ * coef;
    return GridField(grid_, std::vector<double>(v.data(), v.data() + v.size()), std::move(label));
  }

  /// Fraction of ||u||^2 outside the span of the retained modes.
  double tail_fraction(const GridField& u, const Eigen::VectorXd& coef) const {
    const double total = u.l2_norm() * u.l2_norm();
    if (total == 0.0) return 0.0;
    return std::max(0.0, total - coef.squaredNorm()) / total;
  }

  void check(const GridField& u) const {
    if (u.grid_ptr() != grid_ && (u.size() != grid_->size())) throw ConfigError("field does not live on the model grid");
  }

 private:
  GaussianDomain domain_;
  std::shared_ptr<const Grid> grid_;
  std::vector<double> eigenvalues_;
  Eigen::MatrixXd vectors_;
  Eigen::SparseMatrix<double> stiffness_;
  BasisKind basis_;
  int resolved_modes_;
};

namespace detail {

/// Node placement on [a, b] with N interior nodes.
inline std::vector<double> grid_1d(double a, double b, int n, GridGrading grading) {
  std::vector<double> x(static_cast<std::size_t>(n) + 2);
  if (grading == GridGrading::uniform) {
    for (int i = 0; i <= n + 1; ++i) x[i] = a + (b - a) * i / (n + 1.0);
    return x;
  }
  const double c = std::clamp(0.0, a, b);
  constexpr double kappa = 3.0;
  const double root2pi = std::sqrt(2.0 * std::numbers::pi);
  auto cumulative = [&](double t) { return (t - a) + kappa * root2pi * (phi_tail(a - c) - phi_tail(t - c)); };
  const double total = cumulative(b);
  x[0] = a;
  x[n + 1] = b;
  for (int i = 1; i <= n; ++i) {
    const double target = total * i / (n + 1.0);
    double lo = x[i - 1], hi = b;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (cumulative(mid) < target ? lo : hi) = mid;
    }
    x[i] = 0.5 * (lo + hi);
  }
  return x;
}

/// Two-point flux coefficient [integral of 1/phi over (xl, xr)]^{-1}.
inline double flux_coefficient(double xl, double xr) {
  static const auto gl = gauss_legendre(8);
  const double mid = 0.5 * (xl + xr), half = 0.5 * (xr - xl);
  // Integrate exp((x^2 - xm^2)/2) and rescale to avoid overflow.
  const double xm2 = std::max(xl * xl, xr * xr);
  double acc = 0.0;
  for (std::size_t k = 0; k < gl.first.size(); ++k) {
    const double x = mid + half * gl.first[k];
    acc += gl.second[k] * half * std::exp(0.5 * (x * x - xm2));
  }
  // 1/phi = sqrt(2 pi) exp(x^2/2) = sqrt(2 pi) exp(xm2/2) * exp((x^2 - xm2)/2)
  return std::exp(-0.5 * xm2) / (std::sqrt(2.0 * std::numbers::pi) * acc);
}

struct Discretization {
  std::shared_ptr<Grid> grid;
  Eigen::SparseMatrix<double> stiffness;
};

/// Artificial Dirichlet boundary for unbounded finite-difference domains.
/// Nodal values carry a factor w_i^{-1/2} from the symmetric scaling, so the
/// grid must stop where gamma-weights are still far above roundoff; the mass
/// beyond |x| = 10 is below 1e-22.
inline constexpr double kSpectralTruncation = 10.0;

inline Discretization discretize_1d(double a, double b, int n, GridGrading grading) {
  a = std::max(a, -kSpectralTruncation);
  b = std::min(b, kSpectralTruncation);
  if (!(b > a)) throw ConfigError("empty one-dimensional domain after truncation");
  const std::vector<double> x = grid_1d(a, b, n, grading);
  auto g = std::make_shared<Grid>();
  g->dim = 1;
  g->support_measure = interval_measure(a, b);
  g->nodes.resize(static_cast<std::size_t>(n));
  g->weights.resize(static_cast<std::size_t>(n));
  std::vector<double> flux(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) flux[i] = flux_coefficient(x[i], x[i + 1]);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const double left = (i == 1) ? a : 0.5 * (x[i - 1] + x[i]);
    const double right = (i == n) ? b : 0.5 * (x[i] + x[i + 1]);
    g->nodes[i - 1] = {x[i], 0.0};
    g->weights[i - 1] = interval_measure(left, right);
    trip.emplace_back(i - 1, i - 1, flux[i - 1] + flux[i]);
    if (i < n) {
      trip.emplace_back(i - 1, i, -flux[i]);
      trip.emplace_back(i, i - 1, -flux[i]);
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return {g, std::move(A)};
}

inline Discretization discretize_2d(const Grid2dShape& shape) {
  auto g = std::make_shared<Grid>();
  g->dim = 2;
  std::vector<int> index(static_cast<std::size_t>(shape.nx) * shape.ny, -1);
  for (int j = 0; j < shape.ny; ++j)
    for (int i = 0; i < shape.nx; ++i)
      if (shape.inside(i, j)) {
        index[static_cast<std::size_t>(j) * shape.nx + i] = static_cast<int>(g->nodes.size());
        g->nodes.push_back({shape.x0 + i * shape.h, shape.y0 + j * shape.h});
        g->weights.push_back(shape.cell_measure(i, j));
      }
  g->support_measure = g->total_weight();
  const int n = static_cast<int>(g->nodes.size());
  if (n == 0) throw ConfigError("staircase domain has no interior nodes");
  // Face flux between two lattice neighbours: (integral of phi over the shared
  // face) / h, with phi integrated exactly across the face direction.
  auto face = [&](double xa, double ya, double xb, double yb) {
    const double h = shape.h;
    if (ya == yb) {
      const double xm = 0.5 * (xa + xb);
      return gauss_density(xm) * interval_measure(ya - 0.5 * h, ya + 0.5 * h) / h;
    }
    const double ym = 0.5 * (ya + yb);
    return gauss_density(ym) * interval_measure(xa - 0.5 * h, xa + 0.5 * h) / h;
  };
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * static_cast<std::size_t>(n));
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  for (int j = 0; j < shape.ny; ++j)
    for (int i = 0; i < shape.nx; ++i) {
      const int row = index[static_cast<std::size_t>(j) * shape.nx + i];
      if (row < 0) continue;
      const double xa = shape.x0 + i * shape.h, ya = shape.y0 + j * shape.h;
      double diag = 0.0;
      for (int d = 0; d < 4; ++d) {
        const int ii = i + di[d], jj = j + dj[d];
        const double xb = shape.x0 + ii * shape.h, yb = shape.y0 + jj * shape.h;
        const double c = face(xa, ya, xb, yb);
        diag += c;
        if (shape.inside(ii, jj)) trip.emplace_back(row, index[static_cast<std::size_t>(jj) * shape.nx + ii], -c);
      }
      trip.emplace_back(row, row, diag);
    }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return {g, std::move(A)};
}

/// Symmetric scaling C = W^{-1/2} A W^{-1/2}.
inline Eigen::SparseMatrix<double> scaled_operator(const Eigen::SparseMatrix<double>& A, const std::vector<double>& w) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(w.size()));
  for (std::size_t i = 0; i < w.size(); ++i) s[static_cast<Eigen::Index>(i)] = 1.0 / std::sqrt(w[i]);
  Eigen::SparseMatrix<double> C = s.asDiagonal() * A * s.asDiagonal();
  return C;
}

/// Number of eigenvalues of the tridiagonal (d, e) strictly below mu.
inline int sturm_count(const Eigen::VectorXd& d, const Eigen::VectorXd& e, double mu) {
  int count = 0;
  double q = 1.0;
  const double tiny = std::numeric_limits<double>::min() * 1e3;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double off = (i == 0) ? 0.0 : e[i - 1] * e[i - 1] / q;
    q = d[i] - mu - off;
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++count;
  }
  return count;
}

/// Lowest K eigenpairs of a symmetric tridiagonal matrix by bisection and
/// inverse iteration.
inline std::pair<std::vector<double>, Eigen::MatrixXd> tridiagonal_lowest(const Eigen::SparseMatrix<double>& C, int K) {
  const Eigen::Index n = C.rows();
  Eigen::VectorXd d(n), e(std::max<Eigen::Index>(n - 1, 1));
  e.setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    d[i] = C.coeff(i, i);
    if (i + 1 < n) e[i] = C.coeff(i + 1, i);
  }
  double lo = std::numeric_limits<double>::max(), hi = -lo;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < n ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  std::vector<double> values(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) {
    double a = lo, b = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (sturm_count(d, e, mid) > k) b = mid; else a = mid;
      if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mid))) break;
    }
    values[k] = 0.5 * (a + b);
  }
  Eigen::MatrixXd vecs(n, K);
  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  for (int k = 0; k < K; ++k) {
    const double shift = values[k] * (1.0 + 1e-13) + 1e-13;
    Eigen::SparseMatrix<double> M = C - shift * I;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) throw NumericalError("inverse iteration: factorization failed");
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) + 0.01 * Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
    v.normalize();
    for (int it = 0; it < 4; ++it) {
      v = lu.solve(v);
      for (int j = 0; j < k; ++j) v -= vecs.col(j).dot(v) * vecs.col(j);
      v.normalize();
    }
    vecs.col(k) = v;
  }
  return {values, vecs};
}

/// Lowest K eigenpairs of a sparse SPD matrix by shift-invert subspace
/// iteration around 0 with Rayleigh-Ritz projection.
inline std::pair<std::vector<double>, Eigen::MatrixXd> subspace_lowest(const Eigen::SparseMatrix<double>& C, int K) {
  const Eigen::Index n = C.rows();
  const Eigen::Index m = std::min<Eigen::Index>(n, 2 * K + 10);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(C);
  if (ldlt.info() != Eigen::Success) throw NumericalError("subspace iteration: factorization failed");
  Eigen::MatrixXd X(n, m);
  std::uint64_t state = 0x9E3779B97F4A7C15ULL;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      X(i, j) = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
    }
  Eigen::VectorXd ritz = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd V;
  for (int it = 0; it < 500; ++it) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
    Eigen::MatrixXd CQ = C * Q;
    Eigen::MatrixXd H = Q.transpose() * CQ;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
    V = Q * es.eigenvectors();
    const Eigen::VectorXd prev = ritz;
    ritz = es.eigenvalues();
    double change = 0.0;
    for (int k = 0; k < K; ++k) change = std::max(change, std::abs(ritz[k] - prev[k]) / std::abs(ritz[k]));
    if (it > 2 && change < 1e-14) break;
    X = ldlt.solve(V);
  }
  std::vector<double> values(ritz.data(), ritz.data() + K);
  return {values, V.leftCols(K)};
}

}  // namespace detail

/// Dirichlet eigenpairs of the OU operator on `domain`.
///
/// `resolution` is the number of interior nodes for one-dimensional domains
/// (ignored for staircase domains, whose lattice fixes the grid). Throws
/// ConfigError if K exceeds the number of modes the grid resolves with ten
/// nodes per oscillation, unless the full discrete spectrum is requested.
inline SpectralModel build_spectral_model(const GaussianDomain& domain, int K, int resolution,
                                          const SpectralOptions& opt = {}) {
  if (!(domain.measure() < 1.0)) throw ConfigError("Dirichlet domain must have Gaussian measure < 1");
  if (K < 1 && !opt.full_spectrum) throw ConfigError("K must be at least 1");

  if (opt.basis == BasisKind::analytic_hermite) {
    const auto [a, b] = domain.bounds_1d();
    if (a != 0.0 || b != kInf || domain.dim() != 1)
      throw ConfigError("analytic Hermite basis exists only for the half-line (0, inf)");
    auto grid = std::make_shared<Grid>(build_quadrature(domain, opt.analytic_order));
    Eigen::MatrixXd V(static_cast<Eigen::Index>(grid->size()), K);
    std::vector<double> lam(static_cast<std::size_t>(K));
    std::vector<double> h, dh;
    for (std::size_t i = 0; i < grid->size(); ++i) {
      OddHermiteBasis::normalized_hermite(2 * K - 1, grid->nodes[i].x1, h, dh);
      for (int k = 1; k <= K; ++k) V(static_cast<Eigen::Index>(i), k - 1) = std::numbers::sqrt2 * h[2 * k - 1];
    }
    for (int k = 1; k <= K; ++k) lam[k - 1] = OddHermiteBasis::eigenvalue(k);
    // High-degree modes carry mass beyond the truncation point and stop being
    // orthonormal on the quadrature grid.
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(grid->weights.data(), static_cast<Eigen::Index>(grid->size()));
    const Eigen::MatrixXd gram = V.transpose() * w.asDiagonal() * V;
    if ((gram - Eigen::MatrixXd::Identity(K, K)).cwiseAbs().maxCoeff() > 1e-9)
      throw ConfigError("analytic Hermite basis: K = " + std::to_string(K) + " is not orthonormal on the truncated line");
    return SpectralModel(domain, grid, lam, V, {}, BasisKind::analytic_hermite, K);
  }

  detail::Discretization disc;
  if (domain.is_grid2d()) {
    disc = detail::discretize_2d(std::get<Grid2dShape>(domain.kind()));
  } else {
    if (domain.dim() != 1) throw ConfigError("two-dimensional half-spaces have no finite-difference model; use the 1D reduction");
    if (resolution < 8) throw ConfigError("resolution too small");
    const auto [a, b] = domain.bounds_1d();
    disc = detail::discretize_1d(a, b, resolution, opt.grading);
  }
  const int n = static_cast<int>(disc.grid->size());
  // Heuristic: mode k needs about 5 k nodes (ten per oscillation) in 1D, and
  // the analogous count per direction in 2D.
  const int resolved = domain.dim() == 1 ? n / 5 : std::max(1, n / 25);
  if (!opt.full_spectrum && K > resolved)
    throw ConfigError("K = " + std::to_string(K) + " exceeds the " + std::to_string(resolved) +
                      " modes resolved at this resolution");
  const int keep = opt.full_spectrum ? n : K;

  const Eigen::SparseMatrix<double> C = detail::scaled_operator(disc.stiffness, disc.grid->weights);
  std::vector<double> lam;
  Eigen::MatrixXd vecs;
  if (opt.full_spectrum || n <= 400) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(C)};
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    lam.assign(es.eigenvalues().data(), es.eigenvalues().data() + keep);
    vecs = es.eigenvectors().leftCols(keep);
  } else if (domain.dim() == 1) {
    std::tie(lam, vecs) = detail::tridiagonal_lowest(C, keep);
  } else {
    std::tie(lam, vecs) = detail::subspace_lowest(C, keep);
  }
  // Undo the symmetric scaling and fix the sign so that the first nonzero
  // entry of every mode is positive.
  for (int k = 0; k < keep; ++k) {
    for (int i = 0; i < n; ++i) vecs(i, k) /= std::sqrt(disc.grid->weights[static_cast<std::size_t>(i)]);
    double pivot = 0.0;
    for (int i = 0; i < n && pivot == 0.0; ++i)
      if (std::abs(vecs(i, k)) > 1e-8 * vecs.col(k).cwiseAbs().maxCoeff()) pivot = vecs(i, k);
    if (pivot < 0.0) vecs.col(k) *= -1.0;
  }
  return SpectralModel(domain, disc.grid, std::move(lam), std::move(vecs), std::move(disc.stiffness),
                       BasisKind::finite_difference, resolved);
}

/// sum_k lambda_k^sigma <u, psi_k> psi_k.
inline SpectralResult fractional_apply(const SpectralModel& model, const GridField& u, double sigma) {
  Eigen::VectorXd c = model.coefficients(u);
  const double tail = model.tail_fraction(u, c);
  for (int k = 0; k < model.size(); ++k) c[k] *= std::pow(model.eigenvalues()[static_cast<std::size_t>(k)], sigma);
  return {model.synthesize(c, u.label()), tail, tail > kTailWarningFraction};
}

/// (sum_k lambda_k^s |<u, psi_k>|^2)^{1/2}.
inline double hs_norm(const SpectralModel& model, const GridField& u, double s) {
  const Eigen::VectorXd c = model.coefficients(u);
  double acc = 0.0;
  for (int k = 0; k < model.size(); ++k) acc += std::pow(model.eigenvalues()[static_cast<std::size_t>(k)], s) * c[k] * c[k];
  return std::sqrt(acc);
}

/// e^{-t L_Omega} f through the spectral expansion.
inline SpectralResult dirichlet_semigroup(const SpectralModel& model, const GridField& f, double t) {
  if (!(t > 0.0)) throw std::domain_error("dirichlet_semigroup: t must be positive");
  Eigen::VectorXd c = model.coefficients(f);
  const double tail = model.tail_fraction(f, c);
  for (int k = 0; k < model.size(); ++k) c[k] *= std::exp(-t * model.eigenvalues()[static_cast<std::size_t>(k)]);
  return {model.synthesize(c, f.label()), tail, tail > kTailWarningFraction};
}

/// max_k ||A psi_k - lambda_k W psi_k|| / ||W psi_k|| (discrete weak-form residual).
inline double rayleigh_residual(const SpectralModel& model, int k) {
  if (model.stiffness().size() == 0) return 0.0;
  const Eigen::Index n = model.eigenvectors().rows();
  Eigen::VectorXd psi = model.eigenvectors().col(k - 1);
  Eigen::VectorXd Wpsi(n);
  for (Eigen::Index i = 0; i < n; ++i) Wpsi[i] = model.grid().weights[static_cast<std::size_t>(i)] * psi[i];
  const Eigen::VectorXd r = model.stiffness() * psi - model.eigenvalue(k) * Wpsi;
  // Measure the residual in the W^{-1}-norm, i.e. as a discrete L^2(gamma) function.
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = model.grid().weights[static_cast<std::size_t>(i)];
    num += r[i] * r[i] / w;
    den += Wpsi[i] * Wpsi[i] / w;
  }
  return std::sqrt(num / den);
}

/// Largest asymmetry of the assembled operator relative to its largest entry.
inline double operator_symmetry_defect(const SpectralModel& model) {
  const auto& A = model.stiffness();
  if (A.size() == 0) return 0.0;
  const Eigen::SparseMatrix<double> At = A.transpose();
  const Eigen::SparseMatrix<double> D = A - At;
  double dmax = 0.0, amax = 0.0;
  for (int k = 0; k < D.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(D, k); it; ++it) dmax = std::max(dmax, std::abs(it.value()));
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) amax = std::max(amax, std::abs(it.value()));
  return dmax / amax;
}

// ---------------------------------------------------------------------------
// Text serialisation (cache format)
// ---------------------------------------------------------------------------

inline constexpr const char* kModelFormatTag = "# gfou-spectral-model v1";

inline std::string domain_record(const GaussianDomain& d) {
  std::ostringstream os;
  os << std::setprecision(17);
  if (const auto* h = std::get_if<HalfSpace>(&d.kind())) {
    os << "half-space," << h->lambda << "," << d.dim();
  } else if (const auto* i = std::get_if<Interval>(&d.kind())) {
    os << "interval," << i->a << "," << i->b;
  } else {
    const auto& g = std::get<Grid2dShape>(d.kind());
    os << "grid2d," << g.x0 << "," << g.y0 << "," << g.h << "," << g.nx << "," << g.ny << ",";
    for (char c : g.mask) os << (c ? '1' : '0');
  }
  return os.str();
}

inline GaussianDomain parse_domain_record(const std::string& rec) {
  std::vector<std::string> parts;
  std::stringstream ss(rec);
  for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
  if (parts.empty()) throw ConfigError("empty domain record");
  if (parts[0] == "half-space" && parts.size() == 3) return GaussianDomain::half_space(std::stod(parts[1]), std::stoi(parts[2]));
  if (parts[0] == "interval" && parts.size() == 3) return GaussianDomain::interval(std::stod(parts[1]), std::stod(parts[2]));
  if (parts[0] == "grid2d" && parts.size() == 7) {
    Grid2dShape g{std::stod(parts[1]), std::stod(parts[2]), std::stod(parts[3]), std::stoi(parts[4]), std::stoi(parts[5]), {}};
    if (parts[6].size() != static_cast<std::size_t>(g.nx) * g.ny) throw ConfigError("grid2d mask length mismatch");
    for (char c : parts[6]) g.mask.push_back(c == '1' ? 1 : 0);
    return GaussianDomain::grid2d(std::move(g));
  }
  throw ConfigError("unrecognised domain record: " + rec);
}

/// Writes eigenvalues, node grid and eigenvector matrix as CSV blocks.
inline void save_model(const SpectralModel& m, std::ostream& os) {
  os << kModelFormatTag << "\n";
  os << std::setprecision(17);
  os << "# domain=" << domain_record(m.domain()) << "\n";
  os << "# basis=" << (m.basis() == BasisKind::analytic_hermite ? "analytic_hermite" : "finite_difference") << "\n";
  os << "# resolved=" << m.resolved_modes() << "\n";
  os << "# support_measure=" << m.grid().support_measure << "\n";
  os << "[eigenvalues]\nk,lambda\n";
  for (int k = 1; k <= m.size(); ++k) os << k << "," << m.eigenvalue(k) << "\n";
  os << "[nodes]\nx1,x2,weight\n";
  for (std::size_t i = 0; i < m.grid().size(); ++i)
    os << m.grid().nodes[i].x1 << "," << m.grid().nodes[i].x2 << "," << m.grid().weights[i] << "\n";
  os << "[eigenvectors]\nnode";
  for (int k = 1; k <= m.size(); ++k) os << ",psi_" << k;
  os << "\n";
  for (Eigen::Index i = 0; i < m.eigenvectors().rows(); ++i) {
    os << i;
    for (Eigen::Index k = 0; k < m.eigenvectors().cols(); ++k) os << "," << m.eigenvectors()(i, k);
    os << "\n";
  }
}

/// Reads a model written by save_model. The stiffness matrix is not stored,
/// so residual and symmetry diagnostics are unavailable on loaded models.
inline SpectralModel load_model(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kModelFormatTag) throw ConfigError("not a gfou spectral model file");
  std::optional<GaussianDomain> domain;
  BasisKind basis = BasisKind::finite_difference;
  int resolved = 0;
  auto grid = std::make_shared<Grid>();
  std::vector<double> lam;
  std::vector<std::vector<double>> rows;
  std::string section;
  auto split = [](const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(std::stod(p));
    return out;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# domain=", 0) == 0) { domain = parse_domain_record(line.substr(9)); continue; }
    if (line.rfind("# basis=", 0) == 0) { basis = line.substr(8) == "analytic_hermite" ? BasisKind::analytic_hermite : BasisKind::finite_difference; continue; }
    if (line.rfind("# resolved=", 0) == 0) { resolved = std::stoi(line.substr(11)); continue; }
    if (line.rfind("# support_measure=", 0) == 0) { grid->support_measure = std::stod(line.substr(18)); continue; }
    if (line[0] == '#') continue;
    if (line[0] == '[') {
      section = line;
      std::getline(is, line);  // column header
      continue;
    }
    const std::vector<double> v = split(line);
    if (section == "[eigenvalues]") lam.push_back(v.at(1));
    else if (section == "[nodes]") {
      grid->nodes.push_back({v.at(0), v.at(1)});
      grid->weights.push_back(v.at(2));
    } else if (section == "[eigenvectors]") rows.emplace_back(v.begin() + 1, v.end());
  }
  if (!domain) throw ConfigError("model file lacks a domain record");
  grid->dim = domain->dim();
  const auto n = static_cast<Eigen::Index>(grid->size());
  const auto K = static_cast<Eigen::Index>(lam.size());
  if (static_cast<Eigen::Index>(rows.size()) != n) throw ConfigError("model file: eigenvector rows do not match nodes");
  Eigen::MatrixXd V(n, K);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != K) throw ConfigError("model file: ragged eigenvector row");
    for (Eigen::Index k = 0; k < K; ++k) V(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return SpectralModel(*domain, grid, lam, V, {}, basis, resolved);
}

/// Builds a model or reuses a cached copy from `cache_dir` (when non-empty).
inline SpectralModel cached_spectral_model(const GaussianDomain& domain, int K, int resolution, const SpectralOptions& opt,
                                           const std::filesystem::path& cache_dir) {
  if (cache_dir.empty()) return build_spectral_model(domain, K, resolution, opt);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::ostringstream key;
  key << domain_record(domain) << "|" << K << "|" << resolution << "|" << static_cast<int>(opt.grading) << "|"
      << static_cast<int>(opt.basis) << "|" << opt.full_spectrum << "|" << opt.analytic_order;
  for (unsigned char c : key.str()) h = (h ^ c) * 1099511628211ULL;
  std::ostringstream name;
  name << "model-" << std::hex << h << ".csv";
  const auto path = cache_dir / name.str();
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    return load_model(in);
  }
  SpectralModel m = build_spectral_model(domain, K, resolution, opt);
  std::filesystem::create_directories(cache_dir);
  std::ofstream out(path);
  save_model(m, out);
  return m;
}

}  // namespace gfou
