#pragma once

// Reference solutions that avoid the discretization being measured.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>

#include <Eigen/Core>

#include "fracsde/conv_quadrature.hpp"
#include "fracsde/fem1d.hpp"
#include "fracsde/mittag_leffler.hpp"
#include "fracsde/spectral_noise.hpp"

namespace fracsde {

/// Coefficients c_j against phi_j = sqrt(2) sin(j pi x), j = 1..J.
struct SineExpansion {
  Vector coeffs;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(coeffs.size()); }
  [[nodiscard]] double l2_norm() const { return coeffs.norm(); }
  [[nodiscard]] double operator()(double x) const {
    double v = 0.0;
    for (Eigen::Index j = 0; j < coeffs.size(); ++j)
      v += coeffs(j) * std::numbers::sqrt2 * std::sin(static_cast<double>(j + 1) * std::numbers::pi * x);
    return v;
  }
};

/// Dirichlet eigenvalue (j pi)^2 of -d^2/dx^2 on (0, 1).
inline double laplacian_eigenvalue(std::size_t j) {
  const double jp = static_cast<double>(j) * std::numbers::pi;
  return jp * jp;
}

/// x(1 - x) = sum over odd j of 4 sqrt(2) / (j pi)^3 phi_j.
inline SineExpansion parabola_expansion(std::size_t n_modes) {
  SineExpansion e{Vector::Zero(static_cast<Eigen::Index>(n_modes))};
  for (std::size_t j = 1; j <= n_modes; j += 2) {
    const double jp = static_cast<double>(j) * std::numbers::pi;
    e.coeffs(static_cast<Eigen::Index>(j - 1)) = 4.0 * std::numbers::sqrt2 / (jp * jp * jp);
  }
  return e;
}

/// Exact solution of the noise-free problem: c_j E_alpha(-(j pi)^2 t^alpha).
inline SineExpansion exact_deterministic(const SineExpansion& initial, double alpha, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("exact_deterministic: t must be nonnegative");
  SineExpansion out = initial;
  if (t == 0.0) return out;
  const double ta = std::pow(t, alpha);
  for (Eigen::Index j = 0; j < out.coeffs.size(); ++j)
    if (out.coeffs(j) != 0.0)
      out.coeffs(j) *= mittag_leffler(alpha, laplacian_eigenvalue(static_cast<std::size_t>(j + 1)) * ta);
  return out;
}

/// Per-mode CQ recursion with exact eigenvalues (no spatial error):
///   (g^n - g^{n-1})/tau + (j pi)^2 sum_{i=0}^{n-1} d_i g^{n-i} = f_j^n / tau.
/// `forcing` rows are mode increments (may be empty: no noise); `initial`
/// supplies g^0. Returns the expansion at t_N.
inline SineExpansion spectral_cq_reference(double alpha, double T, std::size_t N, const SineExpansion& initial,
                                           const FgnTrajectory* forcing) {
  if (forcing != nullptr && forcing->n_steps() != N)
    throw std::invalid_argument("spectral reference: trajectory step count differs from N");
  const std::size_t n_modes = std::max(initial.size(), forcing ? forcing->n_modes() : std::size_t{0});
  const auto J = static_cast<Eigen::Index>(n_modes);
  const double tau = T / static_cast<double>(N);
  const CqWeights w = bdf1_weights(1.0 - alpha, tau, N);

  Vector kappa(J);
  for (Eigen::Index j = 0; j < J; ++j) kappa(j) = laplacian_eigenvalue(static_cast<std::size_t>(j + 1));
  const Vector denom = (Vector::Constant(J, 1.0 / tau) + w[0] * kappa).cwiseInverse();

  Vector reversed(static_cast<Eigen::Index>(N + 1));
  for (std::size_t j = 0; j <= N; ++j) reversed(static_cast<Eigen::Index>(j)) = w[N - j];

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(J, static_cast<Eigen::Index>(N + 1));
  g.col(0).head(initial.coeffs.size()) = initial.coeffs;
  Vector rhs(J);
  for (std::size_t n = 1; n <= N; ++n) {
    const auto ni = static_cast<Eigen::Index>(n);
    rhs = g.col(ni - 1) / tau;
    if (n >= 2) {
      const Eigen::Index tail = static_cast<Eigen::Index>(N) - ni + 1;
      rhs -= kappa.cwiseProduct(g.middleCols(1, ni - 1) * reversed.segment(tail, ni - 1));
    }
    if (forcing != nullptr)
      rhs.head(static_cast<Eigen::Index>(forcing->n_modes())) += forcing->increments.col(ni - 1) / tau;
    g.col(ni) = rhs.cwiseProduct(denom);
  }
  return SineExpansion{g.col(static_cast<Eigen::Index>(N))};
}

/// Stochastic reference at T driven by `traj` (zero initial data).
inline SineExpansion spectral_stochastic_reference(double alpha, double T, const FgnTrajectory& traj) {
  return spectral_cq_reference(alpha, T, traj.n_steps(), SineExpansion{Vector::Zero(0)}, &traj);
}

/// ||f_h - g||_{L2}, exact for g in the span of phi_1..phi_J:
/// c^T M c - 2 sum_j g_j (f_h, phi_j) + sum_j g_j^2.
inline double l2_distance(const FemFunction& f, const SineExpansion& g) {
  const double ff = f.coeffs.dot(assemble_mass(f.mesh).apply(f.coeffs));
  double cross = 0.0;
  for (std::size_t j = 1; j <= g.size(); ++j) {
    const double gj = g.coeffs(static_cast<Eigen::Index>(j - 1));
    if (gj != 0.0) cross += gj * mode_load_coefficients(j, f.mesh).dot(f.coeffs);
  }
  const double gg = g.coeffs.squaredNorm();
  return std::sqrt(std::max(0.0, ff - 2.0 * cross + gg));
}

/// Generalized eigenvalues of (K, M) on a uniform mesh:
/// (6/h^2)(1 - cos(j pi h))/(2 + cos(j pi h)), eigenvectors sin(j pi x_i).
inline double discrete_eigenvalue(std::size_t j, const Mesh& mesh) {
  const double h = mesh.h();
  const double c = std::cos(static_cast<double>(j) * std::numbers::pi * h);
  return 6.0 / (h * h) * (1.0 - c) / (2.0 + c);
}

/// Exact solution of the space-discrete, time-continuous noise-free problem
/// at time t, started from `initial`.
inline FemFunction semidiscrete_deterministic(const FemFunction& initial, double alpha, double t) {
  const Mesh& mesh = initial.mesh;
  const auto n = static_cast<Eigen::Index>(mesh.n_interior());
  const TridiagonalMatrix mass = assemble_mass(mesh);
  const Vector m_u0 = mass.apply(initial.coeffs);
  const double ta = std::pow(t, alpha);
  FemFunction out(mesh);
  Vector v(n);
  for (std::size_t j = 1; j < mesh.n_intervals(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i)
      v(i) = std::sin(static_cast<double>(j) * std::numbers::pi * mesh.node(static_cast<std::size_t>(i)));
    const double a = v.dot(m_u0) / v.dot(mass.apply(v));
    if (a == 0.0) continue;
    out.coeffs += a * mittag_leffler(alpha, discrete_eigenvalue(j, mesh) * ta) * v;
  }
  return out;
}

}  // namespace fracsde
