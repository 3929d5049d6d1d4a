#pragma once

// Q-fBm W^H_Q = sum_k sqrt(Lambda_k) phi_k W^H_k with Lambda_k = k^m and
// phi_k = sqrt(2) sin(k pi x), truncated at K modes, and its P1 loads.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fracsde/fem1d.hpp"
#include "fracsde/fgn.hpp"
#include "fracsde/rng.hpp"

namespace fracsde {

struct NoiseSpec {
  double hurst = 0.75;
  double m = 0.0;
  std::size_t K = 1000;

  /// (1 + m) / 4 in one space dimension, taken at equality.
  [[nodiscard]] double theoretical_rho() const { return (1.0 + m) / 4.0; }

  void validate() const {
    if (!(hurst >= 0.5 && hurst < 1.0)) throw std::invalid_argument("hurst must lie in [0.5, 1)");
    if (K < 1) throw std::invalid_argument("mode truncation K must be >= 1");
  }
};

struct Eigenpair {
  double lambda;
  std::size_t k;
  [[nodiscard]] double phi(double x) const {
    return std::numbers::sqrt2 * std::sin(static_cast<double>(k) * std::numbers::pi * x);
  }
};

inline Eigenpair eigenpair(std::size_t k, double m) {
  if (k < 1) throw std::invalid_argument("eigenpair: k must be >= 1");
  return {std::pow(static_cast<double>(k), m), k};
}

/// Row k-1 holds sqrt(Lambda_k) (W^H_k(t_n) - W^H_k(t_{n-1})), n = 1..N.
struct FgnTrajectory {
  Eigen::MatrixXd increments;

  [[nodiscard]] std::size_t n_modes() const { return static_cast<std::size_t>(increments.rows()); }
  [[nodiscard]] std::size_t n_steps() const { return static_cast<std::size_t>(increments.cols()); }
};

/// Reusable per-thread state for sampling many trajectories of one shape.
class TrajectorySampler {
 public:
  TrajectorySampler(const NoiseSpec& spec, std::size_t n_steps, double dt)
      : spec_(spec), fgn_(FgnParams{spec.hurst, n_steps, dt}), sqrt_lambda_(spec.K) {
    spec_.validate();
    for (std::size_t k = 1; k <= spec.K; ++k) sqrt_lambda_[k - 1] = std::sqrt(eigenpair(k, spec.m).lambda);
  }

  [[nodiscard]] FgnTrajectory sample(std::uint64_t master_seed, std::uint64_t trajectory_index) {
    const std::size_t n = fgn_.params().n_steps;
    FgnTrajectory traj{Eigen::MatrixXd(static_cast<Eigen::Index>(spec_.K), static_cast<Eigen::Index>(n))};
    for (std::size_t k = 1; k <= spec_.K; ++k) {
      Stream stream = make_stream(master_seed, trajectory_index, k);
      const auto row = fgn_.sample(stream);
      for (std::size_t j = 0; j < n; ++j)
        traj.increments(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j)) = sqrt_lambda_[k - 1] * row[j];
    }
    return traj;
  }

 private:
  NoiseSpec spec_;
  FgnSampler fgn_;
  std::vector<double> sqrt_lambda_;
};

inline FgnTrajectory sample_trajectory(const NoiseSpec& spec, std::size_t n_steps, double dt,
                                       std::uint64_t master_seed, std::uint64_t trajectory_index) {
  return TrajectorySampler(spec, n_steps, dt).sample(master_seed, trajectory_index);
}

/// Exact (phi_k, chi_j) at every interior node:
/// sqrt(2) sin(k pi x_j) (2 - 2 cos(k pi h)) / (k^2 pi^2 h).
inline Vector mode_load_coefficients(std::size_t k, const Mesh& mesh) {
  const double h = mesh.h();
  const double kp = static_cast<double>(k) * std::numbers::pi;
  // 2 - 2cos(x) = 4 sin^2(x/2) avoids cancellation for small k h
  const double s = std::sin(0.5 * kp * h);
  const double factor = 4.0 * s * s / (kp * kp * h);
  Vector out(static_cast<Eigen::Index>(mesh.n_interior()));
  for (std::size_t j = 0; j < mesh.n_interior(); ++j)
    out(static_cast<Eigen::Index>(j)) = std::numbers::sqrt2 * std::sin(kp * mesh.node(j)) * factor;
  return out;
}

/// Immutable K x (M-1) table of mode loads for one mesh; maps mode
/// increments to FEM load vectors.
class LoadOperator {
 public:
  LoadOperator(std::size_t n_modes, const Mesh& mesh)
      : mesh_(mesh), table_(static_cast<Eigen::Index>(n_modes), static_cast<Eigen::Index>(mesh.n_interior())) {
    for (std::size_t k = 1; k <= n_modes; ++k)
      table_.row(static_cast<Eigen::Index>(k - 1)) = mode_load_coefficients(k, mesh).transpose();
  }

  [[nodiscard]] const Mesh& mesh() const { return mesh_; }
  [[nodiscard]] std::size_t n_modes() const { return static_cast<std::size_t>(table_.rows()); }
  [[nodiscard]] const Eigen::MatrixXd& table() const { return table_; }

  /// Column n-1 is the load b^n of the n-th increment (not divided by tau).
  [[nodiscard]] Eigen::MatrixXd all_loads(const FgnTrajectory& traj) const {
    check(traj);
    return table_.transpose() * traj.increments;
  }

  [[nodiscard]] Vector load(const FgnTrajectory& traj, std::size_t n) const {
    check(traj);
    if (n < 1 || n > traj.n_steps())
      throw std::out_of_range("load_increment: step " + std::to_string(n) + " outside 1.." +
                              std::to_string(traj.n_steps()));
    return table_.transpose() * traj.increments.col(static_cast<Eigen::Index>(n - 1));
  }

 private:
  void check(const FgnTrajectory& traj) const {
    if (traj.n_modes() != n_modes())
      throw std::invalid_argument("LoadOperator: trajectory has " + std::to_string(traj.n_modes()) +
                                  " modes, operator has " + std::to_string(n_modes()));
  }

  Mesh mesh_;
  Eigen::MatrixXd table_;
};

/// b^n_j = sum_k traj(k, n) (phi_k, chi_j), 1 <= n <= N.
inline Vector load_increment(const FgnTrajectory& traj, std::size_t n, const Mesh& mesh) {
  return LoadOperator(traj.n_modes(), mesh).load(traj, n);
}

}  // namespace fracsde
