#pragma once

// Fully discrete scheme: backward-Euler CQ in time, P1 FEM in space.
//
//   M (u^n - u^{n-1}) / tau + sum_{i=0}^{n-1} d_i K u^{n-i} = b^n / tau,
//
// d_i the CQ weights of order 1 - alpha, b^n the load of the noise
// increment over (t_{n-1}, t_n], u^0 = P_h G_0.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "fracsde/conv_quadrature.hpp"
#include "fracsde/fem1d.hpp"
#include "fracsde/spectral_noise.hpp"

namespace fracsde {

struct SolverConfig {
  double alpha = 0.5;
  double T = 0.01;
  std::size_t N = 1;
  Mesh mesh{2};
  std::optional<FemFunction> initial_data;  // zero when absent

  [[nodiscard]] double tau() const { return T / static_cast<double>(N); }

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(T > 0.0)) throw std::invalid_argument("final time T must be positive");
    if (N < 1) throw std::invalid_argument("N must be >= 1");
    if (initial_data && !(initial_data->mesh == mesh))
      throw std::invalid_argument("initial data lives on a different mesh");
  }
};

/// Weights matching a config: beta = 1 - alpha, tau = T/N.
inline CqWeights weights_for(const SolverConfig& config) {
  return bdf1_weights(1.0 - config.alpha, config.tau(), config.N);
}

/// States u^0 .. u^N as the columns of one matrix.
struct SolutionHistory {
  Mesh mesh;
  Eigen::MatrixXd states;  // (M-1) x (N+1)
  std::size_t filled = 0;

  [[nodiscard]] std::size_t size() const { return filled; }
  [[nodiscard]] FemFunction state(std::size_t n) const {
    if (n >= filled) throw std::out_of_range("SolutionHistory: state " + std::to_string(n) + " not computed");
    return FemFunction(mesh, states.col(static_cast<Eigen::Index>(n)));
  }
  [[nodiscard]] FemFunction final_state() const { return state(filled - 1); }
  [[nodiscard]] bool all_finite() const {
    return states.leftCols(static_cast<Eigen::Index>(filled)).allFinite();
  }
};

/// M / tau + d_0 K, the matrix solved at every step.
inline TridiagonalMatrix step_operator(const SolverConfig& config, const CqWeights& weights) {
  return TridiagonalMatrix::combine(1.0 / config.tau(), assemble_mass(config.mesh), weights[0],
                                    assemble_stiffness(config.mesh));
}

inline TridiagonalFactorization step_matrix(const SolverConfig& config, const CqWeights& weights) {
  return TridiagonalFactorization(step_operator(config, weights));
}

class Stepper {
 public:
  Stepper(const SolverConfig& config, const CqWeights& weights)
      : config_(config),
        mass_(assemble_mass(config.mesh)),
        stiffness_(assemble_stiffness(config.mesh)),
        factor_(checked_step_matrix(config, weights)),
        reversed_(static_cast<Eigen::Index>(weights.size())) {
    const auto len = static_cast<Eigen::Index>(weights.size());
    for (Eigen::Index j = 0; j < len; ++j) reversed_(j) = weights[static_cast<std::size_t>(len - 1 - j)];
  }

  [[nodiscard]] SolutionHistory start() const {
    const auto dim = static_cast<Eigen::Index>(config_.mesh.n_interior());
    SolutionHistory h{config_.mesh, Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(config_.N + 1)), 1};
    if (config_.initial_data) h.states.col(0) = config_.initial_data->coeffs;
    return h;
  }

  /// Computes u^n from u^0..u^{n-1} and appends it. `load` is b^n (not
  /// divided by tau); pass nullptr for the homogeneous problem.
  const SolutionHistory& advance(SolutionHistory& history, const Vector* load) {
    const std::size_t n = history.filled;
    if (n < 1 || n > config_.N) throw std::out_of_range("Stepper::advance: history is full or empty");
    const double inv_tau = 1.0 / config_.tau();
    const auto ni = static_cast<Eigen::Index>(n);

    rhs_ = history.states.col(ni - 1);
    mass_.apply_into(rhs_, work_);
    rhs_ = inv_tau * work_;
    if (n >= 2) {
      // sum_{i=1}^{n-1} d_i u^{n-i}, with u^1..u^{n-1} against d_{n-1}..d_1
      const Eigen::Index tail = static_cast<Eigen::Index>(config_.N) - ni + 1;
      history_sum_.noalias() = history.states.middleCols(1, ni - 1) * reversed_.segment(tail, ni - 1);
      stiffness_.apply_into(history_sum_, work_);
      rhs_ -= work_;
    }
    if (load != nullptr) {
      if (load->size() != rhs_.size()) throw std::invalid_argument("Stepper::advance: load size mismatch");
      rhs_ += inv_tau * *load;
    }
    factor_.solve_in_place(rhs_);
    history.states.col(ni) = rhs_;
    history.filled = n + 1;
    return history;
  }

  /// Runs all N steps. Column n-1 of `loads` is b^n; null loads mean no noise.
  [[nodiscard]] SolutionHistory run(const Eigen::MatrixXd* loads) {
    if (loads != nullptr &&
        (loads->cols() != static_cast<Eigen::Index>(config_.N) ||
         loads->rows() != static_cast<Eigen::Index>(config_.mesh.n_interior())))
      throw std::invalid_argument("Stepper::run: load matrix has the wrong shape");
    SolutionHistory h = start();
    Vector b;
    for (std::size_t n = 1; n <= config_.N; ++n) {
      if (loads != nullptr) {
        b = loads->col(static_cast<Eigen::Index>(n - 1));
        advance(h, &b);
      } else {
        advance(h, nullptr);
      }
    }
    return h;
  }

  [[nodiscard]] const SolverConfig& config() const { return config_; }

 private:
  static TridiagonalFactorization checked_step_matrix(const SolverConfig& config, const CqWeights& weights) {
    config.validate();
    if (weights.size() < config.N + 1) throw std::invalid_argument("CQ weights shorter than N + 1");
    if (std::abs(weights.beta - (1.0 - config.alpha)) > 1e-14 ||
        std::abs(weights.tau - config.tau()) > 1e-14 * config.tau())
      throw std::invalid_argument("CQ weights do not match (1 - alpha, tau)");
    return step_matrix(config, weights);
  }

  SolverConfig config_;
  TridiagonalMatrix mass_;
  TridiagonalMatrix stiffness_;
  TridiagonalFactorization factor_;
  Vector reversed_;  // reversed_(j) = d_{N-j}
  Vector rhs_, work_, history_sum_;  // scratch; one Stepper per thread
};

inline SolutionHistory run(const SolverConfig& config, const CqWeights& weights) {
  return Stepper(config, weights).run(nullptr);
}

inline SolutionHistory run(const SolverConfig& config, const CqWeights& weights, const Eigen::MatrixXd& loads) {
  return Stepper(config, weights).run(&loads);
}

inline SolutionHistory run(const SolverConfig& config, const CqWeights& weights, const FgnTrajectory& noise) {
  if (noise.n_steps() != config.N) throw std::invalid_argument("noise trajectory has the wrong step count");
  const Eigen::MatrixXd loads = LoadOperator(noise.n_modes(), config.mesh).all_loads(noise);
  return run(config, weights, loads);
}

}  // namespace fracsde
