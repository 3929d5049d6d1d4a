#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fracsde {

/// Backward-Euler convolution quadrature weights: coefficients of
/// ((1 - zeta) / tau)^beta = sum_i weights[i] zeta^i, i = 0..N.
struct CqWeights {
  double beta = 0.0;
  double tau = 1.0;
  std::vector<double> weights;

  [[nodiscard]] double operator[](std::size_t i) const { return weights[i]; }
  [[nodiscard]] std::size_t size() const { return weights.size(); }
};

inline CqWeights bdf1_weights(double beta, double tau, std::size_t n) {
  if (!(tau > 0.0)) throw std::invalid_argument("bdf1_weights: tau must be positive");
  CqWeights w{beta, tau, std::vector<double>(n + 1)};
  w.weights[0] = std::pow(tau, -beta);
  // d_i = d_{i-1} (i - 1 - beta) / i
  for (std::size_t i = 1; i <= n; ++i) {
    const double di = static_cast<double>(i);
    w.weights[i] = w.weights[i - 1] * (di - 1.0 - beta) / di;
  }
  return w;
}

/// Strong temporal order of the scheme, min(H - rho*alpha, 1).
inline double predicted_temporal_rate(double hurst, double alpha, double rho) {
  return std::min(hurst - rho * alpha, 1.0);
}

/// Strong spatial order, min(2, 2 - 2 rho, 2H/alpha - 2 rho).
inline double predicted_spatial_rate(double hurst, double alpha, double rho) {
  return std::min({2.0, 2.0 - 2.0 * rho, 2.0 * hurst / alpha - 2.0 * rho});
}

}  // namespace fracsde
