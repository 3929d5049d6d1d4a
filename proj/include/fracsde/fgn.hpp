#pragma once

// Exact fractional Gaussian noise via circulant embedding of the
// increment covariance, with a Cholesky fallback for short sequences.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "fracsde/rng.hpp"

namespace fracsde {

struct FgnParams {
  double hurst = 0.5;
  std::size_t n_steps = 1;
  double dt = 1.0;

  void validate() const {
    if (!(hurst >= 0.5 && hurst < 1.0))
      throw std::invalid_argument("hurst must lie in [0.5, 1), got " + std::to_string(hurst));
    if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  }
};

/// Increments W^H(t_j) - W^H(t_{j-1}), j = 1..n_steps.
using IncrementSequence = std::vector<double>;

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Autocovariance of unit-step fGn: 0.5(|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
inline double fgn_autocovariance(double hurst, std::size_t lag) {
  if (!(hurst >= 0.5 && hurst < 1.0))
    throw std::invalid_argument("hurst must lie in [0.5, 1)");
  if (lag == 0) return 1.0;
  const double two_h = 2.0 * hurst;
  const double k = static_cast<double>(lag);
  return 0.5 * (std::pow(k + 1.0, two_h) - 2.0 * std::pow(k, two_h) + std::pow(k - 1.0, two_h));
}

inline constexpr double kEmbeddingClampTol = 1e-10;

/// Eigenvalues of the 2n x 2n circulant whose first row is
/// [g0, g1, ..., g_{n-1}, g_n, g_{n-1}, ..., g1]. Roundoff negatives down to
/// -1e-10 * max are clamped to zero; anything below that is an EmbeddingError.
inline std::vector<double> circulant_spectrum(double hurst, std::size_t n_steps) {
  if (n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  const std::size_t size = 2 * n_steps;
  std::vector<double> row(size);
  for (std::size_t k = 0; k <= n_steps; ++k) row[k] = fgn_autocovariance(hurst, k);
  for (std::size_t k = n_steps + 1; k < size; ++k) row[k] = row[size - k];

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq;
  fft.fwd(freq, row);

  std::vector<double> eig(size);
  double max_eig = 0.0;
  for (std::size_t k = 0; k < size; ++k) {
    eig[k] = freq[k].real();
    max_eig = std::max(max_eig, eig[k]);
  }
  for (double& e : eig) {
    if (e < 0.0) {
      if (e < -kEmbeddingClampTol * max_eig)
        throw EmbeddingError("circulant embedding has a negative eigenvalue " + std::to_string(e));
      e = 0.0;
    }
  }
  return eig;
}

/// Precomputed square-root factor for one (H, n, dt). Sampling maps 4n
/// standard normals to n correlated increments through one FFT.
/// Not shareable across threads (the FFT plan is cached); copy per worker.
class FgnSampler {
 public:
  explicit FgnSampler(const FgnParams& params) : params_(params) {
    params_.validate();
    scale_ = std::pow(params_.dt, params_.hurst);
    try {
      const auto eig = circulant_spectrum(params_.hurst, params_.n_steps);
      const double m = static_cast<double>(eig.size());
      amplitude_.resize(eig.size());
      for (std::size_t k = 0; k < eig.size(); ++k) amplitude_[k] = std::sqrt(eig[k] / m);
    } catch (const EmbeddingError&) {
      if (params_.n_steps > kCholeskyLimit) throw;
      build_cholesky();
    }
  }

  [[nodiscard]] const FgnParams& params() const { return params_; }
  [[nodiscard]] bool uses_cholesky() const { return amplitude_.empty(); }

  /// Number of standard normals consumed per sample.
  [[nodiscard]] std::size_t normals_required() const {
    return uses_cholesky() ? params_.n_steps : 4 * params_.n_steps;
  }

  /// Linear map from standard normals to increments. `normals` holds the real
  /// parts followed by the imaginary parts of the complex Gaussian vector.
  void transform(std::span<const double> normals, std::span<double> out) {
    if (normals.size() != normals_required() || out.size() != params_.n_steps)
      throw std::invalid_argument("FgnSampler::transform: size mismatch");
    const std::size_t n = params_.n_steps;
    if (uses_cholesky()) {
      Eigen::Map<const Eigen::VectorXd> z(normals.data(), static_cast<Eigen::Index>(n));
      Eigen::Map<Eigen::VectorXd> y(out.data(), static_cast<Eigen::Index>(n));
      y.noalias() = chol_ * z;
      y *= scale_;
      return;
    }
    const std::size_t size = amplitude_.size();
    std::vector<std::complex<double>> weighted(size);
    for (std::size_t k = 0; k < size; ++k)
      weighted[k] = amplitude_[k] * std::complex<double>(normals[k], normals[size + k]);
    std::vector<std::complex<double>> time;
    fft_.fwd(time, weighted);
    for (std::size_t j = 0; j < n; ++j) out[j] = scale_ * time[j].real();
  }

  [[nodiscard]] IncrementSequence sample(Stream& stream) {
    std::vector<double> z(normals_required());
    std::normal_distribution<double> normal;
    for (double& v : z) v = normal(stream);
    IncrementSequence out(params_.n_steps);
    transform(z, out);
    return out;
  }

  static constexpr std::size_t kCholeskyLimit = 1024;

 private:
  void build_cholesky() {
    const auto n = static_cast<Eigen::Index>(params_.n_steps);
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        cov(i, j) = fgn_autocovariance(params_.hurst, static_cast<std::size_t>(std::abs(i - j)));
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw EmbeddingError("fGn covariance is not positive definite");
    chol_ = llt.matrixL();
  }

  friend FgnSampler make_cholesky_sampler(const FgnParams&);
  struct CholeskyTag {};
  FgnSampler(const FgnParams& params, CholeskyTag) : params_(params) {
    params_.validate();
    scale_ = std::pow(params_.dt, params_.hurst);
    build_cholesky();
  }

  FgnParams params_;
  double scale_ = 1.0;
  std::vector<double> amplitude_;
  Eigen::MatrixXd chol_;
  Eigen::FFT<double> fft_;  // caches twiddles; one sampler per thread
};

/// Forces the dense Cholesky route (used as a cross-check and for tests).
inline FgnSampler make_cholesky_sampler(const FgnParams& params) {
  if (params.n_steps > FgnSampler::kCholeskyLimit)
    throw std::invalid_argument("Cholesky fGn sampling is limited to n_steps <= 1024");
  return FgnSampler(params, FgnSampler::CholeskyTag{});
}

inline IncrementSequence sample_fgn(const FgnParams& params, Stream& stream) {
  return FgnSampler(params).sample(stream);
}

}  // namespace fracsde
