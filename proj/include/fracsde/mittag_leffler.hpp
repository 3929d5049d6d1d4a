#pragma once

// E_alpha(-x) for alpha in (0, 1], x >= 0, in double precision.
//
// Three regimes:
//   power series        sum (-x)^k / Gamma(alpha k + 1), when its largest
//                       term is small enough to keep cancellation harmless;
//   asymptotic series   sum_{k>=1} (-1)^{k+1} x^{-k} / Gamma(1 - alpha k),
//                       when the first omitted term is negligible;
//   real-line integral  sin(alpha pi)/(alpha pi) *
//                       int_0^inf x exp(-u^{1/alpha}) / (u^2 + 2 u x cos(alpha pi) + x^2) du
//                       everywhere else.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace fracsde {

namespace detail {

inline constexpr double kSeriesMaxX = 5.0;
inline constexpr double kSeriesMaxPeak = 1e2;

/// log of the largest |term| of the power series at x.
inline double ml_series_log_peak(double alpha, double x) {
  const double lx = std::log(x);
  double best = 0.0;
  for (int k = 1; k < 2000; ++k) {
    const double lt = k * lx - std::lgamma(alpha * k + 1.0);
    if (lt > best) best = lt;
    else if (lt < best - 50.0) break;
  }
  return best;
}

inline double ml_series(double alpha, double x) {
  double sum = 1.0;
  const double lx = std::log(x);
  double prev = 1.0;
  for (int k = 1; k < 5000; ++k) {
    const double mag = std::exp(k * lx - std::lgamma(alpha * k + 1.0));
    sum += (k % 2 == 0) ? mag : -mag;
    if (mag < prev && mag < 1e-17 * std::abs(sum)) break;
    prev = mag;
  }
  return sum;
}

/// 1 / Gamma(1 - alpha k) = Gamma(alpha k) sin(pi alpha k) / pi, valid for k >= 1.
inline double reciprocal_gamma_one_minus(double alpha, int k) {
  const double z = alpha * k;
  if (std::abs(z - std::round(z)) < 1e-12) return 0.0;  // pole of Gamma(1 - z)
  return std::tgamma(z) * std::sin(std::numbers::pi * z) / std::numbers::pi;
}

/// Returns a value only when the truncation error estimate is below 1e-15 relative.
inline std::optional<double> ml_asymptotic(double alpha, double x) {
  double sum = 0.0;
  double last_mag = INFINITY;
  for (int k = 1; k <= 60; ++k) {
    const double term = reciprocal_gamma_one_minus(alpha, k) * std::pow(x, -static_cast<double>(k));
    const double mag = std::abs(term);
    if (!std::isfinite(term)) return std::nullopt;
    if (k > 2 && mag > last_mag && mag > 0.0) return std::nullopt;  // diverging before converging
    sum += (k % 2 == 1) ? term : -term;
    // zeros occur when alpha k is an integer; judge convergence on the next two terms
    const double next1 = std::abs(reciprocal_gamma_one_minus(alpha, k + 1)) * std::pow(x, -static_cast<double>(k + 1));
    const double next2 = std::abs(reciprocal_gamma_one_minus(alpha, k + 2)) * std::pow(x, -static_cast<double>(k + 2));
    if (sum > 0.0 && std::max(next1, next2) <= 1e-15 * sum) return sum;
    if (mag > 0.0) last_mag = mag;
  }
  return std::nullopt;
}

inline double ml_integral(double alpha, double x) {
  const double c = std::cos(alpha * std::numbers::pi);
  const double s = std::sin(alpha * std::numbers::pi);
  const double inv_alpha = 1.0 / alpha;
  auto integrand = [=](double u) {
    const double den = u * u + 2.0 * u * x * c + x * x;
    return x * std::exp(-std::pow(u, inv_alpha)) / den;
  };
  // exp(-u^{1/alpha}) underflows past u^{1/alpha} = 745
  const double upper = std::pow(745.0, alpha);
  std::vector<double> breaks{0.0};
  const double peak = -x * c;  // denominator minimum for alpha > 1/2
  if (peak > 0.0 && peak < upper) {
    const double width = std::max(x * s, 1e-3 * peak);
    for (double p : {peak - 4.0 * width, peak, peak + 4.0 * width})
      if (p > breaks.back() && p < upper) breaks.push_back(p);
  }
  if (1.0 > breaks.back() && 1.0 < upper) breaks.push_back(1.0);
  breaks.push_back(upper);
  std::sort(breaks.begin(), breaks.end());

  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    total += Quad::integrate(integrand, breaks[i], breaks[i + 1], 15, 1e-13);
  return s / (alpha * std::numbers::pi) * total;
}

}  // namespace detail

/// E_alpha(-x); relative accuracy ~1e-10 or better.
inline double mittag_leffler(double alpha, double x) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::domain_error("mittag_leffler: alpha must lie in (0, 1], got " + std::to_string(alpha));
  if (!(x >= 0.0)) throw std::domain_error("mittag_leffler: argument must be nonnegative");
  if (x == 0.0) return 1.0;
  if (alpha == 1.0) return std::exp(-x);
  if (x <= detail::kSeriesMaxX && detail::ml_series_log_peak(alpha, x) <= std::log(detail::kSeriesMaxPeak))
    return detail::ml_series(alpha, x);
  if (auto v = detail::ml_asymptotic(alpha, x)) return *v;
  return detail::ml_integral(alpha, x);
}

}  // namespace fracsde
