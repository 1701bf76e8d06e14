// Standard normal CDF helpers, including a log-space difference that stays
// accurate deep in the tails (needed by the Gaussian-convolution smoother).

#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace logcon {

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double log_normal_pdf(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double normal_ccdf(double x) {
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// log Phi(x). erfc carries the tail accurately down to ~1e-300; below that
/// switch to the Mills-ratio asymptotic series.
inline double log_normal_cdf(double x) {
  if (x > -37.0) {
    return std::log(normal_cdf(x));
  }
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return log_normal_pdf(x) - std::log(-x) + std::log(series);
}

/// log(Phi(b2) - Phi(b1)) for b1 < b2, stable for both tails and for
/// narrow intervals.
inline double log_normal_cdf_diff(double b1, double b2) {
  if (b1 > b2) std::swap(b1, b2);
  const double w = b2 - b1;
  const double m = 0.5 * (b1 + b2);
  if (w < 1e-6) {
    // midpoint rule with curvature correction; error O(w^4)
    if (w <= 0.0) return -std::numeric_limits<double>::infinity();
    return log_normal_pdf(m) + std::log(w) + std::log1p(w * w * (m * m - 1.0) / 24.0);
  }
  if (b1 >= 0.0) {
    // right tail: reflect to the left tail
    return log_normal_cdf_diff(-b2, -b1);
  }
  if (b2 <= 0.0) {
    const double la = log_normal_cdf(b2);  // larger
    const double lb = log_normal_cdf(b1);  // smaller
    return la + std::log1p(-std::exp(lb - la));
  }
  // interval straddles zero; direct difference has no cancellation here
  return std::log(normal_cdf(b2) - normal_cdf(b1));
}

}  // namespace logcon
