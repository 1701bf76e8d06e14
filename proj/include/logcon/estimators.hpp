// Estimators derived from a fitted density: the exact piecewise-exponential
// sampler, the Gaussian-smoothed estimator, the monotone hazard rate and
// quantiles.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "logcon/density.hpp"
#include "logcon/gauss.hpp"
#include "logcon/kernels.hpp"
#include "logcon/rng.hpp"
#include "logcon/sample.hpp"

namespace logcon {

/// Inverse of the fitted CDF; delegates to the density's closed form.
inline double quantile(const PLConcaveLogDensity& d, double p) {
  return d.quantile(p);
}

namespace detail {

/// One draw from exp(phi): a uniform picks the segment by its mass
/// (step (a)), a second uniform goes through the segment's exponential
/// inverse (step (b)). Consumes exactly two generator words.
inline double draw_base(const PLConcaveLogDensity& d, SplitMix64& rng) {
  const double target = rng.uniform01() * d.total_mass();
  std::size_t lo = 0, hi = d.num_segments();
  while (hi - lo > 0) {
    const std::size_t mid = (lo + hi) / 2;
    if (d.mass_below_knot(mid + 1) <= target) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  const std::size_t j = std::min(lo, d.num_segments() - 1);
  const double theta = d.log_values()[j + 1] - d.log_values()[j];
  const double t = piecewise_exp_inverse(theta, rng.uniform01());
  return d.knots()[j] + t * (d.knots()[j + 1] - d.knots()[j]);
}

}  // namespace detail

/// i.i.d. draws with law exp(phi). Same seed, same stream.
inline std::vector<double> sample_fit(const PLConcaveLogDensity& d,
                                      std::uint64_t seed, std::size_t count) {
  if (count < 1) {
    throw std::invalid_argument("sample_fit: count must be >= 1");
  }
  SplitMix64 rng(seed);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(detail::draw_base(d, rng));
  }
  return out;
}

/// Gaussian-smoothed estimator: base fit convolved with N(0, gamma^2), the
/// bandwidth chosen so the smoothed variance matches the unbiased sample
/// variance sigma_hat^2 = n/(n-1) Var(F_n).
struct SmoothedDensity {
  PLConcaveLogDensity base;
  double gamma_sq = 0.0;      // sigma_hat^2 - Var(Fhat), clamped at 0
  double sigma_hat_sq = 0.0;  // target variance
};

inline SmoothedDensity make_smoothed(const PLConcaveLogDensity& d,
                                     const Sample& s) {
  if (!d.normalized()) {
    throw std::invalid_argument("make_smoothed: density must be normalized");
  }
  const double n = static_cast<double>(s.n());
  const double sigma_hat_sq = s.variance() * n / (n - 1.0);
  // Var(Fhat) <= Var(F_n) <= sigma_hat^2, so a negative difference can only
  // come from rounding.
  const double gamma_sq = std::max(0.0, sigma_hat_sq - d.moments().variance);
  return SmoothedDensity{d, gamma_sq, sigma_hat_sq};
}

/// log f*(x): each exp-linear segment convolved with the Gaussian kernel has
/// the closed form exp(a + b(x - l) + b^2 g^2 / 2) * (Phi(bu) - Phi(bl)) with
/// bl = (l - x)/g - b g, bu = (u - x)/g - b g; the sum is assembled in
/// log-space so far tails neither overflow nor turn into 0 * inf.
inline double smoothed_log_density_eval(const SmoothedDensity& sd, double x) {
  const PLConcaveLogDensity& d = sd.base;
  if (sd.gamma_sq == 0.0) return d.eval_log(x);
  const double g = std::sqrt(sd.gamma_sq);
  const auto& knots = d.knots();
  const auto& vals = d.log_values();
  std::vector<double> terms;
  terms.reserve(d.num_segments());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < d.num_segments(); ++j) {
    const double l = knots[j];
    const double u = knots[j + 1];
    const double b = (vals[j + 1] - vals[j]) / (u - l);
    const double bl = (l - x) / g - b * g;
    const double bu = (u - x) / g - b * g;
    const double t = vals[j] + b * (x - l) + 0.5 * b * b * sd.gamma_sq +
                     log_normal_cdf_diff(bl, bu);
    terms.push_back(t);
    mx = std::max(mx, t);
  }
  if (!std::isfinite(mx)) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - mx);
  return mx + std::log(acc);
}

inline double smoothed_density_eval(const SmoothedDensity& sd, double x) {
  return std::exp(smoothed_log_density_eval(sd, x));
}

/// Draws from f*: X* = X + gamma Z (step (c)). With gamma_sq == 0 no normal
/// variate is consumed, so the stream coincides with sample_fit.
inline std::vector<double> sample_smoothed(const SmoothedDensity& sd,
                                           std::uint64_t seed,
                                           std::size_t count) {
  if (sd.gamma_sq == 0.0) return sample_fit(sd.base, seed, count);
  const double g = std::sqrt(sd.gamma_sq);
  SplitMix64 rng(seed);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double x = detail::draw_base(sd.base, rng);
    out.push_back(x + g * rng.normal());
  }
  return out;
}

/// Hazard rate f/(1 - F) on (-infinity, X_n); nondecreasing for any
/// log-concave fit. The denominator comes from the right-accumulated
/// complementary CDF, which keeps full precision near the right endpoint.
inline double hazard_eval(const PLConcaveLogDensity& d, double x) {
  if (x >= d.support_max()) {
    throw std::domain_error("hazard_eval: undefined at and beyond X_n");
  }
  if (x < d.support_min()) return 0.0;
  return d.density(x) / d.ccdf(x);
}

}  // namespace logcon
