// Piecewise-linear concave log-density: exact evaluation, CDF, integrated
// CDF, moments and quantiles, all in closed form through the exponential
// moment kernels. The function is linear between consecutive knots inside
// [x_0, x_m] and -infinity outside.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "logcon/kernels.hpp"
#include "logcon/piecewise.hpp"

namespace logcon {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

class PLConcaveLogDensity {
 public:
  /// Validated constructor: knots strictly increasing, values finite,
  /// successive slopes nonincreasing within a scale-aware tolerance.
  /// With normalized = true the total mass must be 1 within 1e-12.
  static PLConcaveLogDensity make(std::vector<double> knots,
                                  std::vector<double> log_values,
                                  bool normalized = false) {
    PLConcaveLogDensity d(std::move(knots), std::move(log_values), normalized);
    if (!d.is_concave()) {
      throw std::invalid_argument("log-density is not concave");
    }
    return d;
  }

  /// Skips the concavity check (negative controls and diagnostics only);
  /// the remaining structural invariants are still enforced.
  static PLConcaveLogDensity make_unchecked(std::vector<double> knots,
                                            std::vector<double> log_values,
                                            bool normalized = false) {
    return PLConcaveLogDensity(std::move(knots), std::move(log_values), normalized);
  }

  std::size_t num_knots() const { return knots_.size(); }
  std::size_t num_segments() const { return knots_.size() - 1; }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& log_values() const { return log_values_; }
  bool normalized() const { return normalized_; }
  double support_min() const { return knots_.front(); }
  double support_max() const { return knots_.back(); }

  double slope(std::size_t seg) const {
    return (log_values_[seg + 1] - log_values_[seg]) / (knots_[seg + 1] - knots_[seg]);
  }
  /// One-sided slopes at knot j; at the boundary knots the interior slope.
  double slope_left(std::size_t j) const { return slope(j == 0 ? 0 : j - 1); }
  double slope_right(std::size_t j) const {
    return slope(j >= num_segments() ? num_segments() - 1 : j);
  }

  bool is_concave() const {
    const double tol = slope_tolerance();
    for (std::size_t j = 0; j + 1 < num_segments(); ++j) {
      if (slope(j + 1) > slope(j) + tol) return false;
    }
    return true;
  }

  /// Tolerance used to decide whether two slopes differ (knot extraction and
  /// concavity validation): 1e-9 * (max absolute slope + 1).
  double slope_tolerance() const {
    double smax = 0.0;
    for (std::size_t j = 0; j < num_segments(); ++j) {
      smax = std::max(smax, std::abs(slope(j)));
    }
    return 1e-9 * (smax + 1.0);
  }

  /// phi(x): linear interpolation inside the support, -infinity outside.
  /// At a knot the stored value is returned exactly.
  double eval_log(double x) const {
    if (x < knots_.front() || x > knots_.back()) {
      return -std::numeric_limits<double>::infinity();
    }
    const std::size_t j = segment_of(x);
    if (x == knots_[j]) return log_values_[j];
    if (x == knots_[j + 1]) return log_values_[j + 1];
    const double t = (x - knots_[j]) / (knots_[j + 1] - knots_[j]);
    return log_values_[j] + t * (log_values_[j + 1] - log_values_[j]);
  }

  double density(double x) const { return std::exp(eval_log(x)); }

  double total_mass() const { return cum_mass_.back(); }

  /// F(x) = int_{-inf}^x exp(phi), exact segment-wise closed form.
  double cdf(double x) const {
    if (x <= knots_.front()) return 0.0;
    if (x >= knots_.back()) return total_mass();
    const std::size_t j = segment_of(x);
    const double h = knots_[j + 1] - knots_[j];
    const double y = log_values_[j + 1] - log_values_[j];
    const double t = (x - knots_[j]) / h;
    return cum_mass_[j] + h * std::exp(log_values_[j]) * t * exp_mean_kernel(t * y);
  }

  /// total_mass() - F(x), accumulated from the right end so that values near
  /// x_m keep their digits (the hazard divides by this).
  double ccdf(double x) const {
    if (x <= knots_.front()) return total_mass();
    if (x >= knots_.back()) return 0.0;
    const std::size_t j = segment_of(x);
    const double h = knots_[j + 1] - knots_[j];
    const double y = log_values_[j + 1] - log_values_[j];
    const double t = (x - knots_[j]) / h;
    return ccum_mass_[j + 1] + h * std::exp(log_values_[j] + t * y) * (1.0 - t) *
                                   exp_mean_kernel((1.0 - t) * y);
  }

  /// int_{x_0}^t F(r) dr, exact closed form. Requires x_0 <= t <= x_m.
  double integrated_cdf(double t) const {
    if (t < knots_.front() || t > knots_.back()) {
      throw std::domain_error("integrated_cdf: t outside the support");
    }
    if (t == knots_.back()) return icdf_at_knot_.back();
    const std::size_t j = segment_of(t);
    const double h = knots_[j + 1] - knots_[j];
    const double y = log_values_[j + 1] - log_values_[j];
    const double u = (t - knots_[j]) / h;
    return icdf_at_knot_[j] + cum_mass_[j] * (t - knots_[j]) +
           h * h * std::exp(log_values_[j]) * u * u *
               (exp_mean_kernel(u * y) - exp_moment1_kernel(u * y));
  }

  /// Raw integrals (mass, int x e^phi, int x^2 e^phi); no normalization needed.
  void raw_moments(double& mass, double& m1, double& m2) const {
    mass = m1 = m2 = 0.0;
    for (std::size_t j = 0; j < num_segments(); ++j) {
      const double h = knots_[j + 1] - knots_[j];
      const double y = log_values_[j + 1] - log_values_[j];
      const double e = std::exp(log_values_[j]);
      const double j0 = exp_mean_kernel(y);
      const double j1 = exp_moment1_kernel(y);
      const double j2 = exp_moment2_kernel(y);
      const double x0 = knots_[j];
      mass += h * e * j0;
      m1 += h * e * (x0 * j0 + h * j1);
      m2 += h * e * (x0 * x0 * j0 + 2.0 * x0 * h * j1 + h * h * j2);
    }
  }

  /// Mean and variance of the (normalized) density. The variance is
  /// accumulated about the mean to avoid cancellation.
  Moments moments() const {
    if (!normalized_) {
      throw std::domain_error("moments: density is not normalized");
    }
    double mass = 0.0, m1 = 0.0, m2 = 0.0;
    raw_moments(mass, m1, m2);
    const double mean = m1 / mass;
    double var = 0.0;
    for (std::size_t j = 0; j < num_segments(); ++j) {
      const double h = knots_[j + 1] - knots_[j];
      const double y = log_values_[j + 1] - log_values_[j];
      const double e = std::exp(log_values_[j]);
      const double c = knots_[j] - mean;
      var += h * e *
             (c * c * exp_mean_kernel(y) + 2.0 * c * h * exp_moment1_kernel(y) +
              h * h * exp_moment2_kernel(y));
    }
    return {mean, var / mass};
  }

  /// Unique x with F(x) = p * total_mass; p = 0 and p = 1 hit the endpoints
  /// exactly. Inverts each exp-linear segment with the same stabilized
  /// kernel as the sampler.
  double quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::domain_error("quantile: p outside [0, 1]");
    }
    if (p == 0.0) return knots_.front();
    if (p == 1.0) return knots_.back();
    const double target = p * total_mass();
    const auto it = std::upper_bound(cum_mass_.begin(), cum_mass_.end(), target);
    std::size_t j = static_cast<std::size_t>(it - cum_mass_.begin());
    j = (j == 0) ? 0 : j - 1;
    j = std::min(j, num_segments() - 1);
    const double seg = cum_mass_[j + 1] - cum_mass_[j];
    const double q = std::clamp((target - cum_mass_[j]) / seg, 0.0, 1.0);
    const double y = log_values_[j + 1] - log_values_[j];
    const double t = piecewise_exp_inverse(y, q);
    return knots_[j] + t * (knots_[j + 1] - knots_[j]);
  }

  /// Returns the density with log(total mass) subtracted from every value,
  /// so the result integrates to one; concavity is preserved exactly.
  PLConcaveLogDensity normalize() const {
    const double shift = std::log(total_mass());
    std::vector<double> v(log_values_);
    for (double& x : v) x -= shift;
    return PLConcaveLogDensity(knots_, std::move(v), true);
  }

  /// Mass of segment j and cumulative mass strictly below knot j.
  double segment_mass(std::size_t j) const { return cum_mass_[j + 1] - cum_mass_[j]; }
  double mass_below_knot(std::size_t j) const { return cum_mass_[j]; }

 private:
  PLConcaveLogDensity(std::vector<double> knots, std::vector<double> log_values,
                      bool normalized)
      : knots_(std::move(knots)),
        log_values_(std::move(log_values)),
        normalized_(normalized) {
    if (knots_.size() < 2 || knots_.size() != log_values_.size()) {
      throw std::invalid_argument("need m >= 1 segments (>= 2 knots)");
    }
    for (std::size_t j = 0; j + 1 < knots_.size(); ++j) {
      if (!(knots_[j] < knots_[j + 1])) {
        throw std::invalid_argument("knots must be strictly increasing");
      }
    }
    for (double v : log_values_) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("log-density values must be finite");
      }
    }
    build_prefix_tables();
    if (normalized_ && std::abs(total_mass() - 1.0) > 1e-12) {
      throw std::invalid_argument("normalized flag set but total mass is " +
                                  std::to_string(total_mass()));
    }
  }

  void build_prefix_tables() {
    const std::size_t m = num_segments();
    cum_mass_.assign(m + 1, 0.0);
    ccum_mass_.assign(m + 1, 0.0);
    icdf_at_knot_.assign(m + 1, 0.0);
    std::vector<double> seg(m);
    // Neumaier-compensated prefix sums keep the total mass accurate to a few
    // ulps even with tens of thousands of segments.
    double sum = 0.0, comp = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double h = knots_[j + 1] - knots_[j];
      const double y = log_values_[j + 1] - log_values_[j];
      seg[j] = h * std::exp(log_values_[j]) * exp_mean_kernel(y);
      const double t = sum + seg[j];
      comp += (std::abs(sum) >= std::abs(seg[j])) ? (sum - t) + seg[j]
                                                  : (seg[j] - t) + sum;
      sum = t;
      cum_mass_[j + 1] = sum + comp;
    }
    sum = 0.0;
    comp = 0.0;
    for (std::size_t j = m; j-- > 0;) {
      const double t = sum + seg[j];
      comp += (std::abs(sum) >= std::abs(seg[j])) ? (sum - t) + seg[j]
                                                  : (seg[j] - t) + sum;
      sum = t;
      ccum_mass_[j] = sum + comp;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double h = knots_[j + 1] - knots_[j];
      const double y = log_values_[j + 1] - log_values_[j];
      icdf_at_knot_[j + 1] =
          icdf_at_knot_[j] + cum_mass_[j] * h +
          h * h * std::exp(log_values_[j]) *
              (exp_mean_kernel(y) - exp_moment1_kernel(y));
    }
  }

  /// Index j with knots_[j] <= x <= knots_[j+1] (clamped to valid segments).
  std::size_t segment_of(double x) const {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    std::size_t j = static_cast<std::size_t>(it - knots_.begin());
    j = (j == 0) ? 0 : j - 1;
    return std::min(j, num_segments() - 1);
  }

  std::vector<double> knots_;
  std::vector<double> log_values_;
  bool normalized_ = false;
  std::vector<double> cum_mass_;      // mass up to knot j
  std::vector<double> ccum_mass_;     // mass from knot j to the right end
  std::vector<double> icdf_at_knot_;  // int F up to knot j
};

/// Knot set S_n(phi): interior points where the left and right slopes differ
/// by more than the slope tolerance, plus both support endpoints.
inline std::vector<std::size_t> knot_indices(const PLConcaveLogDensity& d) {
  std::vector<std::size_t> idx;
  idx.push_back(0);
  const double tol = d.slope_tolerance();
  for (std::size_t j = 1; j + 1 < d.num_knots(); ++j) {
    if (std::abs(d.slope(j) - d.slope(j - 1)) > tol) idx.push_back(j);
  }
  idx.push_back(d.num_knots() - 1);
  return idx;
}

inline std::vector<double> knot_set(const PLConcaveLogDensity& d) {
  std::vector<double> out;
  for (std::size_t j : knot_indices(d)) out.push_back(d.knots()[j]);
  return out;
}

/// int Delta(x) exp(phi(x)) dx over the support, closed form on the merged
/// breakpoint grid of Delta and phi.
inline double integrate_pl_against_density(const PLConcaveLogDensity& d,
                                           const PiecewiseLinearFn& delta) {
  std::vector<double> pts(d.knots());
  for (double q : delta.knots) {
    if (q > d.support_min() && q < d.support_max()) pts.push_back(q);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double l = pts[i];
    const double u = pts[i + 1];
    const double h = u - l;
    if (h <= 0.0) continue;
    const double a = d.eval_log(l);
    const double y = d.eval_log(u) - a;
    const double dl = delta(l);
    const double beta = (delta(u) - dl) / h;
    total += h * std::exp(a) *
             (dl * exp_mean_kernel(y) + beta * h * exp_moment1_kernel(y));
  }
  return total;
}

}  // namespace logcon
