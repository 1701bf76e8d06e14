// Machine-checkable optimality certificates for a fitted log-concave density.
//
// The central object is the process D(t) = int_{X_1}^t (Fhat - F_n)(r) dr.
// A candidate is the maximum likelihood estimator exactly when D <= 0 on the
// support with equality at every knot. Between consecutive data points F_n is
// constant and Fhat is increasing, so D is convex there and its maximum over
// any step interval sits at the interval ends; interior stationary points
// (where Fhat crosses the F_n level) are minima. The evaluation grid below
// therefore pins the exact maximum and the stationary points only sharpen the
// reported minimum of the table.
//
// Violation fields are reported scale-free: x is affinely rescaled to [0, 1]
// (lengths divided by X_n - X_1, variances by its square); probabilities are
// unscaled. The D(t) table keeps original units for plotting.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "logcon/density.hpp"
#include "logcon/piecewise.hpp"
#include "logcon/sample.hpp"

namespace logcon {

struct CertificateReport {
  double tolerance = 1e-8;
  double max_inequality_violation = 0.0;  // max over grid of D(t), positive part
  double max_knot_equality_gap = 0.0;     // max over knots of |D(t)|
  double mean_gap = 0.0;                  // |mean(Fhat) - mean(F_n)|
  double variance_slack = 0.0;            // Var(F_n) - Var(Fhat)
  double knot_bracket_worst_gap = 0.0;    // worst violation of F_n - 1/n <= Fhat <= F_n
  bool knot_bracket_ok = false;
  std::vector<double> knot_values;               // extracted S_n, original units
  std::vector<std::pair<double, double>> d_process;  // (t, D(t)), original units

  bool passes() const { return passes(tolerance); }
  bool passes(double tol) const {
    return max_inequality_violation <= tol && max_knot_equality_gap <= tol &&
           mean_gap <= tol && variance_slack >= -tol &&
           knot_bracket_worst_gap <= tol;
  }
};

struct KnotBracketResult {
  bool ok = false;
  double worst_gap = 0.0;
};

struct MarshallResult {
  double sup_dist_fit = 0.0;   // || Fhat - F ||_inf over the real line
  double sup_dist_ecdf = 0.0;  // || F_n - F ||_inf (exact)
};

namespace detail {

inline void require_matching_support(const Sample& s, const PLConcaveLogDensity& d) {
  const double tol = 1e-9 * (s.range() + 1.0);
  if (std::abs(d.support_min() - s.min()) > tol ||
      std::abs(d.support_max() - s.max()) > tol) {
    throw std::invalid_argument("support mismatch between sample and density");
  }
}

/// data points + density knots + uniform grid + per-step stationary points
/// of D, sorted and deduplicated, clipped to the common support.
inline std::vector<double> d_process_grid(const Sample& s,
                                          const PLConcaveLogDensity& d,
                                          std::size_t grid_size) {
  std::vector<double> pts(s.distinct());
  pts.insert(pts.end(), d.knots().begin(), d.knots().end());
  const double lo = s.min();
  const double hi = s.max();
  for (std::size_t k = 1; k + 1 <= grid_size; ++k) {
    pts.push_back(lo + (hi - lo) * static_cast<double>(k) /
                           static_cast<double>(grid_size));
  }
  // stationary points: Fhat(t) equal to the F_n level of the step interval
  const auto& xi = s.distinct();
  for (std::size_t k = 0; k + 1 < xi.size(); ++k) {
    const double level = s.ecdf_at_distinct(k) * d.total_mass();
    if (d.cdf(xi[k]) < level && level < d.cdf(xi[k + 1])) {
      const double t = d.quantile(level / d.total_mass());
      if (t > xi[k] && t < xi[k + 1]) pts.push_back(t);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  while (!pts.empty() && pts.front() < lo) pts.erase(pts.begin());
  while (!pts.empty() && pts.back() > hi) pts.pop_back();
  return pts;
}

}  // namespace detail

/// F_n - 1/n <= Fhat <= F_n at every extracted knot, within tol.
inline KnotBracketResult check_knot_bracket(const Sample& s,
                                            const PLConcaveLogDensity& d,
                                            double tol = 1e-8) {
  detail::require_matching_support(s, d);
  const double inv_n = 1.0 / static_cast<double>(s.n());
  double worst = 0.0;
  for (double t : knot_set(d)) {
    const double fn = s.ecdf(t);
    const double fhat = d.cdf(t) / d.total_mass();
    worst = std::max(worst, fhat - fn);
    worst = std::max(worst, (fn - inv_n) - fhat);
  }
  return {worst <= tol, worst};
}

/// Full Theorem-2.4-style certificate; see the header comment for scaling.
inline CertificateReport check_integral_characterization(
    const Sample& s, const PLConcaveLogDensity& d, std::size_t grid_size = 512,
    double tol = 1e-8) {
  detail::require_matching_support(s, d);
  if (!d.normalized()) {
    throw std::invalid_argument("certificate requires a normalized density");
  }
  CertificateReport rep;
  rep.tolerance = tol;
  const double range = s.range();

  const auto grid = detail::d_process_grid(s, d, grid_size);
  rep.d_process.reserve(grid.size());
  double max_d = -std::numeric_limits<double>::infinity();
  for (double t : grid) {
    const double dt = d.integrated_cdf(t) - s.integrated_ecdf(t);
    rep.d_process.emplace_back(t, dt);
    max_d = std::max(max_d, dt);
  }
  rep.max_inequality_violation = std::max(0.0, max_d) / range;

  rep.knot_values = knot_set(d);
  double knot_gap = 0.0;
  for (double t : rep.knot_values) {
    knot_gap = std::max(
        knot_gap, std::abs(d.integrated_cdf(t) - s.integrated_ecdf(t)));
  }
  rep.max_knot_equality_gap = knot_gap / range;

  const Moments m = d.moments();
  rep.mean_gap = std::abs(m.mean - s.mean()) / range;
  rep.variance_slack = (s.variance() - m.variance) / (range * range);

  const KnotBracketResult kb = check_knot_bracket(s, d, tol);
  rep.knot_bracket_ok = kb.ok;
  rep.knot_bracket_worst_gap = kb.worst_gap;
  return rep;
}

/// Slack int Delta d(Fhat - F_n) of an admissible piecewise-linear
/// perturbation; >= -tol characterizes the MLE. A convex kink is admissible
/// only on the knot set of d.
inline double check_perturbation(const Sample& s, const PLConcaveLogDensity& d,
                                 const PiecewiseLinearFn& delta) {
  detail::require_matching_support(s, d);
  double max_slope = 0.0;
  for (std::size_t j = 0; j + 1 < delta.knots.size(); ++j) {
    max_slope = std::max(max_slope, std::abs(delta.slope(j)));
  }
  const double slope_tol = 1e-9 * (max_slope + 1.0);
  const auto knots = knot_set(d);
  const double x_tol = 1e-9 * (s.range() + 1.0);
  for (std::size_t j = 1; j + 1 < delta.knots.size(); ++j) {
    const double q = delta.knots[j];
    if (q <= d.support_min() || q >= d.support_max()) continue;
    if (delta.slope(j) > delta.slope(j - 1) + slope_tol) {
      const bool on_knot =
          std::any_of(knots.begin(), knots.end(),
                      [&](double k) { return std::abs(k - q) <= x_tol; });
      if (!on_knot) {
        throw std::invalid_argument(
            "inadmissible perturbation: convex kink off the knot set");
      }
    }
  }
  double data_term = 0.0;
  const double n = static_cast<double>(s.n());
  for (std::size_t k = 0; k < s.distinct().size(); ++k) {
    data_term += s.weights()[k] / n * delta(s.distinct()[k]);
  }
  return integrate_pl_against_density(d, delta) - data_term;
}

/// Quadratic perturbations c0 + c1 x + c2 x^2; admissible iff c2 <= 0.
inline double check_perturbation(const Sample& s, const PLConcaveLogDensity& d,
                                 const Quadratic& delta) {
  detail::require_matching_support(s, d);
  if (delta.c2 > 0.0) {
    throw std::invalid_argument(
        "inadmissible perturbation: positive quadratic curvature");
  }
  double mass = 0.0, m1 = 0.0, m2 = 0.0;
  d.raw_moments(mass, m1, m2);
  double data_term = 0.0;
  const double n = static_cast<double>(s.n());
  for (std::size_t k = 0; k < s.distinct().size(); ++k) {
    data_term += s.weights()[k] / n * delta(s.distinct()[k]);
  }
  return (delta.c0 * mass + delta.c1 * m1 + delta.c2 * m2) - data_term;
}

/// sqrt(f(x1) f(x2)) <= (F(x2) - F(x1)) / (x2 - x1) + slack.
inline bool check_lemma_a1(const PLConcaveLogDensity& d, double x1, double x2,
                           double slack = 1e-12) {
  if (!(x1 < x2)) {
    throw std::invalid_argument("check_lemma_a1: needs x1 < x2");
  }
  const double lhs = std::sqrt(d.density(x1) * d.density(x2));
  const double rhs = (d.cdf(x2) - d.cdf(x1)) / (x2 - x1);
  return lhs <= rhs + slack;
}

/// Density-ratio bounds: the squared bound always, the exponential bound when
/// f(xo)|x - xo| >= h(xo, x) = F(max) - F(min).
inline bool check_lemma_a1_ratio(const PLConcaveLogDensity& d, double xo,
                                 double x, double slack = 1e-12) {
  if (x == xo) {
    throw std::invalid_argument("check_lemma_a1_ratio: needs x != xo");
  }
  const double fo = d.density(xo);
  if (!(fo > 0.0)) {
    throw std::invalid_argument("check_lemma_a1_ratio: f(xo) must be positive");
  }
  const double ratio = d.density(x) / fo;
  const double h = std::abs(d.cdf(x) - d.cdf(xo));
  const double fd = fo * std::abs(x - xo);
  const double sq = (h / fd) * (h / fd);
  if (ratio > sq + slack) return false;
  if (fd >= h) {
    const double eb = std::exp(1.0 - fd / h);
    if (ratio > eb + slack) return false;
  }
  return true;
}

/// f/F nonincreasing and f/(1-F) nondecreasing on an interior grid; the
/// second ratio is the hazard, so this also certifies hazard monotonicity.
inline bool check_monotone_ratios(const PLConcaveLogDensity& d,
                                  std::size_t grid_size = 512,
                                  double slack = 1e-10) {
  const double lo = d.support_min();
  const double range = d.support_max() - lo;
  double prev_fr = std::numeric_limits<double>::infinity();
  double prev_hz = 0.0;
  for (std::size_t k = 1; k <= grid_size; ++k) {
    const double x =
        lo + range * static_cast<double>(k) / static_cast<double>(grid_size + 1);
    const double f = d.density(x);
    const double fr = f / d.cdf(x);
    const double hz = f / d.ccdf(x);
    if (k > 1) {
      if (fr > prev_fr + slack * std::max(1.0, std::abs(prev_fr))) return false;
      if (hz < prev_hz - slack * std::max(1.0, std::abs(prev_hz))) return false;
    }
    prev_fr = fr;
    prev_hz = hz;
  }
  return true;
}

/// Sup distances of the fitted CDF and of the empirical CDF from a continuous
/// reference CDF. The ecdf distance is exact; the fitted distance is taken
/// over the data points, a dense grid, and the two tails (where Fhat is 0/1).
inline MarshallResult marshall_compare(const Sample& s,
                                       const PLConcaveLogDensity& d,
                                       const std::function<double(double)>& true_cdf,
                                       std::size_t grid_size = 512) {
  MarshallResult r;
  const double lo = d.support_min();
  const double hi = d.support_max();
  double sup_fit = std::max(true_cdf(lo), 1.0 - true_cdf(hi));
  auto visit = [&](double x) {
    sup_fit = std::max(sup_fit, std::abs(d.cdf(x) / d.total_mass() - true_cdf(x)));
  };
  for (double x : s.distinct()) visit(x);
  for (std::size_t k = 1; k + 1 <= grid_size; ++k) {
    visit(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid_size));
  }
  r.sup_dist_fit = sup_fit;

  double sup_e = 0.0;
  double below = 0.0;
  for (std::size_t k = 0; k < s.distinct().size(); ++k) {
    const double fx = true_cdf(s.distinct()[k]);
    const double at = s.ecdf_at_distinct(k);
    sup_e = std::max({sup_e, fx - below, at - fx});
    below = at;
  }
  r.sup_dist_ecdf = sup_e;
  return r;
}

}  // namespace logcon
