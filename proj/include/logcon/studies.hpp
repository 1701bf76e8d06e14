// Monte-Carlo laboratory: seeded rate/equivalence/gap/Marshall studies that
// probe the consistency theorems at desk scale and emit plot-ready tables.
//
// Each study draws inverse-CDF samples from a named log-concave reference
// distribution, fits every replication, records one statistic per
// (size, replication), and summarizes per-size medians with two log-log
// regressions: against log n (reported headline slope, which absorbs the
// log factor of the rate unit rho_n = log(n)/n) and against log(n / log n)
// (the exact exponent of rho_n for error models proportional to a power
// of rho_n). Exact-model self-tests of the regression machinery run before
// any fits.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include "logcon/certificate.hpp"
#include "logcon/density.hpp"
#include "logcon/estimators.hpp"
#include "logcon/fit.hpp"
#include "logcon/rng.hpp"
#include "logcon/sample.hpp"

namespace logcon {

enum class Distribution { gumbel, normal, gamma };

/// Reference distribution with closed-form log-density, CDF and quantile.
class TrueDistribution {
 public:
  TrueDistribution(Distribution kind, double shape = 2.0)
      : kind_(kind), shape_(shape) {
    if (kind_ == Distribution::gamma && !(shape_ >= 1.0)) {
      throw std::invalid_argument("gamma shape must be >= 1 for log-concavity");
    }
  }

  Distribution kind() const { return kind_; }
  double shape() const { return shape_; }

  double log_density(double x) const {
    switch (kind_) {
      case Distribution::gumbel:
        return -x - std::exp(-x);
      case Distribution::normal:
        return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
      case Distribution::gamma:
        if (x <= 0.0) return -std::numeric_limits<double>::infinity();
        return (shape_ - 1.0) * std::log(x) - x - std::lgamma(shape_);
    }
    return 0.0;
  }

  double cdf(double x) const {
    switch (kind_) {
      case Distribution::gumbel:
        return std::exp(-std::exp(-x));
      case Distribution::normal:
        return boost::math::cdf(boost::math::normal_distribution<double>(), x);
      case Distribution::gamma:
        if (x <= 0.0) return 0.0;
        return boost::math::cdf(
            boost::math::gamma_distribution<double>(shape_), x);
    }
    return 0.0;
  }

  double quantile(double u) const {
    switch (kind_) {
      case Distribution::gumbel:
        return -std::log(-std::log(u));
      case Distribution::normal:
        return boost::math::quantile(boost::math::normal_distribution<double>(),
                                     u);
      case Distribution::gamma:
        return boost::math::quantile(
            boost::math::gamma_distribution<double>(shape_), u);
    }
    return 0.0;
  }

  /// Lower edge of the support interior (for interval validation).
  double support_lower() const {
    return kind_ == Distribution::gamma ? 0.0
                                        : -std::numeric_limits<double>::infinity();
  }

 private:
  Distribution kind_;
  double shape_;
};

/// rho_n = log(n)/n, the rate unit of all the consistency exponents.
inline double rate_unit(int n) {
  return std::log(static_cast<double>(n)) / static_cast<double>(n);
}

struct ShrunkInterval {
  double a = 0.0;
  double b = 0.0;
};

/// T(n, beta) = [A + rho_n^{1/(2 beta + 1)}, B - rho_n^{1/(2 beta + 1)}].
inline ShrunkInterval shrunk_interval(double A, double B, int n, double beta) {
  const double d = std::pow(rate_unit(n), 1.0 / (2.0 * beta + 1.0));
  return {A + d, B - d};
}

enum class StudyKind { rate, equivalence, gap, marshall };

struct StudyConfig {
  Distribution distribution = Distribution::gumbel;
  double gamma_shape = 2.0;  // used when distribution == gamma
  std::vector<int> sample_sizes = {200, 400, 800, 1600, 3200, 6400};
  int replications = 50;
  double interval_a = -1.0;  // the compact interval T = [A, B]
  double interval_b = 3.0;
  double shrink_exponent = 2.0;  // Hoelder beta in [1, 2]
  std::uint64_t seed = 1;
  int grid_points = 1000;
  double max_failure_fraction = 0.02;
  FitConfig fit;
};

struct StudyRow {
  int n = 0;
  int rep = 0;
  double value = std::numeric_limits<double>::quiet_NaN();
  double aux1 = std::numeric_limits<double>::quiet_NaN();
  double aux2 = std::numeric_limits<double>::quiet_NaN();
};

struct PerSizeSummary {
  int n = 0;
  int used = 0;
  int failed = 0;
  double median = std::numeric_limits<double>::quiet_NaN();
  double mean = std::numeric_limits<double>::quiet_NaN();
};

struct Regression {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double std_error = std::numeric_limits<double>::quiet_NaN();
  int points = 0;
};

struct StudyReport {
  StudyKind kind = StudyKind::rate;
  std::vector<StudyRow> rows;  // sorted by (n, replication)
  std::vector<PerSizeSummary> per_size;
  Regression slope_log_n;  // log(median) on log n
  Regression slope_rho;    // log(median) on log(n / log n)
  double marshall_fraction = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> notes;
};

class StudyError : public std::runtime_error {
 public:
  explicit StudyError(const std::string& what) : std::runtime_error(what) {}
};

/// Ordinary least squares of y on x with the regression standard error of
/// the slope (needs >= 3 points for a finite standard error).
inline Regression least_squares(const std::vector<double>& x,
                                const std::vector<double>& y) {
  Regression r;
  const std::size_t k = x.size();
  r.points = static_cast<int>(k);
  if (k < 2) return r;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  if (k >= 3) {
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double resid = y[i] - (r.intercept + r.slope * x[i]);
      rss += resid * resid;
    }
    r.std_error = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
  }
  return r;
}

/// max over the grid (plus fit knots inside the interval) of |phihat - phi|.
inline double sup_log_error(const PLConcaveLogDensity& d,
                            const TrueDistribution& dist, double a, double b,
                            int grid_points) {
  double sup = 0.0;
  auto visit = [&](double t) {
    sup = std::max(sup, std::abs(d.eval_log(t) - dist.log_density(t)));
  };
  for (int k = 0; k < grid_points; ++k) {
    visit(a + (b - a) * static_cast<double>(k) /
                  static_cast<double>(grid_points - 1));
  }
  for (double t : knot_set(d)) {
    if (t >= a && t <= b) visit(t);
  }
  return sup;
}

/// Exact sup over [a, b] of |Fhat - F_n|: the ecdf is constant between data
/// points and Fhat is increasing, so the supremum sits at the interval ends
/// or at data points (using both one-sided ecdf values there).
inline double sup_cdf_gap(const Sample& s, const PLConcaveLogDensity& d,
                          double a, double b) {
  double sup = std::max(std::abs(d.cdf(a) - s.ecdf(a)),
                        std::abs(d.cdf(b) - s.ecdf(b)));
  for (double t : s.distinct()) {
    if (t <= a || t >= b) continue;
    const double fhat = d.cdf(t);
    sup = std::max({sup, std::abs(fhat - s.ecdf(t)),
                    std::abs(fhat - s.ecdf_left(t))});
  }
  return sup;
}

/// sup_{x in [a,b]} min_{y in knots} |x - y|. The distance-to-nearest-knot
/// function is piecewise linear peaking at midpoints of consecutive knots,
/// so the supremum is attained at a, b, or an interior midpoint.
inline double knot_gap_statistic(const std::vector<double>& knots, double a,
                                 double b) {
  auto nearest = [&](double x) {
    double best = std::numeric_limits<double>::infinity();
    for (double y : knots) best = std::min(best, std::abs(x - y));
    return best;
  };
  double sup = std::max(nearest(a), nearest(b));
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double mid = 0.5 * (knots[i] + knots[i + 1]);
    if (mid > a && mid < b) {
      sup = std::max(sup, 0.5 * (knots[i + 1] - knots[i]));
    }
  }
  return sup;
}

namespace detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return (k % 2 == 1) ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

inline void validate_study_config(const StudyConfig& cfg) {
  if (cfg.sample_sizes.empty()) {
    throw std::invalid_argument("study needs at least one sample size");
  }
  for (std::size_t i = 0; i < cfg.sample_sizes.size(); ++i) {
    if (cfg.sample_sizes[i] < 2) {
      throw std::invalid_argument("sample sizes must be >= 2");
    }
    if (i > 0 && cfg.sample_sizes[i] <= cfg.sample_sizes[i - 1]) {
      throw std::invalid_argument("sample sizes must be strictly increasing");
    }
  }
  if (cfg.replications < 1) {
    throw std::invalid_argument("replications must be >= 1");
  }
  if (!(cfg.interval_a < cfg.interval_b)) {
    throw std::invalid_argument("interval must satisfy A < B");
  }
  if (!(cfg.shrink_exponent >= 1.0 && cfg.shrink_exponent <= 2.0)) {
    throw std::invalid_argument("shrink exponent beta must lie in [1, 2]");
  }
  const TrueDistribution dist(cfg.distribution, cfg.gamma_shape);
  if (cfg.interval_a <= dist.support_lower()) {
    throw std::invalid_argument("interval must lie inside the support interior");
  }
  const auto t0 = shrunk_interval(cfg.interval_a, cfg.interval_b,
                                  cfg.sample_sizes.front(), cfg.shrink_exponent);
  if (!(t0.a < t0.b)) {
    throw std::invalid_argument(
        "shrunk interval T(n, beta) is empty at the smallest sample size");
  }
}

/// Exact-model self-tests of the regression machinery; run before any fits.
inline void regression_self_test() {
  const std::vector<int> sizes = {200, 400, 800, 1600, 3200, 6400, 12800};
  std::vector<double> log_n, log_rho_inv, y_rate, y_gap, sqrtn_equiv;
  for (int n : sizes) {
    const double rho = rate_unit(n);
    log_n.push_back(std::log(static_cast<double>(n)));
    log_rho_inv.push_back(std::log(1.0 / rho));
    y_rate.push_back(std::log(std::pow(rho, 0.4)));
    y_gap.push_back(std::log(std::pow(static_cast<double>(n), -0.2)));
    sqrtn_equiv.push_back(std::sqrt(static_cast<double>(n)) *
                          std::pow(static_cast<double>(n), -0.6));
  }
  const Regression rate = least_squares(log_rho_inv, y_rate);
  if (!(rate.slope >= -0.43 && rate.slope <= -0.37)) {
    throw StudyError("regression self-test failed: rho-exponent recovery");
  }
  const Regression gap = least_squares(log_n, y_gap);
  if (!(gap.slope >= -0.25 && gap.slope <= -0.15)) {
    throw StudyError("regression self-test failed: gap-exponent recovery");
  }
  for (std::size_t i = 0; i + 1 < sqrtn_equiv.size(); ++i) {
    if (!(sqrtn_equiv[i + 1] < sqrtn_equiv[i])) {
      throw StudyError("regression self-test failed: sqrt(n)-gap monotonicity");
    }
  }
}

/// Shared driver: seeded draws, fit, one statistic per replication.
inline StudyReport run_study(
    StudyKind kind, const StudyConfig& cfg,
    const std::function<StudyRow(int n, int rep, const Sample&,
                                 const FitResult&)>& statistic) {
  validate_study_config(cfg);
  regression_self_test();

  const TrueDistribution dist(cfg.distribution, cfg.gamma_shape);
  const SplitMix64 master(cfg.seed);
  StudyReport report;
  report.kind = kind;

  int total = 0;
  int failed_total = 0;
  for (std::size_t si = 0; si < cfg.sample_sizes.size(); ++si) {
    const int n = cfg.sample_sizes[si];
    PerSizeSummary ps;
    ps.n = n;
    std::vector<double> values;
    for (int rep = 0; rep < cfg.replications; ++rep) {
      ++total;
      SplitMix64 rng = master.fork(static_cast<std::uint64_t>(si) * 1000003ULL +
                                   static_cast<std::uint64_t>(rep));
      std::vector<double> xs(static_cast<std::size_t>(n));
      for (double& x : xs) x = dist.quantile(rng.uniform_open());
      try {
        const Sample s = Sample::from_values(std::move(xs));
        const FitResult fr = fit(s, cfg.fit);
        StudyRow row = statistic(n, rep, s, fr);
        row.n = n;
        row.rep = rep;
        values.push_back(row.value);
        report.rows.push_back(row);
      } catch (const std::exception&) {
        ++ps.failed;
        ++failed_total;
      }
    }
    ps.used = static_cast<int>(values.size());
    ps.median = median_of(values);
    if (!values.empty()) {
      double acc = 0.0;
      for (double v : values) acc += v;
      ps.mean = acc / static_cast<double>(values.size());
    }
    report.per_size.push_back(ps);
  }

  if (failed_total > cfg.max_failure_fraction * total) {
    throw StudyError("study aborted: " + std::to_string(failed_total) + " of " +
                     std::to_string(total) + " fits failed the certificate");
  }
  if (failed_total > 0) {
    report.notes.push_back(std::to_string(failed_total) +
                           " fits failed and were excluded from the medians");
  }

  std::vector<double> lx, lrho, ly;
  for (const auto& ps : report.per_size) {
    if (std::isfinite(ps.median) && ps.median > 0.0) {
      lx.push_back(std::log(static_cast<double>(ps.n)));
      lrho.push_back(std::log(1.0 / rate_unit(ps.n)));
      ly.push_back(std::log(ps.median));
    }
  }
  if (lx.size() >= 2) {
    report.slope_log_n = least_squares(lx, ly);
    report.slope_rho = least_squares(lrho, ly);
  }
  report.notes.push_back(
      "sup statistics use a " + std::to_string(cfg.grid_points) +
      "-point grid plus knots; the grid bounds the true sup to its resolution");
  return report;
}

}  // namespace detail

/// Theorem-4.1-style study: sup |phihat - phi| over T(n, beta). The headline
/// slope is against log n; the rate's log factor is absorbed, not resolved.
inline StudyReport run_rate_study(const StudyConfig& cfg) {
  const TrueDistribution dist(cfg.distribution, cfg.gamma_shape);
  StudyReport rep = detail::run_study(
      StudyKind::rate, cfg,
      [&](int n, int, const Sample&, const FitResult& fr) {
        const auto t = shrunk_interval(cfg.interval_a, cfg.interval_b, n,
                                       cfg.shrink_exponent);
        StudyRow row;
        row.value =
            sup_log_error(fr.density, dist, t.a, t.b, cfg.grid_points);
        return row;
      });
  rep.notes.push_back(
      "fitted slope reported as-is; it does not separate the log factor "
      "from the power of n");
  return rep;
}

/// Theorem-4.4-style study: sup |Fhat - F_n| over T(n, beta), recorded with
/// sqrt(n) scaling in aux1.
inline StudyReport run_equivalence_study(const StudyConfig& cfg) {
  if (!(cfg.shrink_exponent > 1.0)) {
    throw std::invalid_argument(
        "equivalence study needs beta > 1 for the o_p(n^{-1/2}) claim");
  }
  StudyReport rep = detail::run_study(
      StudyKind::equivalence, cfg,
      [&](int n, int, const Sample& s, const FitResult& fr) {
        const auto t = shrunk_interval(cfg.interval_a, cfg.interval_b, n,
                                       cfg.shrink_exponent);
        StudyRow row;
        row.value = sup_cdf_gap(s, fr.density, t.a, t.b);
        row.aux1 = std::sqrt(static_cast<double>(n)) * row.value;
        return row;
      });
  int decreases = 0;
  for (std::size_t i = 0; i + 1 < rep.per_size.size(); ++i) {
    const double cur = std::sqrt(static_cast<double>(rep.per_size[i].n)) *
                       rep.per_size[i].median;
    const double nxt = std::sqrt(static_cast<double>(rep.per_size[i + 1].n)) *
                       rep.per_size[i + 1].median;
    if (nxt < cur) ++decreases;
  }
  rep.notes.push_back("sqrt(n) * median gap decreased across " +
                      std::to_string(decreases) + " of " +
                      std::to_string(rep.per_size.size() - 1) +
                      " consecutive size steps");
  return rep;
}

/// Theorem-4.3-style study: sup over T of the distance to the nearest knot.
inline StudyReport run_gap_study(const StudyConfig& cfg) {
  return detail::run_study(
      StudyKind::gap, cfg,
      [&](int, int, const Sample&, const FitResult& fr) {
        StudyRow row;
        row.value = knot_gap_statistic(knot_set(fr.density), cfg.interval_a,
                                       cfg.interval_b);
        return row;
      });
}

/// Marshall-inequality study: fraction of replications with
/// ||Fhat - F||_inf <= ||F_n - F||_inf.
inline StudyReport run_marshall_study(const StudyConfig& cfg) {
  const TrueDistribution dist(cfg.distribution, cfg.gamma_shape);
  StudyReport rep = detail::run_study(
      StudyKind::marshall, cfg,
      [&](int, int, const Sample& s, const FitResult& fr) {
        const MarshallResult mr = marshall_compare(
            s, fr.density, [&](double x) { return dist.cdf(x); },
            static_cast<std::size_t>(cfg.grid_points));
        StudyRow row;
        row.value = mr.sup_dist_fit <= mr.sup_dist_ecdf ? 1.0 : 0.0;
        row.aux1 = mr.sup_dist_fit;
        row.aux2 = mr.sup_dist_ecdf;
        return row;
      });
  double holds = 0.0;
  for (const auto& row : rep.rows) holds += row.value;
  rep.marshall_fraction =
      rep.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : holds / static_cast<double>(rep.rows.size());
  return rep;
}

}  // namespace logcon
