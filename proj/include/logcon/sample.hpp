// Ingestion of observation data, order statistics and the empirical CDF.
//
// Ties are accepted and folded into weights: the empirical distribution
// places mass multiplicity/n at each distinct value. Everything downstream
// (likelihood, certificates) is expressed through the distinct grid and
// those weights.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace logcon {

class Sample {
 public:
  /// Builds a sample from raw observations. Sorts a copy, keeps duplicates.
  /// Requires at least two entries, at least two distinct values, all finite.
  static Sample from_values(std::vector<double> raw) {
    if (raw.size() < 2) {
      throw std::invalid_argument("need n > 1 observations");
    }
    for (double v : raw) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("non-finite observation");
      }
    }
    std::stable_sort(raw.begin(), raw.end());
    if (raw.front() == raw.back()) {
      throw std::invalid_argument("degenerate sample: all observations equal");
    }
    return Sample(std::move(raw));
  }

  std::size_t n() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }
  double range() const { return values_.back() - values_.front(); }

  /// Distinct order statistics and their multiplicities.
  const std::vector<double>& distinct() const { return distinct_; }
  const std::vector<double>& weights() const { return weights_; }

  double mean() const { return mean_; }
  /// Var(F_n): population variance of the empirical distribution (divisor n).
  double variance() const { return variance_; }

  /// F_n(x) = #{X_i <= x} / n, right-continuous.
  double ecdf(double x) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(n());
  }

  /// F_n(x-) = #{X_i < x} / n, the left limit.
  double ecdf_left(double x) const {
    const auto it = std::lower_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(n());
  }

  /// Exact int_{X_1}^t F_n(r) dr by summation over the step intervals.
  /// Requires X_1 <= t <= X_n.
  double integrated_ecdf(double t) const {
    if (t < min() || t > max()) {
      throw std::domain_error("integrated_ecdf: t outside [X_1, X_n]");
    }
    const auto it = std::upper_bound(distinct_.begin(), distinct_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - distinct_.begin()) - 1;
    return ecdf_area_[k] + (t - distinct_[k]) * cum_weight_[k];
  }

  /// F_n at the k-th distinct value (cumulative weight / n).
  double ecdf_at_distinct(std::size_t k) const { return cum_weight_[k]; }
  /// int_{X_1}^{distinct_k} F_n(r) dr.
  double ecdf_area_at_distinct(std::size_t k) const { return ecdf_area_[k]; }

 private:
  explicit Sample(std::vector<double> sorted) : values_(std::move(sorted)) {
    const double n = static_cast<double>(values_.size());
    for (std::size_t i = 0; i < values_.size();) {
      std::size_t j = i;
      while (j < values_.size() && values_[j] == values_[i]) ++j;
      distinct_.push_back(values_[i]);
      weights_.push_back(static_cast<double>(j - i));
      i = j;
    }
    cum_weight_.resize(distinct_.size());
    ecdf_area_.resize(distinct_.size());
    double cum = 0.0;
    for (std::size_t k = 0; k < distinct_.size(); ++k) {
      if (k > 0) {
        ecdf_area_[k] =
            ecdf_area_[k - 1] + (distinct_[k] - distinct_[k - 1]) * cum_weight_[k - 1];
      }
      cum += weights_[k] / n;
      cum_weight_[k] = cum;
    }
    double m = 0.0;
    for (std::size_t k = 0; k < distinct_.size(); ++k) {
      m += weights_[k] / n * distinct_[k];
    }
    mean_ = m;
    double v = 0.0;
    for (std::size_t k = 0; k < distinct_.size(); ++k) {
      const double d = distinct_[k] - m;
      v += weights_[k] / n * d * d;
    }
    variance_ = v;
  }

  std::vector<double> values_;
  std::vector<double> distinct_;
  std::vector<double> weights_;
  std::vector<double> cum_weight_;  // F_n at distinct values
  std::vector<double> ecdf_area_;   // integral of F_n up to distinct values
  double mean_ = 0.0;
  double variance_ = 0.0;
};

inline Sample ingest_sample(std::span<const double> raw) {
  return Sample::from_values(std::vector<double>(raw.begin(), raw.end()));
}

/// Reads one number per line; '#'-prefixed lines and blank lines are skipped.
/// Parsing is locale-independent (std::from_chars).
inline std::vector<double> parse_number_lines(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t\r");
    if (line[b] == '#') continue;
    double v = 0.0;
    const char* first = line.data() + b;
    const char* last = line.data() + e + 1;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": not a number: '" + line + "'");
    }
    out.push_back(v);
  }
  return out;
}

inline Sample read_sample_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open input file: " + path);
  }
  return Sample::from_values(parse_number_lines(in));
}

}  // namespace logcon
