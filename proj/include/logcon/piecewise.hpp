// Piecewise-linear and quadratic perturbation functions.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace logcon {

/// Continuous piecewise-linear function given by breakpoints and values.
/// Outside the breakpoint range it extends linearly with the boundary slope.
/// Only the restriction to a density's support matters for the integrals
/// computed against it.
struct PiecewiseLinearFn {
  std::vector<double> knots;
  std::vector<double> values;

  PiecewiseLinearFn(std::vector<double> k, std::vector<double> v)
      : knots(std::move(k)), values(std::move(v)) {
    if (knots.size() < 2 || knots.size() != values.size()) {
      throw std::invalid_argument("piecewise-linear function needs >= 2 breakpoints");
    }
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
      if (!(knots[i] < knots[i + 1])) {
        throw std::invalid_argument("breakpoints must be strictly increasing");
      }
    }
  }

  static PiecewiseLinearFn constant(double c, double lo, double hi) {
    return PiecewiseLinearFn({lo, hi}, {c, c});
  }
  static PiecewiseLinearFn identity(double lo, double hi) {
    return PiecewiseLinearFn({lo, hi}, {lo, hi});
  }
  /// min(x - t, 0): slope 1 left of t, flat right of t. The canonical
  /// perturbation whose directional derivative is the D(t) process.
  static PiecewiseLinearFn left_ramp(double t, double lo, double hi) {
    if (t <= lo || t >= hi) {
      return PiecewiseLinearFn({lo, hi}, {std::min(lo - t, 0.0), std::min(hi - t, 0.0)});
    }
    return PiecewiseLinearFn({lo, t, hi}, {lo - t, 0.0, 0.0});
  }

  double slope(std::size_t seg) const {
    return (values[seg + 1] - values[seg]) / (knots[seg + 1] - knots[seg]);
  }

  double operator()(double x) const {
    if (x <= knots.front()) {
      return values.front() + slope(0) * (x - knots.front());
    }
    if (x >= knots.back()) {
      return values.back() + slope(knots.size() - 2) * (x - knots.back());
    }
    std::size_t lo = 0, hi = knots.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (knots[mid] <= x ? lo : hi) = mid;
    }
    const double t = (x - knots[lo]) / (knots[lo + 1] - knots[lo]);
    return values[lo] + t * (values[lo + 1] - values[lo]);
  }
};

/// c0 + c1 x + c2 x^2. Admissible as a perturbation of a concave log-density
/// iff c2 <= 0 (and in both signs when linear).
struct Quadratic {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double operator()(double x) const { return c0 + x * (c1 + x * c2); }
};

}  // namespace logcon
