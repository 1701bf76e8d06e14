// Exponential moment kernels for integrals of piecewise log-linear densities.
//
// Every closed form in this library reduces to the kernels
//
//   J_k(y) = int_0^1 u^k exp(u*y) du,   k = 0, 1, 2.
//
// A segment [x0, x1] carrying the log-linear piece phi(x0) + u*(phi(x1) - phi(x0)),
// u = (x - x0)/(x1 - x0), has mass (x1 - x0) * exp(phi(x0)) * J_0(phi(x1) - phi(x0)),
// and first/second moment analogues via J_1, J_2. The closed forms
// (e^y - 1)/y etc. cancel catastrophically near y = 0, so below a threshold we
// switch to degree-6 Taylor polynomials in y.

#pragma once

#include <cmath>

namespace logcon {

namespace detail {
inline constexpr double kKernelSeriesThreshold = 1e-4;
}

/// J_0(y) = int_0^1 exp(u*y) du = (e^y - 1)/y, with J_0(0) = 1.
inline double exp_mean_kernel(double y) {
  if (std::abs(y) < detail::kKernelSeriesThreshold) {
    // coefficients 1/(i+1)!
    return 1.0 +
           y * (1.0 / 2 +
                y * (1.0 / 6 +
                     y * (1.0 / 24 +
                          y * (1.0 / 120 + y * (1.0 / 720 + y / 5040)))));
  }
  return std::expm1(y) / y;
}

/// J_1(y) = int_0^1 u exp(u*y) du, with J_1(0) = 1/2.
inline double exp_moment1_kernel(double y) {
  if (std::abs(y) < detail::kKernelSeriesThreshold) {
    // coefficients 1/(i! * (i+2))
    return 1.0 / 2 +
           y * (1.0 / 3 +
                y * (1.0 / 8 +
                     y * (1.0 / 30 +
                          y * (1.0 / 144 + y * (1.0 / 840 + y / 5760)))));
  }
  // (e^y (y-1) + 1)/y^2 rearranged through expm1 to keep the small-y digits.
  return ((y - 1.0) * std::expm1(y) + y) / (y * y);
}

/// J_2(y) = int_0^1 u^2 exp(u*y) du, with J_2(0) = 1/3.
inline double exp_moment2_kernel(double y) {
  if (std::abs(y) < detail::kKernelSeriesThreshold) {
    // coefficients 1/(i! * (i+3))
    return 1.0 / 3 +
           y * (1.0 / 4 +
                y * (1.0 / 10 +
                     y * (1.0 / 36 +
                          y * (1.0 / 168 + y * (1.0 / 960 + y / 6480)))));
  }
  // (e^y (y^2 - 2y + 2) - 2)/y^3 via expm1.
  const double q = y * y - 2.0 * y + 2.0;
  return (q * std::expm1(y) + y * (y - 2.0)) / (y * y * y);
}

/// Inverse of the within-segment conditional CDF of a log-linear piece:
/// returns t in [0, 1] with (e^{t*theta} - 1)/(e^theta - 1) = u, i.e.
/// t = log(1 + (e^theta - 1) u)/theta, and t = u when theta = 0.
/// The second-order expansion below 1e-6 avoids the 0/0 cancellation.
inline double piecewise_exp_inverse(double theta, double u) {
  if (std::abs(theta) < 1e-6) {
    return u + theta * u * (1.0 - u) / 2.0;
  }
  return std::log1p(std::expm1(theta) * u) / theta;
}

}  // namespace logcon
