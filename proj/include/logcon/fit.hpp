// Maximum likelihood estimation of a concave piecewise-linear log-density.
//
// The criterion Psi_n(phi) = int phi dF_n - int exp(phi) dx is smooth and
// strictly concave in the values of phi at the distinct data points; the
// shape constraint is a chain of linear inequalities on consecutive slopes.
// The solver keeps an index set of permitted kinks ("free knots"), solves the
// reduced unconstrained problem by damped Newton (the reduced Hessian is a
// positive-definite tridiagonal Gram matrix of hat functions), and moves
// knots in and out active-set style:
//
//   - if the reduced optimum is concave it is accepted, and the process
//     D(t) = int (Fhat - F_n) is scanned over the data points. D(t) is the
//     directional derivative of Psi_n for the admissible kink perturbation
//     min(x - t, 0), so a positive value names an improving knot to add, and
//     D <= 0 everywhere is precisely the optimality certificate;
//   - otherwise the step is cut at the first blocking slope constraint and
//     the newly collinear knots are pooled away.
//
// Because F_n is constant between consecutive data points and Fhat is
// increasing, D is convex on every step interval, so scanning the data
// points bounds D everywhere. Convergence is declared only by the
// certificate, never by step size. The data are standardized to [0, 1]
// internally; the result is mapped back exactly (knots are the original
// distinct data values).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "logcon/certificate.hpp"
#include "logcon/density.hpp"
#include "logcon/kernels.hpp"
#include "logcon/piecewise.hpp"
#include "logcon/sample.hpp"

namespace logcon {

struct FitConfig {
  double cert_tolerance = 1e-8;     // max allowed characterization violation
  int max_iterations = 500;         // outer active-set iterations
  double line_search_shrink = 0.5;  // backtracking factor in (0, 1)
  enum class Init { gaussian, full_grid };
  /// gaussian: start from the two-knot fit seeded by Gaussian moment values.
  /// full_grid: start from the uniform log-density with every data point
  /// free, reaching the optimum through pooling (used for uniqueness checks).
  Init init = Init::gaussian;
  std::size_t cert_grid_size = 512;
};

struct FitResult {
  PLConcaveLogDensity density;  // normalized, supported on [X_1, X_n]
  double log_likelihood = 0.0;  // Psi_n at the optimum
  int iterations = 0;           // outer iterations used
  CertificateReport certificate;
};

class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

/// Psi_n(phi) = (1/n) sum phi(X_i) - int exp(phi); -infinity iff some
/// observation falls outside the support.
inline double objective(const Sample& s, const PLConcaveLogDensity& d) {
  double data_term = 0.0;
  const double n = static_cast<double>(s.n());
  for (std::size_t k = 0; k < s.distinct().size(); ++k) {
    const double v = d.eval_log(s.distinct()[k]);
    if (!std::isfinite(v)) return -std::numeric_limits<double>::infinity();
    data_term += s.weights()[k] / n * v;
  }
  return data_term - d.total_mass();
}

/// Gateaux derivative of Psi_n at d in direction delta:
/// int delta dF_n - int delta exp(phi) dx. At the MLE this is <= 0 for
/// every admissible perturbation.
inline double directional_derivative(const Sample& s,
                                     const PLConcaveLogDensity& d,
                                     const PiecewiseLinearFn& delta) {
  double data_term = 0.0;
  const double n = static_cast<double>(s.n());
  for (std::size_t k = 0; k < s.distinct().size(); ++k) {
    data_term += s.weights()[k] / n * delta(s.distinct()[k]);
  }
  return data_term - integrate_pl_against_density(d, delta);
}

inline double directional_derivative(const Sample& s,
                                     const PLConcaveLogDensity& d,
                                     const Quadratic& delta) {
  double data_term = 0.0;
  const double n = static_cast<double>(s.n());
  for (std::size_t k = 0; k < s.distinct().size(); ++k) {
    data_term += s.weights()[k] / n * delta(s.distinct()[k]);
  }
  double mass = 0.0, m1 = 0.0, m2 = 0.0;
  d.raw_moments(mass, m1, m2);
  return data_term - (delta.c0 * mass + delta.c1 * m1 + delta.c2 * m2);
}

namespace detail {

struct FitWorkspace {
  std::vector<double> xi;    // distinct standardized values, xi[0]=0, xi[m]=1
  std::vector<double> wn;    // multiplicity / n
  std::vector<double> area;  // int F_n from xi[0] to xi[k], standardized units
};

inline FitWorkspace make_workspace(const Sample& s) {
  FitWorkspace ws;
  const double a = s.min();
  const double c = s.range();
  const std::size_t md = s.distinct().size();
  ws.xi.resize(md);
  ws.wn.resize(md);
  ws.area.resize(md);
  const double n = static_cast<double>(s.n());
  for (std::size_t k = 0; k < md; ++k) {
    ws.xi[k] = (s.distinct()[k] - a) / c;
    ws.wn[k] = s.weights()[k] / n;
    ws.area[k] = s.ecdf_area_at_distinct(k) / c;
  }
  ws.xi.front() = 0.0;
  ws.xi.back() = 1.0;
  return ws;
}

struct Reduced {
  std::vector<std::size_t> idx;  // free-knot indices into the fine grid
  std::vector<double> h;         // coarse spacings
  std::vector<double> dataw;     // data weights folded onto the coarse basis
};

inline Reduced build_reduced(const FitWorkspace& ws,
                             const std::vector<std::size_t>& idx) {
  Reduced r;
  r.idx = idx;
  const std::size_t K = idx.size() - 1;
  r.h.resize(K);
  r.dataw.assign(K + 1, 0.0);
  for (std::size_t seg = 0; seg < K; ++seg) {
    const double lo = ws.xi[idx[seg]];
    const double hi = ws.xi[idx[seg + 1]];
    r.h[seg] = hi - lo;
    for (std::size_t i = idx[seg]; i < idx[seg + 1]; ++i) {
      const double tau = (ws.xi[i] - lo) / (hi - lo);
      r.dataw[seg] += ws.wn[i] * (1.0 - tau);
      r.dataw[seg + 1] += ws.wn[i] * tau;
    }
  }
  r.dataw[K] += ws.wn.back();
  return r;
}

struct MassParts {
  double mass = 0.0;
  std::vector<double> grad;  // d mass / d v_r
  std::vector<double> diag;  // tridiagonal Hessian of mass
  std::vector<double> off;
};

inline MassParts mass_parts(const Reduced& r, const std::vector<double>& v) {
  const std::size_t K = r.h.size();
  MassParts p;
  p.grad.assign(K + 1, 0.0);
  p.diag.assign(K + 1, 0.0);
  p.off.assign(K, 0.0);
  for (std::size_t seg = 0; seg < K; ++seg) {
    const double y = v[seg + 1] - v[seg];
    const double e = r.h[seg] * std::exp(v[seg]);
    const double j0 = exp_mean_kernel(y);
    const double j1 = exp_moment1_kernel(y);
    const double j2 = exp_moment2_kernel(y);
    p.mass += e * j0;
    p.grad[seg] += e * (j0 - j1);
    p.grad[seg + 1] += e * j1;
    p.diag[seg] += e * (j0 - 2.0 * j1 + j2);
    p.diag[seg + 1] += e * j2;
    p.off[seg] += e * (j1 - j2);
  }
  return p;
}

inline double reduced_mass(const Reduced& r, const std::vector<double>& v) {
  double mass = 0.0;
  for (std::size_t seg = 0; seg < r.h.size(); ++seg) {
    mass += r.h[seg] * std::exp(v[seg]) *
            exp_mean_kernel(v[seg + 1] - v[seg]);
  }
  return mass;
}

inline double reduced_psi(const Reduced& r, const std::vector<double>& v) {
  double psi = -reduced_mass(r, v);
  for (std::size_t k = 0; k < v.size(); ++k) psi += r.dataw[k] * v[k];
  return psi;
}

/// LDL^T solve of a symmetric positive-definite tridiagonal system.
inline bool solve_tridiag_spd(std::vector<double> diag, std::vector<double> off,
                              std::vector<double> rhs, std::vector<double>& out) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (!(diag[i - 1] > 0.0)) return false;
    const double l = off[i - 1] / diag[i - 1];
    diag[i] -= l * off[i - 1];
    rhs[i] -= l * rhs[i - 1];
    off[i - 1] = l;
  }
  if (!(diag[n - 1] > 0.0)) return false;
  out.resize(n);
  out[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    out[i] = rhs[i] / diag[i] - off[i] * out[i + 1];
  }
  return true;
}

struct NewtonInfo {
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

/// Damped Newton for the reduced unconstrained problem. Armijo backtracking
/// keeps Psi nondecreasing; near the optimum, where the predicted gain drops
/// below rounding noise, the full step is taken and the loop exits.
inline NewtonInfo newton_reduced(const Reduced& r, std::vector<double>& v,
                                 double shrink) {
  constexpr double kGradTol = 1e-12;
  constexpr int kMaxIter = 80;
  NewtonInfo info;
  std::vector<double> g(v.size()), step;
  for (int it = 0; it < kMaxIter; ++it) {
    MassParts p = mass_parts(r, v);
    double gnorm = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      g[k] = r.dataw[k] - p.grad[k];
      gnorm = std::max(gnorm, std::abs(g[k]));
    }
    info.grad_norm = gnorm;
    info.iterations = it;
    if (gnorm <= kGradTol) return info;

    if (!solve_tridiag_spd(p.diag, p.off, g, step)) {
      double dmax = 0.0;
      for (double x : p.diag) dmax = std::max(dmax, x);
      for (double& x : p.diag) x += 1e-14 * dmax + 1e-300;
      if (!solve_tridiag_spd(p.diag, p.off, g, step)) return info;
    }
    double decrement = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) decrement += g[k] * step[k];
    if (!(decrement > 0.0) || decrement <= 1e-18) {
      if (decrement > 0.0) {
        for (std::size_t k = 0; k < v.size(); ++k) v[k] += step[k];
      }
      return info;
    }
    const double psi0 = reduced_psi(r, v);
    double alpha = 1.0;
    bool accepted = false;
    std::vector<double> trial(v.size());
    while (alpha > 1e-16) {
      for (std::size_t k = 0; k < v.size(); ++k) trial[k] = v[k] + alpha * step[k];
      const double psi1 = reduced_psi(r, trial);
      if (std::isfinite(psi1) && psi1 >= psi0 + 1e-4 * alpha * decrement) {
        v = trial;
        accepted = true;
        break;
      }
      alpha *= shrink;
    }
    if (!accepted) return info;  // at the numerical floor
  }
  return info;
}

inline std::vector<double> coarse_slopes(const Reduced& r,
                                         const std::vector<double>& v) {
  std::vector<double> s(r.h.size());
  for (std::size_t seg = 0; seg < r.h.size(); ++seg) {
    s[seg] = (v[seg + 1] - v[seg]) / r.h[seg];
  }
  return s;
}

inline double slope_scale(const std::vector<double>& s) {
  double m = 0.0;
  for (double x : s) m = std::max(m, std::abs(x));
  return m + 1.0;
}

inline bool is_concave_coarse(const Reduced& r, const std::vector<double>& v) {
  const auto s = coarse_slopes(r, v);
  const double tol = 1e-10 * slope_scale(s);
  for (std::size_t seg = 0; seg + 1 < s.size(); ++seg) {
    if (s[seg + 1] > s[seg] + tol) return false;
  }
  return true;
}

/// Fine-grid expansion of the coarse iterate plus the D(t) process at every
/// distinct data point (standardized units).
struct FineState {
  std::vector<double> phi;
  std::vector<double> fhat;  // unnormalized fitted CDF at data points
  std::vector<double> dproc;
  double mass = 0.0;
};

inline FineState expand_fine(const FitWorkspace& ws,
                             const std::vector<std::size_t>& idx,
                             const std::vector<double>& v) {
  const std::size_t m = ws.xi.size() - 1;
  FineState st;
  st.phi.resize(m + 1);
  for (std::size_t seg = 0; seg + 1 < idx.size(); ++seg) {
    const std::size_t a = idx[seg];
    const std::size_t b = idx[seg + 1];
    const double lo = ws.xi[a];
    const double hi = ws.xi[b];
    for (std::size_t i = a; i < b; ++i) {
      const double tau = (ws.xi[i] - lo) / (hi - lo);
      st.phi[i] = v[seg] + tau * (v[seg + 1] - v[seg]);
    }
  }
  st.phi[m] = v.back();

  st.fhat.resize(m + 1);
  st.dproc.resize(m + 1);
  st.fhat[0] = 0.0;
  st.dproc[0] = 0.0;
  double acc_area = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double h = ws.xi[j + 1] - ws.xi[j];
    const double y = st.phi[j + 1] - st.phi[j];
    const double e = std::exp(st.phi[j]);
    acc_area += st.fhat[j] * h +
                h * h * e * (exp_mean_kernel(y) - exp_moment1_kernel(y));
    st.fhat[j + 1] = st.fhat[j] + h * e * exp_mean_kernel(y);
    st.dproc[j + 1] = acc_area - ws.area[j + 1];
  }
  st.mass = st.fhat[m];
  return st;
}

}  // namespace detail

/// Fits the log-concave NPMLE. Returns only certified results: the
/// Theorem-2.4 characterization must hold within cfg.cert_tolerance, else a
/// FitError with diagnostics is thrown.
inline FitResult fit(const Sample& s, const FitConfig& cfg = {}) {
  if (!(cfg.cert_tolerance > 0.0)) {
    throw std::invalid_argument("cert_tolerance must be positive");
  }
  if (cfg.max_iterations < 1) {
    throw std::invalid_argument("max_iterations must be >= 1");
  }
  if (!(cfg.line_search_shrink > 0.0 && cfg.line_search_shrink < 1.0)) {
    throw std::invalid_argument("line_search_shrink must lie in (0, 1)");
  }

  const detail::FitWorkspace ws = detail::make_workspace(s);
  const std::size_t m = ws.xi.size() - 1;
  const double release_tol = 0.5 * cfg.cert_tolerance;

  std::vector<std::size_t> idx;
  std::vector<double> v;
  if (cfg.init == FitConfig::Init::gaussian || m == 1) {
    double mean = 0.0, var = 0.0;
    for (std::size_t k = 0; k <= m; ++k) mean += ws.wn[k] * ws.xi[k];
    for (std::size_t k = 0; k <= m; ++k) {
      const double d = ws.xi[k] - mean;
      var += ws.wn[k] * d * d;
    }
    var = std::max(var, 1e-6);
    auto gauss = [&](double x) {
      return -0.5 * std::log(2.0 * std::numbers::pi * var) -
             (x - mean) * (x - mean) / (2.0 * var);
    };
    idx = {0, m};
    v = {gauss(0.0), gauss(1.0)};
  } else {
    idx.resize(m + 1);
    for (std::size_t k = 0; k <= m; ++k) idx[k] = k;
    v.assign(m + 1, 0.0);  // uniform density on the standardized support
  }

  int outer = 0;
  bool converged = false;
  double d_best_seen = std::numeric_limits<double>::quiet_NaN();
  double psi_track = -std::numeric_limits<double>::infinity();
  double worst_descent = 0.0;
  std::vector<char> recently_pooled(m + 1, 0);
  double psi_at_guard = -std::numeric_limits<double>::infinity();

  detail::Reduced red = detail::build_reduced(ws, idx);
  for (outer = 1; outer <= cfg.max_iterations; ++outer) {
    std::vector<double> cand = v;
    detail::newton_reduced(red, cand, cfg.line_search_shrink);

    if (detail::is_concave_coarse(red, cand)) {
      const double psi_new = detail::reduced_psi(red, cand);
      if (std::isfinite(psi_track)) {
        worst_descent = std::max(worst_descent, psi_track - psi_new);
      }
      psi_track = psi_new;
      v = cand;
      if (psi_track > psi_at_guard + 1e-12 * (1.0 + std::abs(psi_track))) {
        std::fill(recently_pooled.begin(), recently_pooled.end(), 0);
        psi_at_guard = psi_track;
      }

      const detail::FineState st = detail::expand_fine(ws, idx, v);
      double d_best = -std::numeric_limits<double>::infinity();
      std::size_t best = 0;
      double d_allowed = -std::numeric_limits<double>::infinity();
      std::size_t allowed = 0;
      for (std::size_t i = 1; i < m; ++i) {
        if (st.dproc[i] > d_best) {
          d_best = st.dproc[i];
          best = i;
        }
        if (!recently_pooled[i] && st.dproc[i] > d_allowed) {
          d_allowed = st.dproc[i];
          allowed = i;
        }
      }
      d_best_seen = d_best;
      if (d_best <= release_tol || m == 1) {
        converged = true;
        break;
      }
      std::size_t pick = best;
      if (recently_pooled[best]) {
        if (d_allowed > release_tol) {
          pick = allowed;
        } else {
          break;  // only cycling candidates remain; let the certificate decide
        }
      }
      const auto pos = std::lower_bound(idx.begin(), idx.end(), pick);
      const std::size_t at = static_cast<std::size_t>(pos - idx.begin());
      idx.insert(pos, pick);
      v.insert(v.begin() + static_cast<std::ptrdiff_t>(at), st.phi[pick]);
      red = detail::build_reduced(ws, idx);
      continue;
    }

    // Blocked: cut the step at the first slope constraint it violates and
    // pool the knots that became collinear.
    const auto s_cur = detail::coarse_slopes(red, v);
    const auto s_cand = detail::coarse_slopes(red, cand);
    const std::size_t K = red.h.size();
    double alpha = 1.0;
    for (std::size_t rk = 1; rk < K; ++rk) {
      const double c_cur = s_cur[rk - 1] - s_cur[rk];
      const double c_cand = s_cand[rk - 1] - s_cand[rk];
      if (c_cand < 0.0) {
        const double a = c_cur <= 0.0 ? 0.0 : c_cur / (c_cur - c_cand);
        alpha = std::min(alpha, a);
      }
    }
    std::vector<double> vnew(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      vnew[k] = v[k] + alpha * (cand[k] - v[k]);
    }
    const auto s_new = detail::coarse_slopes(red, vnew);
    const double bind_tol = 1e-11 * detail::slope_scale(s_new);
    std::vector<std::size_t> remove;
    for (std::size_t rk = 1; rk < K; ++rk) {
      const double c_cand = s_cand[rk - 1] - s_cand[rk];
      if (c_cand < 0.0 && s_new[rk - 1] - s_new[rk] <= bind_tol) {
        remove.push_back(rk);
      }
    }
    if (remove.empty()) {
      // numerically blocked without a clean bind: pool the worst offender
      std::size_t worst = 1;
      double cmin = std::numeric_limits<double>::infinity();
      for (std::size_t rk = 1; rk < K; ++rk) {
        const double c = s_cand[rk - 1] - s_cand[rk];
        if (c < cmin) {
          cmin = c;
          worst = rk;
        }
      }
      remove.push_back(worst);
    }
    const double psi_new = detail::reduced_psi(red, vnew);
    if (std::isfinite(psi_track)) {
      worst_descent = std::max(worst_descent, psi_track - psi_new);
    }
    psi_track = psi_new;
    for (std::size_t q = remove.size(); q-- > 0;) {
      const std::size_t rk = remove[q];
      recently_pooled[idx[rk]] = 1;
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(rk));
      vnew.erase(vnew.begin() + static_cast<std::ptrdiff_t>(rk));
    }
    v = std::move(vnew);
    red = detail::build_reduced(ws, idx);
  }
  outer = std::min(outer, cfg.max_iterations);

  // Map back to original units (knots are the exact distinct data values)
  // and normalize by a log shift.
  const detail::FineState st = detail::expand_fine(ws, idx, v);
  const double log_c = std::log(s.range());
  const double log_mass = std::log(st.mass);
  std::vector<double> values(m + 1);
  for (std::size_t k = 0; k <= m; ++k) {
    values[k] = st.phi[k] - log_mass - log_c;
  }
  PLConcaveLogDensity density =
      PLConcaveLogDensity::make(s.distinct(), std::move(values)).normalize();

  FitResult result{std::move(density), 0.0, outer, CertificateReport{}};
  result.certificate = check_integral_characterization(
      s, result.density, cfg.cert_grid_size, cfg.cert_tolerance);
  result.log_likelihood = objective(s, result.density);

  if (!result.certificate.passes()) {
    std::ostringstream os;
    os << "fit did not reach the optimality certificate: "
       << (converged ? "release scan converged but certificate failed"
                     : "iteration budget exhausted")
       << "; outer iterations " << outer << ", last release max D "
       << d_best_seen << ", max inequality violation "
       << result.certificate.max_inequality_violation
       << ", max knot equality gap "
       << result.certificate.max_knot_equality_gap << ", mean gap "
       << result.certificate.mean_gap << ", worst ascent violation "
       << worst_descent;
    throw FitError(os.str());
  }
  return result;
}

}  // namespace logcon
