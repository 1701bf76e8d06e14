// JSON and TSV serialization.
//
// Fit JSON: { "knots": [...], "log_values": [...], "normalized": bool }.
// nlohmann/json emits shortest round-trip doubles, so a serialized fit parses
// back bit-exactly for finite values. Loading uses the unchecked constructor:
// structural invariants are enforced, concavity is left to the certificate
// checks so that deliberately perturbed fits can be diagnosed rather than
// rejected at parse time.

#pragma once

#include <charconv>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "logcon/certificate.hpp"
#include "logcon/density.hpp"
#include "logcon/estimators.hpp"
#include "logcon/studies.hpp"

namespace logcon {

using json = nlohmann::json;

/// Shortest round-trip decimal representation (locale-independent).
inline std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

inline json density_to_json(const PLConcaveLogDensity& d) {
  return json{{"knots", d.knots()},
              {"log_values", d.log_values()},
              {"normalized", d.normalized()}};
}

inline PLConcaveLogDensity density_from_json(const json& j) {
  if (!j.contains("knots") || !j.contains("log_values")) {
    throw std::invalid_argument("fit JSON needs 'knots' and 'log_values'");
  }
  return PLConcaveLogDensity::make_unchecked(
      j.at("knots").get<std::vector<double>>(),
      j.at("log_values").get<std::vector<double>>(),
      j.value("normalized", false));
}

inline json smoothed_to_json(const SmoothedDensity& sd) {
  json j = density_to_json(sd.base);
  j["gamma_sq"] = sd.gamma_sq;
  j["sigma_hat_sq"] = sd.sigma_hat_sq;
  return j;
}

inline SmoothedDensity smoothed_from_json(const json& j) {
  if (!j.contains("gamma_sq") || !j.contains("sigma_hat_sq")) {
    throw std::invalid_argument(
        "smoothed fit JSON needs 'gamma_sq' and 'sigma_hat_sq'");
  }
  return SmoothedDensity{density_from_json(j), j.at("gamma_sq").get<double>(),
                         j.at("sigma_hat_sq").get<double>()};
}

inline json certificate_to_json(const CertificateReport& rep) {
  std::vector<double> ts, ds;
  ts.reserve(rep.d_process.size());
  ds.reserve(rep.d_process.size());
  for (const auto& [t, dv] : rep.d_process) {
    ts.push_back(t);
    ds.push_back(dv);
  }
  return json{{"tolerance", rep.tolerance},
              {"max_inequality_violation", rep.max_inequality_violation},
              {"max_knot_equality_gap", rep.max_knot_equality_gap},
              {"mean_gap", rep.mean_gap},
              {"variance_slack", rep.variance_slack},
              {"knot_bracket_ok", rep.knot_bracket_ok},
              {"knot_bracket_worst_gap", rep.knot_bracket_worst_gap},
              {"passed", rep.passes()},
              {"knots", rep.knot_values},
              {"d_process", {{"t", ts}, {"d", ds}}}};
}

/// Two-column table of the D(t) process (original units), for plotting.
inline void write_d_process_tsv(std::ostream& os, const CertificateReport& rep) {
  os << "t\td\n";
  for (const auto& [t, dv] : rep.d_process) {
    os << format_double(t) << '\t' << format_double(dv) << '\n';
  }
}

inline const char* study_kind_name(StudyKind k) {
  switch (k) {
    case StudyKind::rate: return "rate";
    case StudyKind::equivalence: return "equivalence";
    case StudyKind::gap: return "gap";
    case StudyKind::marshall: return "marshall";
  }
  return "unknown";
}

inline void write_study_raw_tsv(std::ostream& os, const StudyReport& rep) {
  switch (rep.kind) {
    case StudyKind::rate:
      os << "n\trep\tsup_log_error\n";
      break;
    case StudyKind::equivalence:
      os << "n\trep\tsup_cdf_gap\tsqrt_n_gap\n";
      break;
    case StudyKind::gap:
      os << "n\trep\tknot_gap\n";
      break;
    case StudyKind::marshall:
      os << "n\trep\tholds\tsup_dist_fit\tsup_dist_ecdf\n";
      break;
  }
  for (const auto& row : rep.rows) {
    os << row.n << '\t' << row.rep << '\t' << format_double(row.value);
    if (rep.kind == StudyKind::equivalence) {
      os << '\t' << format_double(row.aux1);
    } else if (rep.kind == StudyKind::marshall) {
      os << '\t' << format_double(row.aux1) << '\t' << format_double(row.aux2);
    }
    os << '\n';
  }
}

inline void write_study_summary_tsv(std::ostream& os, const StudyReport& rep) {
  os << "n\tused\tfailed\tmedian";
  if (rep.kind == StudyKind::equivalence) os << "\tsqrt_n_median";
  if (rep.kind == StudyKind::marshall) os << "\tfraction_holds";
  os << '\n';
  for (const auto& ps : rep.per_size) {
    os << ps.n << '\t' << ps.used << '\t' << ps.failed << '\t'
       << format_double(ps.median);
    if (rep.kind == StudyKind::equivalence) {
      os << '\t'
         << format_double(std::sqrt(static_cast<double>(ps.n)) * ps.median);
    }
    if (rep.kind == StudyKind::marshall) os << '\t' << format_double(ps.mean);
    os << '\n';
  }
}

inline json study_summary_json(const StudyReport& rep) {
  json per = json::array();
  for (const auto& ps : rep.per_size) {
    per.push_back(json{{"n", ps.n},
                       {"used", ps.used},
                       {"failed", ps.failed},
                       {"median", ps.median},
                       {"mean", ps.mean}});
  }
  json j{{"study", study_kind_name(rep.kind)},
         {"per_size", per},
         {"notes", rep.notes}};
  if (rep.slope_log_n.points >= 2) {
    j["slope_log_n"] = {{"slope", rep.slope_log_n.slope},
                        {"std_error", rep.slope_log_n.std_error},
                        {"points", rep.slope_log_n.points}};
    j["slope_rho"] = {{"slope", rep.slope_rho.slope},
                      {"std_error", rep.slope_rho.std_error},
                      {"points", rep.slope_rho.points}};
  }
  if (rep.kind == StudyKind::marshall) {
    j["fraction_holds"] = rep.marshall_fraction;
  }
  return j;
}

}  // namespace logcon
