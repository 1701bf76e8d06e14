// Command-line front end: fit / check / sample / smooth / hazard on user
// data, plus the seeded Monte-Carlo studies.
//
// Exit codes: 0 success (all checks passed), 1 usage or data error,
// 2 certificate failure, 3 study-quality failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "logcon/logcon.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitCertificate = 2;
constexpr int kExitStudyQuality = 3;

logcon::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fit file: " + path);
  logcon::json j;
  in >> j;
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

std::ostream& stream_or_stdout(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot write file: " + path);
  return file;
}

struct FitArgs {
  std::string input;
  std::string out;
  std::string cert;
  std::string dtsv;
  double tol = 1e-8;
  std::size_t grid = 512;
};

int run_fit(const FitArgs& a) {
  const logcon::Sample s = logcon::read_sample_file(a.input);
  logcon::FitConfig cfg;
  cfg.cert_tolerance = a.tol;
  cfg.cert_grid_size = a.grid;
  logcon::FitResult fr = [&] {
    try {
      return logcon::fit(s, cfg);
    } catch (const logcon::FitError& e) {
      std::cerr << "fit failed: " << e.what() << "\n";
      std::exit(kExitCertificate);
    }
  }();
  write_text_file(a.out, logcon::density_to_json(fr.density).dump(2) + "\n");
  if (!a.cert.empty()) {
    write_text_file(a.cert,
                    logcon::certificate_to_json(fr.certificate).dump(2) + "\n");
  }
  if (!a.dtsv.empty()) {
    std::ofstream out(a.dtsv);
    if (!out) throw std::runtime_error("cannot write file: " + a.dtsv);
    logcon::write_d_process_tsv(out, fr.certificate);
  }
  std::cout << "fit: n=" << s.n() << " knots=" << logcon::knot_set(fr.density).size()
            << " logLik=" << logcon::format_double(fr.log_likelihood)
            << " iterations=" << fr.iterations << " certificate=passed\n";
  return kExitOk;
}

struct CheckArgs {
  std::string fit;
  std::string data;
  std::string out;
  std::string dtsv;
  double tol = 1e-8;
  std::size_t grid = 512;
};

int run_check(const CheckArgs& a) {
  const logcon::Sample s = logcon::read_sample_file(a.data);
  const logcon::PLConcaveLogDensity d =
      logcon::density_from_json(load_json_file(a.fit));
  const logcon::CertificateReport rep =
      logcon::check_integral_characterization(s, d, a.grid, a.tol);
  logcon::json j = logcon::certificate_to_json(rep);
  j["log_concave"] = d.is_concave();
  std::cout << j.dump(2) << "\n";
  if (!a.out.empty()) write_text_file(a.out, j.dump(2) + "\n");
  if (!a.dtsv.empty()) {
    std::ofstream out(a.dtsv);
    if (!out) throw std::runtime_error("cannot write file: " + a.dtsv);
    logcon::write_d_process_tsv(out, rep);
  }
  if (!rep.passes() || !d.is_concave()) {
    std::cerr << "certificate failed:";
    if (!d.is_concave()) std::cerr << " log_concavity";
    if (rep.max_inequality_violation > a.tol) std::cerr << " integral_inequality";
    if (rep.max_knot_equality_gap > a.tol) std::cerr << " knot_equality";
    if (rep.mean_gap > a.tol) std::cerr << " mean_equality";
    if (rep.variance_slack < -a.tol) std::cerr << " variance_inequality";
    if (rep.knot_bracket_worst_gap > a.tol) std::cerr << " knot_bracket";
    std::cerr << "\n";
    return kExitCertificate;
  }
  return kExitOk;
}

struct SampleArgs {
  std::string fit;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t count = 1;
  bool smoothed = false;
};

int run_sample(const SampleArgs& a) {
  const logcon::json j = load_json_file(a.fit);
  std::vector<double> draws;
  if (a.smoothed) {
    draws = logcon::sample_smoothed(logcon::smoothed_from_json(j), a.seed, a.count);
  } else {
    draws = logcon::sample_fit(logcon::density_from_json(j), a.seed, a.count);
  }
  std::ofstream file;
  std::ostream& os = stream_or_stdout(file, a.out);
  for (double x : draws) os << logcon::format_double(x) << '\n';
  return kExitOk;
}

struct SmoothArgs {
  std::string fit;
  std::string data;
  std::string out;
  std::string grid_tsv;
  std::size_t grid = 200;
};

int run_smooth(const SmoothArgs& a) {
  const logcon::Sample s = logcon::read_sample_file(a.data);
  logcon::PLConcaveLogDensity d = logcon::density_from_json(load_json_file(a.fit));
  if (!d.normalized()) d = d.normalize();
  const logcon::SmoothedDensity sd = logcon::make_smoothed(d, s);
  write_text_file(a.out, logcon::smoothed_to_json(sd).dump(2) + "\n");
  if (!a.grid_tsv.empty()) {
    std::ofstream out(a.grid_tsv);
    if (!out) throw std::runtime_error("cannot write file: " + a.grid_tsv);
    const double g = std::sqrt(sd.gamma_sq);
    const double lo = d.support_min() - 4.0 * g;
    const double hi = d.support_max() + 4.0 * g;
    out << "x\tdensity\n";
    for (std::size_t k = 0; k < a.grid; ++k) {
      const double x = lo + (hi - lo) * static_cast<double>(k) /
                               static_cast<double>(a.grid - 1);
      out << logcon::format_double(x) << '\t'
          << logcon::format_double(logcon::smoothed_density_eval(sd, x)) << '\n';
    }
  }
  std::cout << "smooth: gamma_sq=" << logcon::format_double(sd.gamma_sq)
            << " sigma_hat_sq=" << logcon::format_double(sd.sigma_hat_sq) << "\n";
  return kExitOk;
}

struct HazardArgs {
  std::string fit;
  std::string out;
  std::size_t grid = 200;
  double max_x = std::numeric_limits<double>::quiet_NaN();
};

int run_hazard(const HazardArgs& a) {
  const logcon::PLConcaveLogDensity d =
      logcon::density_from_json(load_json_file(a.fit));
  const double lo = d.support_min();
  const double hi_default = lo + 0.99 * (d.support_max() - lo);
  const double hi = std::isnan(a.max_x) ? hi_default : a.max_x;
  if (hi >= d.support_max()) {
    throw std::runtime_error("hazard grid must stay below X_n");
  }
  std::ofstream file;
  std::ostream& os = stream_or_stdout(file, a.out);
  os << "x\thazard\n";
  for (std::size_t k = 0; k < a.grid; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) /
                             static_cast<double>(a.grid - 1);
    os << logcon::format_double(x) << '\t'
       << logcon::format_double(logcon::hazard_eval(d, x)) << '\n';
  }
  return kExitOk;
}

struct StudyArgs {
  std::string kind;
  std::string dist = "gumbel";
  double shape = 2.0;
  std::vector<int> sizes = {200, 400, 800, 1600, 3200, 6400};
  int reps = 50;
  std::vector<double> interval = {-1.0, 3.0};
  double beta = 2.0;
  std::uint64_t seed = 1;
  int grid = 1000;
  double tol = 1e-8;
  std::string out;
};

int run_study_cmd(const StudyArgs& a) {
  logcon::StudyConfig cfg;
  if (a.dist == "gumbel") {
    cfg.distribution = logcon::Distribution::gumbel;
  } else if (a.dist == "normal") {
    cfg.distribution = logcon::Distribution::normal;
  } else if (a.dist == "gamma") {
    cfg.distribution = logcon::Distribution::gamma;
  } else {
    throw std::invalid_argument("unknown distribution: " + a.dist);
  }
  cfg.gamma_shape = a.shape;
  cfg.sample_sizes = a.sizes;
  cfg.replications = a.reps;
  cfg.interval_a = a.interval.at(0);
  cfg.interval_b = a.interval.at(1);
  cfg.shrink_exponent = a.beta;
  cfg.seed = a.seed;
  cfg.grid_points = a.grid;
  cfg.fit.cert_tolerance = a.tol;

  logcon::StudyReport rep;
  try {
    if (a.kind == "rate") {
      rep = logcon::run_rate_study(cfg);
    } else if (a.kind == "equivalence") {
      rep = logcon::run_equivalence_study(cfg);
    } else if (a.kind == "gap") {
      rep = logcon::run_gap_study(cfg);
    } else if (a.kind == "marshall") {
      rep = logcon::run_marshall_study(cfg);
    } else {
      throw std::invalid_argument("unknown study kind: " + a.kind);
    }
  } catch (const logcon::StudyError& e) {
    std::cerr << "study failed: " << e.what() << "\n";
    return kExitStudyQuality;
  }

  {
    std::ofstream raw(a.out + ".raw.tsv");
    if (!raw) throw std::runtime_error("cannot write " + a.out + ".raw.tsv");
    logcon::write_study_raw_tsv(raw, rep);
  }
  {
    std::ofstream sum(a.out + ".summary.tsv");
    if (!sum) throw std::runtime_error("cannot write " + a.out + ".summary.tsv");
    logcon::write_study_summary_tsv(sum, rep);
  }
  const logcon::json sj = logcon::study_summary_json(rep);
  write_text_file(a.out + ".summary.json", sj.dump(2) + "\n");
  std::cout << sj.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"log-concave maximum likelihood density estimation toolkit"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* cmd_fit = app.add_subcommand("fit", "fit the log-concave NPMLE to data");
  cmd_fit->add_option("input", fit_args.input, "data file, one number per line")
      ->required();
  cmd_fit->add_option("-o,--out", fit_args.out, "output fit JSON")->required();
  cmd_fit->add_option("--cert", fit_args.cert, "output certificate JSON");
  cmd_fit->add_option("--dtsv", fit_args.dtsv, "output D(t) process TSV");
  cmd_fit->add_option("--tol", fit_args.tol, "certificate tolerance");
  cmd_fit->add_option("--grid", fit_args.grid, "certificate grid size");

  CheckArgs check_args;
  auto* cmd_check =
      app.add_subcommand("check", "verify the optimality certificate of a fit");
  cmd_check->add_option("fit", check_args.fit, "fit JSON")->required();
  cmd_check->add_option("data", check_args.data, "data file")->required();
  cmd_check->add_option("--out", check_args.out, "also write report JSON here");
  cmd_check->add_option("--dtsv", check_args.dtsv, "output D(t) process TSV");
  cmd_check->add_option("--tol", check_args.tol, "certificate tolerance");
  cmd_check->add_option("--grid", check_args.grid, "certificate grid size");

  SampleArgs sample_args;
  auto* cmd_sample = app.add_subcommand("sample", "draw from a fitted density");
  cmd_sample->add_option("fit", sample_args.fit, "fit JSON (smoothed JSON with --smoothed)")
      ->required();
  cmd_sample->add_option("--count", sample_args.count, "number of draws")
      ->required();
  cmd_sample->add_option("--seed", sample_args.seed, "generator seed");
  cmd_sample->add_flag("--smoothed", sample_args.smoothed,
                       "draw from the smoothed estimator");
  cmd_sample->add_option("--out", sample_args.out, "output file ('-' = stdout)");

  SmoothArgs smooth_args;
  auto* cmd_smooth =
      app.add_subcommand("smooth", "Gaussian-smoothed estimator from a fit");
  cmd_smooth->add_option("fit", smooth_args.fit, "fit JSON")->required();
  cmd_smooth->add_option("data", smooth_args.data, "data file (for sigma_hat^2)")
      ->required();
  cmd_smooth->add_option("-o,--out", smooth_args.out, "output smoothed JSON")
      ->required();
  cmd_smooth->add_option("--grid-tsv", smooth_args.grid_tsv,
                         "output (x, f*(x)) grid TSV");
  cmd_smooth->add_option("--grid", smooth_args.grid, "grid size");

  HazardArgs hazard_args;
  auto* cmd_hazard = app.add_subcommand("hazard", "hazard rate grid of a fit");
  cmd_hazard->add_option("fit", hazard_args.fit, "fit JSON")->required();
  cmd_hazard->add_option("--out", hazard_args.out, "output TSV ('-' = stdout)");
  cmd_hazard->add_option("--grid", hazard_args.grid, "grid size");
  cmd_hazard->add_option("--max", hazard_args.max_x,
                         "last grid point (must be < X_n)");

  StudyArgs study_args;
  auto* cmd_study = app.add_subcommand("study", "seeded Monte-Carlo studies");
  cmd_study
      ->add_option("kind", study_args.kind, "rate | equivalence | gap | marshall")
      ->required();
  cmd_study->add_option("--dist", study_args.dist, "gumbel | normal | gamma");
  cmd_study->add_option("--shape", study_args.shape, "gamma shape (>= 1)");
  cmd_study->add_option("--sizes", study_args.sizes, "sample sizes")
      ->delimiter(',');
  cmd_study->add_option("--reps", study_args.reps, "replications per size");
  cmd_study->add_option("--interval", study_args.interval, "compact interval A B")
      ->expected(2);
  cmd_study->add_option("--beta", study_args.beta, "Hoelder exponent in [1, 2]");
  cmd_study->add_option("--seed", study_args.seed, "master seed");
  cmd_study->add_option("--grid", study_args.grid, "sup-norm grid points");
  cmd_study->add_option("--tol", study_args.tol, "fit certificate tolerance");
  cmd_study->add_option("-o,--out", study_args.out, "output path prefix")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*cmd_fit) return run_fit(fit_args);
    if (*cmd_check) return run_check(check_args);
    if (*cmd_sample) return run_sample(sample_args);
    if (*cmd_smooth) return run_smooth(smooth_args);
    if (*cmd_hazard) return run_hazard(hazard_args);
    if (*cmd_study) return run_study_cmd(study_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
