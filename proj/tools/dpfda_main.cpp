#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpfda/bench.hpp"
#include "dpfda/estimators.hpp"
#include "dpfda/fednet.hpp"

namespace {

using namespace dpfda;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path);
  }
  return out;
}

int cmd_simulate(const std::string& config_path, const std::string& section,
                 const std::string& out_path, const std::string& transcripts_path) {
  std::ifstream config(config_path);
  if (!config) {
    throw std::runtime_error("cannot open config file: " + config_path);
  }
  const bench::ExperimentSpec spec = bench::parse_spec(config, section);
  const bench::MonteCarloResults results = bench::run_monte_carlo(spec);
  auto out = open_output(out_path);
  bench::write_results_csv(results, out);
  if (!transcripts_path.empty()) {
    const fednet::ProtocolRun protocol = bench::sample_protocol_run(spec);
    auto log_out = open_output(transcripts_path);
    fednet::export_transcripts(protocol, log_out);
    std::cout << "simulate: transcript log of one replicate -> " << transcripts_path
              << "\n";
  }
  int failed_cells = 0;
  for (const auto& cell : results.cells) {
    if (!cell.error.empty()) {
      ++failed_cells;
    }
  }
  std::cout << "simulate: " << results.cells.size() << " cells, "
            << spec.replicates << " replicates each -> " << out_path << "\n";
  if (failed_cells > 0) {
    std::cout << "simulate: " << failed_cells
              << " cells recorded errors (see trailing comments)\n";
  }
  return 0;
}

int cmd_rates(double n, double m, double eps, int S, int d, double alpha) {
  const auto rows = bench::rate_table(n, m, eps, S, d, alpha);
  std::cout << "setting,nonprivate-sparse,private-sparse,nonprivate-dense,"
               "private-dense,dominant\n";
  for (const auto& row : rows) {
    std::cout << row.setting;
    for (const auto& term : row.terms) {
      std::cout << ',' << fmt(term.value);
    }
    std::cout << ',' << row.terms[row.dominant].name << "\n";
  }
  return 0;
}

int cmd_phase(double n, double m, double eps, double alpha) {
  const bench::PhaseRegion region = bench::phase_region(n, m, eps, alpha);
  std::cout << "region: " << region.label << "\n";
  std::cout << "rate: " << region.rate << " = " << fmt(region.rate_value) << "\n";
  std::cout << "boundary: " << (region.on_boundary ? "yes" : "no") << "\n";
  for (const auto& [name, log_ratio] : region.boundary_log10_ratios) {
    std::cout << "log10 " << name << " = " << fmt(log_ratio) << "\n";
  }
  return 0;
}

struct FitOptions {
  std::string input;
  std::string out_path;
  bool normalize = false;
  bool reflect = false;
  bool noise_off = false;
  double eps = 1.0;
  double delta = 1e-3;
  int r = 3;
  double rho = 0.1;
  double c_R = 0.75;
  double c_T = 4.0;
  double eta = 0.05;
  double alpha = 3.0;
  double c_alpha = 0.0;
  std::uint64_t seed = 0;
  int samples = 201;
};

int cmd_fit(const FitOptions& opt) {
  const bench::IngestResult data = bench::ingest_csv(opt.input, opt.normalize);
  if (data.is_vcm && opt.reflect) {
    throw std::runtime_error("--reflect applies to mean-model data only");
  }
  const double c_alpha = opt.c_alpha > 0.0 ? opt.c_alpha : default_c_alpha();
  const EllipsoidSpec spec(SobolevParams(opt.alpha, c_alpha), opt.r);
  const PrivacyBudget budget =
      opt.noise_off ? PrivacyBudget::disabled() : PrivacyBudget(opt.eps, opt.delta);

  GdConfig cfg;
  cfg.r = opt.r;
  cfg.rho = opt.rho;
  cfg.eta = opt.eta;
  cfg.c_r_const = opt.c_R;
  cfg.seed = opt.seed;
  cfg.noise_enabled = !opt.noise_off;

  auto out = open_output(opt.out_path);
  out << "# dpfda 0.1.0 fit\n";
  out << "# input=" << opt.input << " normalize=" << (opt.normalize ? "on" : "off")
      << " reflect=" << (opt.reflect ? "on" : "off") << " noise="
      << (opt.noise_off ? "off" : "on") << "\n";
  out << "# eps=" << fmt(opt.eps) << " delta=" << fmt(opt.delta) << " r=" << opt.r
      << " rho=" << fmt(opt.rho) << " c_R=" << fmt(opt.c_R) << " c_T="
      << fmt(opt.c_T) << " eta=" << fmt(opt.eta) << " alpha=" << fmt(opt.alpha)
      << " c_alpha=" << fmt(c_alpha) << " seed=" << opt.seed << "\n";

  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(opt.samples, 0.0, 1.0);
  if (!data.is_vcm) {
    const MeanDataset fit_data =
        opt.reflect ? bench::reflect_domain(data.mean) : data.mean;
    const int n = fit_data.n();
    cfg.T = std::min(n, default_rounds(n, opt.c_T));
    const EstimationReport report = dp_mean_cdp(fit_data, cfg, budget, spec);
    out << "# coefficients";
    for (int i = 0; i < opt.r; ++i) {
      out << ' ' << fmt(report.coefficients(i));
    }
    out << "\n";
    out << "x,mu_hat\n";
    for (int p = 0; p < opt.samples; ++p) {
      const double u = grid(p);
      const double value = opt.reflect
                               ? bench::eval_reflected(report.coefficients, u)
                               : eval_function(report.coefficients, u);
      out << fmt(data.x_map.from_unit(u)) << ',' << fmt(data.y_map.from_unit(value))
          << "\n";
    }
    std::cout << "fit: n=" << data.mean.n() << " T=" << cfg.T << " -> "
              << opt.out_path << "\n";
  } else {
    const int n = data.vcm.n();
    const int d = data.vcm.d();
    cfg.T = std::min(n, default_rounds(n, opt.c_T));
    const EstimationReport report = dp_vcm_cdp(data.vcm, cfg, budget, spec);
    out << "# coefficients";
    for (Eigen::Index i = 0; i < report.coefficients.size(); ++i) {
      out << ' ' << fmt(report.coefficients(i));
    }
    out << "\n";
    out << "x";
    for (int k = 0; k <= d; ++k) {
      out << ",beta_" << k;
    }
    out << "\n";
    for (int p = 0; p < opt.samples; ++p) {
      const double u = grid(p);
      out << fmt(data.x_map.from_unit(u));
      for (int k = 0; k <= d; ++k) {
        const double value =
            eval_function(report.coefficients.segment(
                              static_cast<Eigen::Index>(k) * opt.r, opt.r),
                          u);
        out << ',' << fmt(data.y_map.from_unit(value));
      }
      out << "\n";
    }
    std::cout << "fit: n=" << n << " d=" << d << " T=" << cfg.T << " -> "
              << opt.out_path << "\n";
  }
  return 0;
}

int cmd_realdata(const std::string& input, bool no_normalize,
                 const bench::RealDataOptions& options, const std::string& out_path,
                 const std::string& bands_path) {
  const bench::IngestResult data = bench::ingest_csv(input, !no_normalize);
  const bench::RealDataResults results = bench::real_data_pipeline(data, options);
  auto out = open_output(out_path);
  bench::write_realdata_csv(results, out);
  if (!bands_path.empty()) {
    auto bands = open_output(bands_path);
    bench::write_bands_csv(results, bands);
  }
  std::cout << "realdata: n_train=" << results.n_train << " n_test="
            << results.n_test << " replicates=" << options.replicates << " -> "
            << out_path << "\n";
  return 0;
}

int cmd_audit(const std::string& log_path) {
  std::ifstream in(log_path);
  if (!in) {
    throw std::runtime_error("cannot open transcript log: " + log_path);
  }
  const fednet::ProtocolRun run = fednet::import_transcripts(in);
  const fednet::AuditReport report = fednet::audit_run(run, {});
  if (report.non_private_mode) {
    std::cout << "WARNING non-private mode: this run released unnoised payloads\n";
  }
  for (const auto& check : report.checks) {
    std::cout << (check.passed ? "pass" : "FAIL") << ' ' << check.name;
    if (!check.detail.empty()) {
      std::cout << ": " << check.detail;
    }
    std::cout << "\n";
  }
  std::cout << (report.passed ? "audit passed" : "audit failed") << " (" << run.run_id
            << ", " << run.log.size() << " transcripts)\n";
  return report.passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private functional data analysis simulator"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment");
  std::string config_path, section, sim_out;
  simulate->add_option("--config", config_path, "experiment config file")->required();
  simulate->add_option("--section", section, "config section to run");
  simulate->add_option("--out", sim_out, "results CSV path")->required();
  std::string sim_transcripts;
  simulate->add_option("--transcripts", sim_transcripts,
                       "also export one replicate's transcript log (FDP only)");

  auto* rates = app.add_subcommand("rates", "Print the error-rate table");
  double rn = 250, rm = 10, reps_v = 1.0, ralpha = 3.0;
  int rS = 1, rd = 1;
  rates->add_option("--n", rn);
  rates->add_option("--m", rm);
  rates->add_option("--eps", reps_v);
  rates->add_option("--S", rS);
  rates->add_option("--d", rd);
  rates->add_option("--alpha", ralpha);

  auto* phase = app.add_subcommand("phase", "Classify the privacy/sampling regime");
  double pn = 250, pm = 10, peps = 1.0, palpha = 3.0;
  phase->add_option("--n", pn);
  phase->add_option("--m", pm);
  phase->add_option("--eps", peps);
  phase->add_option("--alpha", palpha);

  auto* fit = app.add_subcommand("fit", "Estimate from a longitudinal CSV");
  FitOptions fopt;
  fit->add_option("--input", fopt.input, "CSV with subject_id,x,y[,g_1..g_d]")
      ->required();
  fit->add_option("--out", fopt.out_path, "output CSV path")->required();
  fit->add_flag("--normalize", fopt.normalize, "min-max normalize x and y");
  fit->add_flag("--reflect", fopt.reflect, "even domain reflection (mean only)");
  fit->add_flag("--noise-off", fopt.noise_off, "disable the privacy mechanism");
  fit->add_option("--eps", fopt.eps);
  fit->add_option("--delta", fopt.delta);
  fit->add_option("--r", fopt.r);
  fit->add_option("--rho", fopt.rho);
  fit->add_option("--c_R", fopt.c_R);
  fit->add_option("--c_T", fopt.c_T);
  fit->add_option("--eta", fopt.eta);
  fit->add_option("--alpha", fopt.alpha);
  fit->add_option("--c_alpha", fopt.c_alpha);
  fit->add_option("--seed", fopt.seed);
  fit->add_option("--samples", fopt.samples);

  auto* realdata = app.add_subcommand(
      "realdata", "Train/test privacy-cost pipeline on a longitudinal CSV");
  std::string rd_input, rd_out, rd_bands;
  bool rd_no_normalize = false;
  bench::RealDataOptions ropt;
  realdata->add_option("--input", rd_input)->required();
  realdata->add_option("--out", rd_out)->required();
  realdata->add_option("--bands", rd_bands, "pointwise band CSV path");
  realdata->add_flag("--no-normalize", rd_no_normalize);
  realdata->add_option("--split", ropt.split_fraction);
  realdata->add_option("--eps", ropt.eps, "privacy budgets")->delimiter(',');
  realdata->add_option("--replicates", ropt.replicates);
  realdata->add_option("--r", ropt.r);
  realdata->add_option("--c_R", ropt.c_R);
  realdata->add_option("--c_T", ropt.c_T);
  realdata->add_option("--rho", ropt.rho);
  realdata->add_option("--alpha", ropt.alpha);
  realdata->add_option("--delta", ropt.delta);
  realdata->add_option("--eta", ropt.eta);
  realdata->add_option("--c_alpha", ropt.c_alpha);
  realdata->add_option("--seed", ropt.seed);
  realdata->add_option("--band-points", ropt.band_points);
  realdata->add_option("--threads", ropt.threads);
  bool rd_no_reflect = false;
  realdata->add_flag("--no-reflect", rd_no_reflect);
  bool rd_noise_off = false;
  realdata->add_flag("--noise-off", rd_noise_off);

  auto* audit = app.add_subcommand("audit", "Validate an exported transcript log");
  std::string audit_log;
  audit->add_option("--log", audit_log, "transcript log path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      return cmd_simulate(config_path, section, sim_out, sim_transcripts);
    }
    if (rates->parsed()) {
      return cmd_rates(rn, rm, reps_v, rS, rd, ralpha);
    }
    if (phase->parsed()) {
      return cmd_phase(pn, pm, peps, palpha);
    }
    if (fit->parsed()) {
      return cmd_fit(fopt);
    }
    if (realdata->parsed()) {
      ropt.reflect = !rd_no_reflect;
      ropt.noise_enabled = !rd_noise_off;
      return cmd_realdata(rd_input, rd_no_normalize, ropt, rd_out, rd_bands);
    }
    if (audit->parsed()) {
      return cmd_audit(audit_log);
    }
  } catch (const std::exception& e) {
    std::cerr << "error\tcode=runtime\tmsg=\"" << e.what() << "\"\n";
    return 1;
  }
  return 0;
}
