#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dpfda/estimators.hpp"
#include "dpfda/synth.hpp"

namespace dpfda {
namespace bench {

enum class Scenario { MeanCdp, MeanFdp, VcmCdp, VcmFdp };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

/// A Monte Carlo sweep: one cell per grid point, `replicates` runs per cell.
struct ExperimentSpec {
  Scenario scenario = Scenario::MeanCdp;
  std::string target = "mu1";  // mu1 | mu2 (mu2 is mean-only)
  std::vector<int> n_grid{250};
  std::vector<int> m_grid{10};
  std::vector<double> eps_grid{1.0};
  std::vector<int> s_grid{1};
  std::vector<int> d_grid{1};
  int replicates = 100;
  std::uint64_t seed = 0;

  double c_R = 0.75;
  double c_T = 4.0;
  double c_r = 1.25;
  double rho = 0.1;
  double alpha = 3.0;
  double delta = 1e-3;
  double eta = 0.05;
  double c_alpha = 0.0;  // 0 -> default_c_alpha()
  int r_fixed = 0;       // 0 -> rate-optimal selection
  double gp_sigma2 = 1.0;
  double noise_sd = 0.5;
  bool noise_enabled = true;
  int threads = 0;  // 0 -> hardware concurrency
};

struct CellResult {
  int n = 0;
  int m = 0;
  double eps = 0.0;
  int S = 1;
  int d = 0;
  int replicates = 0;
  double mse_mean = 0.0;
  double mse_se = 0.0;
  int r_used = 0;
  int T_used = 0;
  std::string error;  // nonempty when the cell failed
};

struct MonteCarloResults {
  ExperimentSpec spec;
  std::vector<CellResult> cells;
};

MonteCarloResults run_monte_carlo(const ExperimentSpec& spec);

/// Reruns the first replicate of the first grid cell of a federated
/// experiment and returns its protocol run, transcript log included.
fednet::ProtocolRun sample_protocol_run(const ExperimentSpec& spec);

/// Flat CSV, one row per cell, manifest as leading comment lines. Reruns of
/// the same manifest produce byte-identical output.
void write_results_csv(const MonteCarloResults& results, std::ostream& out);

/// Flat key = value file, optional [section] blocks selecting one experiment.
ExperimentSpec parse_spec(std::istream& in, const std::string& section = "");

struct RateTerm {
  std::string name;
  double value = 0.0;
};

struct RateRow {
  std::string setting;
  std::vector<RateTerm> terms;
  int dominant = 0;
};

/// Numeric values of the four error-rate expressions (mean/VCM x CDP/FDP),
/// with the dominant term marked per row.
std::vector<RateRow> rate_table(double n, double m, double eps, int S, int d,
                                double alpha);

struct PhaseRegion {
  std::string label;       // e.g. "low-privacy/mid"
  std::string rate;        // dominant rate expression for the cell
  double rate_value = 0.0;
  bool on_boundary = false;
  std::vector<std::pair<std::string, double>> boundary_log10_ratios;
};

/// Classifies (n, m, eps) into the five privacy/sampling cells. Boundary
/// ties go to the denser / less-private side and are flagged.
PhaseRegion phase_region(double n, double m, double eps, double alpha);

struct AffineMap {
  double offset = 0.0;
  double scale = 1.0;  // normalized = (v - offset) / scale

  double to_unit(double v) const { return (v - offset) / scale; }
  double from_unit(double u) const { return offset + scale * u; }
};

struct IngestResult {
  bool is_vcm = false;
  MeanDataset mean;
  VcmDataset vcm;
  std::vector<std::string> subject_ids;
  AffineMap x_map;
  AffineMap y_map;
};

/// Longitudinal CSV with header subject_id,x,y[,g_1..g_d]. Rows group by
/// subject in first-appearance order; min-max normalization is applied to x
/// and y when requested and the affine maps are recorded.
IngestResult ingest_csv(const std::string& path, bool normalize);

void export_mean_csv(const MeanDataset& data, const std::vector<std::string>& ids,
                     std::ostream& out);

/// Doubles each subject's grid with its mirror image: x -> {x/2, 1 - x/2}.
/// Estimating on the reflected data and reading the fit back through
/// eval_reflected removes the periodicity constraint at the domain ends.
MeanDataset reflect_domain(const MeanDataset& data);

double eval_reflected(const CoeffVector& a, double x);

struct RealDataOptions {
  double split_fraction = 1.0 / 3.0;
  std::vector<double> eps{0.5, 1.0, 3.0, 8.0};
  int replicates = 100;
  int r = 3;
  double c_R = 0.008;
  double c_T = 4.0;
  double rho = 0.01;
  double alpha = 3.0;
  double delta = 1e-3;
  double eta = 0.05;
  double c_alpha = 0.0;  // 0 -> default_c_alpha()
  std::uint64_t seed = 0;
  bool reflect = true;
  bool noise_enabled = true;  // off = privacy mechanism silenced on the test side
  int band_points = 101;
  int threads = 0;
};

struct RealDataEpsRow {
  double eps = 0.0;
  double dist_mean = 0.0;  // || private(test) - nonprivate(train) ||_{L2}
  double dist_se = 0.0;
};

struct RealDataBand {
  double eps = 0.0;
  Eigen::VectorXd x;     // original units
  Eigen::VectorXd mean;  // original units
  Eigen::VectorXd lo;    // pointwise 5% quantile
  Eigen::VectorXd hi;    // pointwise 95% quantile
};

struct RealDataResults {
  RealDataOptions options;
  int n_train = 0;
  int n_test = 0;
  std::vector<RealDataEpsRow> rows;
  std::vector<RealDataBand> bands;
  Eigen::VectorXd reference_x;      // nonprivate full-data fit, original units
  Eigen::VectorXd reference_curve;
};

/// Train/test privacy-cost comparison plus pointwise bands of the private
/// estimator over mechanism replicates on the full data.
RealDataResults real_data_pipeline(const IngestResult& data,
                                   const RealDataOptions& options);

void write_realdata_csv(const RealDataResults& results, std::ostream& out);
void write_bands_csv(const RealDataResults& results, std::ostream& out);

/// One-sided z statistic for a decreasing trend of y against x, from a
/// weighted least-squares slope with per-point standard errors.
double decreasing_trend_z(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& se);

}  // namespace bench
}  // namespace dpfda
