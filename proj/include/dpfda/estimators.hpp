#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "dpfda/fednet.hpp"
#include "dpfda/privacy.hpp"
#include "dpfda/sobolev.hpp"
#include "dpfda/synth.hpp"

namespace dpfda {

/// Gradient-descent configuration shared by all four estimation procedures.
/// Iterates always start from the zero vector.
struct GdConfig {
  int r = 3;
  double rho = 0.1;
  int T = 1;
  double c_r_const = 0.75;  // clipping constant
  double eta = 0.05;        // failure probability in the radius schedule
  std::uint64_t seed = 0;
  bool noise_enabled = true;
};

struct RoundDiagnostics {
  double gradient_norm = 0.0;
  double noise_norm = 0.0;
  bool feasible = false;
};

struct TuningEcho {
  int r = 0;
  int T = 0;
  std::vector<int> batch_sizes;  // one per server
  Eigen::VectorXd weights;       // server weights, sum to one
  int unused_subjects = 0;       // remainder subjects when T does not divide n
};

struct EstimationReport {
  Eigen::VectorXd coefficients;
  std::vector<RoundDiagnostics> rounds;
  std::vector<Eigen::VectorXd> iterate_history;  // length T + 1
  TuningEcho tuning;
  bool noise_enabled = true;
  bool lemma_condition_ok = true;  // 4 log(2/delta) >= epsilon on every budget
  std::optional<double> l2_error;  // vs truth coefficients when supplied
};

struct FederatedReport {
  EstimationReport estimate;
  fednet::ProtocolRun protocol;
};

struct MeanServer {
  MeanDataset data;
  PrivacyBudget budget;
};

struct VcmServer {
  VcmDataset data;
  PrivacyBudget budget;
};

/// T = ceil(c_t * log n).
int default_rounds(int n, double c_t = 4.0);

// Basis-count selection: ceil of c_r_mult times the minimum of the four
// sample-size/privacy terms, floored at one. An infinite epsilon drops the
// privacy terms.
int select_r_mean_cdp(double n, double m, double epsilon, double alpha,
                      double c_r_mult);
int select_r_mean_fdp(int S, double n, double m, double epsilon, double alpha,
                      double c_r_mult);
int select_r_vcm_fdp(int S, double n, double m, int d, double epsilon, double alpha,
                     double c_r_mult);

/// Batch-averaged entry-wise clipped least-squares gradient at a.
Eigen::VectorXd compute_clipped_mean_gradient(std::span<const MeanSubject> batch,
                                              const CoeffVector& a,
                                              const TruncationRadii& R);

/// VCM analogue; the parameter vector stacks d+1 length-r blocks.
Eigen::VectorXd compute_clipped_vcm_gradient(std::span<const VcmSubject> batch,
                                             const Eigen::VectorXd& B,
                                             const TruncationRadii& R, int r, int d);

/// Closed-form pooled least squares, the noise-off oracle.
CoeffVector nonprivate_ls(const MeanDataset& data, int r);
Eigen::VectorXd nonprivate_ls_vcm(const VcmDataset& data, int r);

// Server weights nu_s proportional to the reciprocal worst-case variance
// branch of each server; they sum to one.
Eigen::VectorXd server_weights_mean(const std::vector<MeanServer>& servers, int r,
                                    int m);
Eigen::VectorXd server_weights_vcm(const std::vector<VcmServer>& servers, int r,
                                   int m, int d);

EstimationReport dp_mean_cdp(const MeanDataset& data, const GdConfig& cfg,
                             const PrivacyBudget& budget, const EllipsoidSpec& spec,
                             const CoeffVector* truth = nullptr);

FederatedReport dp_mean_fdp(const std::vector<MeanServer>& servers, const GdConfig& cfg,
                            const EllipsoidSpec& spec,
                            const CoeffVector* truth = nullptr);

EstimationReport dp_vcm_cdp(const VcmDataset& data, const GdConfig& cfg,
                            const PrivacyBudget& budget, const EllipsoidSpec& spec,
                            const Eigen::VectorXd* truth = nullptr);

FederatedReport dp_vcm_fdp(const std::vector<VcmServer>& servers, const GdConfig& cfg,
                           const EllipsoidSpec& spec,
                           const Eigen::VectorXd* truth = nullptr);

// Coordinator updates, exposed so transcript logs can be replayed through
// the exact aggregation used in the runs.
fednet::AggregateFn make_mean_aggregate(double rho, Eigen::VectorXd weights,
                                        EllipsoidSpec spec);
fednet::AggregateFn make_vcm_aggregate(double rho, Eigen::VectorXd weights,
                                       EllipsoidSpec spec, int d);

}  // namespace dpfda
