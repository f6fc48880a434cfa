#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <vector>

#include "dpfda/basis.hpp"

namespace dpfda {

/// Matern covariance parameters. The simulation default (order 4, range 0.8)
/// gives K(x,y) = sigma2 * 2^{1-nu}/Gamma(nu) * u^nu * BesselK_nu(u) with
/// u = sqrt(2 nu) |x-y| / range.
struct MaternSpec {
  double sigma2 = 1.0;
  double nu = 4.0;
  double range = 0.8;

  MaternSpec() = default;
  MaternSpec(double sigma2_, double nu_, double range_);
};

struct MeanSubject {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

struct MeanDataset {
  std::vector<MeanSubject> subjects;

  int n() const { return static_cast<int>(subjects.size()); }
};

struct VcmSubject {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd g;  // covariates, g(0) == 1 intercept
};

struct VcmDataset {
  std::vector<VcmSubject> subjects;

  int n() const { return static_cast<int>(subjects.size()); }
  int d() const {
    return subjects.empty() ? 0 : static_cast<int>(subjects.front().g.size()) - 1;
  }
};

double matern_cov(double x, double y, const MaternSpec& spec);

/// One draw of the zero-mean Gaussian process on the given grid, via
/// Cholesky of the covariance matrix with escalating jitter.
Eigen::VectorXd sample_gp(const Eigen::VectorXd& grid, const MaternSpec& spec,
                          std::mt19937_64& rng);

/// Subjects with Uniform[0,1] grids, per-subject GP paths and iid Gaussian
/// measurement error: Y = mu(X) + U(X) + xi.
MeanDataset gen_mean_dataset(const std::function<double(double)>& target, int n, int m,
                             double noise_sd, const MaternSpec& matern,
                             std::mt19937_64& rng);

/// Varying-coefficient data: Y = sum_k G_k beta_k(X) + xi, with G_0 = 1 and
/// G_1..G_d iid from g_dist (default Uniform[-1,1]).
VcmDataset gen_vcm_dataset(const std::vector<CoeffVector>& beta_blocks, int d, int n,
                           int m, double noise_sd, std::mt19937_64& rng,
                           const std::function<double(std::mt19937_64&)>& g_dist = {});

struct BuiltinTargets {
  CoeffVector mu1;                      // exact three-coefficient expansion
  std::function<double(double)> mu1_fn;
  std::function<double(double)> mu2_fn;  // smooth cubic, outside the basis span
};

BuiltinTargets builtin_targets();

/// Smallest c_alpha (rounded up to one decimal) for which the degree-512
/// truncations of both built-in targets satisfy the alpha = 3 ellipsoid
/// constraint. Computed once and cached.
double default_c_alpha();

}  // namespace dpfda
