#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace dpfda {

/// (epsilon, delta) privacy budget. Construction enforces the mechanism
/// validity condition 4 log(2/delta) >= epsilon. epsilon = +inf is the
/// noise-disabled sentinel used by oracle tests; runs under it are flagged
/// non-private everywhere they surface.
struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-3;

  PrivacyBudget() = default;
  PrivacyBudget(double epsilon_, double delta_);

  bool noise_disabled() const { return std::isinf(epsilon); }

  static PrivacyBudget disabled();
};

/// Entry-wise truncation radii R, all positive and finite.
struct TruncationRadii {
  Eigen::VectorXd radii;

  TruncationRadii() = default;
  explicit TruncationRadii(Eigen::VectorXd radii_);
};

/// Per-coordinate Gaussian noise variances.
struct NoiseScales {
  Eigen::VectorXd variances;
};

/// Entry-wise clip: out_l = v_l * min(1, R_l / |v_l|).
Eigen::VectorXd entrywise_clip(const Eigen::VectorXd& v, const TruncationRadii& R);

/// Radii for the mean problem: R_l = c_r * { sqrt(log^2(n/eta) / m) + l^{-alpha} }.
TruncationRadii mean_truncation_radii(int r, int m, double n, double eta,
                                      double c_r_const, double alpha);

/// Radii for the VCM problem, length r*(d+1): the decay index resets to
/// 1..r within each coefficient block and the log enters unsquared:
/// R_h = c_r * [ sqrt(log(n/eta) / m) + (h - r ceil(h/r - 1))^{-alpha} ].
TruncationRadii vcm_truncation_radii(int r, int d, int m, double n, double eta,
                                     double c_r_const, double alpha);

/// Gradient-release scales sigma_l^2 = 16 log(2/delta) R_l (sum_k R_k) / (b^2 eps^2).
/// All zeros when the budget is the noise-disabled sentinel.
NoiseScales noise_scales_for_batch(const TruncationRadii& R, int batch_size,
                                   const PrivacyBudget& budget);

/// Per-coordinate scales sigma_l^2 = 4 log(2/delta) |df_l| ||df||_1 / eps^2
/// for sensitivity vector df.
NoiseScales mechanism_scales(const Eigen::VectorXd& sensitivity,
                             const PrivacyBudget& budget);

/// Adds independent zero-mean Gaussian noise with mechanism_scales variances.
/// Zero sensitivity coordinates pass through exactly.
Eigen::VectorXd anisotropic_gaussian(const Eigen::VectorXd& value,
                                     const Eigen::VectorXd& sensitivity,
                                     const PrivacyBudget& budget,
                                     std::mt19937_64& rng);

struct PrivacyLossTail {
  double tail_prob = 0.0;
  bool passes = false;
  double loss_variance = 0.0;  // s = sum_l df_l^2 / sigma_l^2
};

/// Analytic check of the privacy-loss tail: the loss variable is
/// N(s/2, s) with s = sum_l df_l^2 / sigma_l^2; passes iff P(|W| >= eps) <= delta.
PrivacyLossTail privacy_loss_tail(const Eigen::VectorXd& sensitivity,
                                  const PrivacyBudget& budget);

/// Same check against caller-supplied variances instead of the calibrated ones.
PrivacyLossTail privacy_loss_tail(const Eigen::VectorXd& sensitivity,
                                  const NoiseScales& scales,
                                  const PrivacyBudget& budget);

/// A vector released by the mechanism, carrying the provenance tag the
/// protocol auditor validates.
struct PrivatizedVector {
  Eigen::VectorXd value;
  std::uint64_t tag = 0;
};

/// Mechanism entry point for gradient releases: adds N(0, scales) noise and
/// stamps the result. This is the only sanctioned way to produce a transcript
/// payload; anything else fails verify_provenance.
PrivatizedVector privatize_with_scales(const Eigen::VectorXd& value,
                                       const NoiseScales& scales, int server_id,
                                       int round, std::mt19937_64& rng);

bool verify_provenance(const Eigen::VectorXd& value, int server_id, int round,
                       std::uint64_t tag);

}  // namespace dpfda
