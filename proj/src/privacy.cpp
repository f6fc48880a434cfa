#include "dpfda/privacy.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "dpfda/rng.hpp"

namespace dpfda {

namespace {

double gaussian_upper_tail(double z) {
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// FNV-1a over the payload bytes plus (server, round), salted so that a tag
// cannot be reproduced without going through privatize_with_scales.
constexpr std::uint64_t kProvenanceSalt = 0x6f1d9c3b5a82e417ULL;

std::uint64_t provenance_tag(const Eigen::VectorXd& value, int server_id, int round) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ kProvenanceSalt;
  const auto absorb = [&h](std::uint64_t word) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (word >> (8 * byte)) & 0xffULL;
      h *= 0x100000001b3ULL;
    }
  };
  absorb(static_cast<std::uint64_t>(static_cast<std::int64_t>(server_id)));
  absorb(static_cast<std::uint64_t>(static_cast<std::int64_t>(round)));
  absorb(static_cast<std::uint64_t>(value.size()));
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    std::uint64_t bits = 0;
    static_assert(sizeof(double) == sizeof(std::uint64_t));
    std::memcpy(&bits, &value(i), sizeof(bits));
    absorb(bits);
  }
  return mix64(h);
}

}  // namespace

PrivacyBudget::PrivacyBudget(double epsilon_, double delta_)
    : epsilon(epsilon_), delta(delta_) {
  if (std::isinf(epsilon) && epsilon > 0.0) {
    return;  // noise-disabled sentinel, delta irrelevant
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("PrivacyBudget: epsilon must be positive");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("PrivacyBudget: delta must be in (0,1)");
  }
  if (4.0 * std::log(2.0 / delta) < epsilon) {
    throw std::invalid_argument(
        "PrivacyBudget: mechanism requires 4*log(2/delta) >= epsilon");
  }
}

PrivacyBudget PrivacyBudget::disabled() {
  PrivacyBudget b;
  b.epsilon = std::numeric_limits<double>::infinity();
  return b;
}

TruncationRadii::TruncationRadii(Eigen::VectorXd radii_) : radii(std::move(radii_)) {
  if (radii.size() == 0 || !radii.allFinite() || (radii.array() <= 0.0).any()) {
    throw std::invalid_argument("TruncationRadii: entries must be positive and finite");
  }
}

Eigen::VectorXd entrywise_clip(const Eigen::VectorXd& v, const TruncationRadii& R) {
  if (v.size() != R.radii.size()) {
    throw std::invalid_argument("entrywise_clip: length mismatch");
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i));
    out(i) = mag <= R.radii(i) ? v(i) : v(i) * (R.radii(i) / mag);
  }
  return out;
}

TruncationRadii mean_truncation_radii(int r, int m, double n, double eta,
                                      double c_r_const, double alpha) {
  if (r < 1 || m < 1 || !(n > 0.0) || !(eta > 0.0 && eta < 1.0) ||
      !(c_r_const > 0.0) || !(alpha > 0.0)) {
    throw std::invalid_argument("mean_truncation_radii: invalid inputs");
  }
  const double log_ratio = std::log(n / eta);
  if (log_ratio <= 0.0) {
    throw std::invalid_argument("mean_truncation_radii: n/eta must exceed 1");
  }
  const double common = std::sqrt(log_ratio * log_ratio / static_cast<double>(m));
  Eigen::VectorXd radii(r);
  for (int ell = 1; ell <= r; ++ell) {
    radii(ell - 1) = c_r_const * (common + std::pow(static_cast<double>(ell), -alpha));
  }
  return TruncationRadii(std::move(radii));
}

TruncationRadii vcm_truncation_radii(int r, int d, int m, double n, double eta,
                                     double c_r_const, double alpha) {
  if (r < 1 || d < 0 || m < 1 || !(n > 0.0) || !(eta > 0.0 && eta < 1.0) ||
      !(c_r_const > 0.0) || !(alpha > 0.0)) {
    throw std::invalid_argument("vcm_truncation_radii: invalid inputs");
  }
  const double log_ratio = std::log(n / eta);
  if (log_ratio <= 0.0) {
    throw std::invalid_argument("vcm_truncation_radii: n/eta must exceed 1");
  }
  const double common = std::sqrt(log_ratio / static_cast<double>(m));
  const int dim = r * (d + 1);
  Eigen::VectorXd radii(dim);
  for (int h = 1; h <= dim; ++h) {
    const int within_block = h - r * ((h + r - 1) / r - 1);  // cycles 1..r
    radii(h - 1) =
        c_r_const * (common + std::pow(static_cast<double>(within_block), -alpha));
  }
  return TruncationRadii(std::move(radii));
}

NoiseScales noise_scales_for_batch(const TruncationRadii& R, int batch_size,
                                   const PrivacyBudget& budget) {
  if (batch_size < 1) {
    throw std::invalid_argument("noise_scales_for_batch: batch size must be >= 1");
  }
  if (budget.noise_disabled()) {
    return NoiseScales{Eigen::VectorXd::Zero(R.radii.size())};
  }
  const double b = static_cast<double>(batch_size);
  const double factor = 16.0 * std::log(2.0 / budget.delta) * R.radii.sum() /
                        (b * b * budget.epsilon * budget.epsilon);
  return NoiseScales{factor * R.radii};
}

NoiseScales mechanism_scales(const Eigen::VectorXd& sensitivity,
                             const PrivacyBudget& budget) {
  if ((sensitivity.array() < 0.0).any() || !sensitivity.allFinite()) {
    throw std::invalid_argument(
        "mechanism_scales: sensitivities must be nonnegative and finite");
  }
  if (budget.noise_disabled()) {
    return NoiseScales{Eigen::VectorXd::Zero(sensitivity.size())};
  }
  const double l1 = sensitivity.lpNorm<1>();
  const double factor = 4.0 * std::log(2.0 / budget.delta) * l1 /
                        (budget.epsilon * budget.epsilon);
  return NoiseScales{factor * sensitivity};
}

Eigen::VectorXd anisotropic_gaussian(const Eigen::VectorXd& value,
                                     const Eigen::VectorXd& sensitivity,
                                     const PrivacyBudget& budget,
                                     std::mt19937_64& rng) {
  if (value.size() != sensitivity.size()) {
    throw std::invalid_argument("anisotropic_gaussian: length mismatch");
  }
  const NoiseScales scales = mechanism_scales(sensitivity, budget);
  Eigen::VectorXd out = value;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (scales.variances(i) > 0.0) {
      out(i) += std::sqrt(scales.variances(i)) * gauss(rng);
    }
  }
  return out;
}

PrivacyLossTail privacy_loss_tail(const Eigen::VectorXd& sensitivity,
                                  const NoiseScales& scales,
                                  const PrivacyBudget& budget) {
  if (sensitivity.size() != scales.variances.size()) {
    throw std::invalid_argument("privacy_loss_tail: length mismatch");
  }
  if ((sensitivity.array() == 0.0).all()) {
    throw std::invalid_argument("privacy_loss_tail: sensitivity is identically zero");
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < sensitivity.size(); ++i) {
    if (sensitivity(i) == 0.0) {
      continue;  // no noise needed where nothing can change
    }
    if (!(scales.variances(i) > 0.0)) {
      // A sensitive coordinate with no noise leaks deterministically.
      return PrivacyLossTail{1.0, false, std::numeric_limits<double>::infinity()};
    }
    s += sensitivity(i) * sensitivity(i) / scales.variances(i);
  }
  const double sd = std::sqrt(s);
  const double upper = gaussian_upper_tail(budget.epsilon / sd - 0.5 * sd);
  const double lower = gaussian_upper_tail(budget.epsilon / sd + 0.5 * sd);
  PrivacyLossTail result;
  result.loss_variance = s;
  result.tail_prob = upper + lower;
  result.passes = result.tail_prob <= budget.delta;
  return result;
}

PrivacyLossTail privacy_loss_tail(const Eigen::VectorXd& sensitivity,
                                  const PrivacyBudget& budget) {
  return privacy_loss_tail(sensitivity, mechanism_scales(sensitivity, budget), budget);
}

PrivatizedVector privatize_with_scales(const Eigen::VectorXd& value,
                                       const NoiseScales& scales, int server_id,
                                       int round, std::mt19937_64& rng) {
  if (value.size() != scales.variances.size()) {
    throw std::invalid_argument("privatize_with_scales: length mismatch");
  }
  Eigen::VectorXd out = value;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (scales.variances(i) > 0.0) {
      out(i) += std::sqrt(scales.variances(i)) * gauss(rng);
    }
  }
  const std::uint64_t tag = provenance_tag(out, server_id, round);
  return PrivatizedVector{std::move(out), tag};
}

bool verify_provenance(const Eigen::VectorXd& value, int server_id, int round,
                       std::uint64_t tag) {
  return provenance_tag(value, server_id, round) == tag;
}

}  // namespace dpfda
