#include "dpfda/synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dpfda/sobolev.hpp"

namespace dpfda {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

MaternSpec::MaternSpec(double sigma2_, double nu_, double range_)
    : sigma2(sigma2_), nu(nu_), range(range_) {
  if (!(sigma2 >= 0.0) || !(nu > 0.0) || !(range > 0.0)) {
    throw std::invalid_argument("MaternSpec: parameters must be positive");
  }
}

double matern_cov(double x, double y, const MaternSpec& spec) {
  const double dist = std::abs(x - y);
  if (dist < 1e-12) {
    return spec.sigma2;
  }
  const double u = std::sqrt(2.0 * spec.nu) * dist / spec.range;
  const double prefactor = std::pow(2.0, 1.0 - spec.nu) / std::tgamma(spec.nu);
  return spec.sigma2 * prefactor * std::pow(u, spec.nu) * std::cyl_bessel_k(spec.nu, u);
}

Eigen::VectorXd sample_gp(const Eigen::VectorXd& grid, const MaternSpec& spec,
                          std::mt19937_64& rng) {
  const Eigen::Index m = grid.size();
  if (m == 0) {
    throw std::invalid_argument("sample_gp: empty grid");
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    z(i) = gauss(rng);
  }
  if (spec.sigma2 == 0.0) {
    return Eigen::VectorXd::Zero(m);
  }

  Eigen::MatrixXd cov(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      cov(i, j) = matern_cov(grid(i), grid(j), spec);
      cov(j, i) = cov(i, j);
    }
  }

  // Matern kernels of this smoothness are near-singular on dense grids;
  // escalate the diagonal jitter until the factorization succeeds.
  double jitter = 1e-10 * spec.sigma2;
  const double max_jitter = 1e-4 * spec.sigma2;
  while (true) {
    Eigen::LLT<Eigen::MatrixXd> llt(
        cov + jitter * Eigen::MatrixXd::Identity(m, m));
    if (llt.info() == Eigen::Success) {
      return llt.matrixL() * z;
    }
    jitter *= 10.0;
    if (jitter > max_jitter) {
      throw std::runtime_error("sample_gp: covariance factorization failed");
    }
  }
}

MeanDataset gen_mean_dataset(const std::function<double(double)>& target, int n, int m,
                             double noise_sd, const MaternSpec& matern,
                             std::mt19937_64& rng) {
  if (n < 1 || m < 1) {
    throw std::invalid_argument("gen_mean_dataset: n and m must be >= 1");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MeanDataset data;
  data.subjects.resize(n);
  for (auto& subject : data.subjects) {
    subject.x.resize(m);
    for (int j = 0; j < m; ++j) {
      subject.x(j) = unif(rng);
    }
    const Eigen::VectorXd path = sample_gp(subject.x, matern, rng);
    subject.y.resize(m);
    for (int j = 0; j < m; ++j) {
      subject.y(j) = target(subject.x(j)) + path(j) +
                     (noise_sd > 0.0 ? noise_sd * gauss(rng) : 0.0);
    }
  }
  return data;
}

VcmDataset gen_vcm_dataset(const std::vector<CoeffVector>& beta_blocks, int d, int n,
                           int m, double noise_sd, std::mt19937_64& rng,
                           const std::function<double(std::mt19937_64&)>& g_dist) {
  if (d < 0 || static_cast<int>(beta_blocks.size()) != d + 1) {
    throw std::invalid_argument("gen_vcm_dataset: need d+1 coefficient blocks");
  }
  if (n < 1 || m < 1) {
    throw std::invalid_argument("gen_vcm_dataset: n and m must be >= 1");
  }
  auto draw_g = g_dist ? g_dist : [](std::mt19937_64& r) {
    return std::uniform_real_distribution<double>(-1.0, 1.0)(r);
  };
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  VcmDataset data;
  data.subjects.resize(n);
  for (auto& subject : data.subjects) {
    subject.g.resize(d + 1);
    subject.g(0) = 1.0;
    for (int k = 1; k <= d; ++k) {
      subject.g(k) = draw_g(rng);
    }
    subject.x.resize(m);
    subject.y.resize(m);
    for (int j = 0; j < m; ++j) {
      subject.x(j) = unif(rng);
      double mean = 0.0;
      for (int k = 0; k <= d; ++k) {
        mean += subject.g(k) * eval_function(beta_blocks[k], subject.x(j));
      }
      subject.y(j) = mean + (noise_sd > 0.0 ? noise_sd * gauss(rng) : 0.0);
    }
  }
  return data;
}

BuiltinTargets builtin_targets() {
  BuiltinTargets t;
  t.mu1.resize(3);
  t.mu1 << 4.0 / 5.0, (3.0 / 5.0) / std::numbers::sqrt2,
      (2.0 / 3.0) / std::numbers::sqrt2;
  t.mu1_fn = [](double x) {
    return 4.0 / 5.0 + 3.0 / 5.0 * std::cos(kTwoPi * x) +
           2.0 / 3.0 * std::sin(kTwoPi * x);
  };
  t.mu2_fn = [](double x) {
    const double half_minus = 0.5 - x;
    return 1.0 / 7.0 + 5.0 * x * x / 7.0 -
           10.0 * half_minus * half_minus * half_minus / 7.0;
  };
  return t;
}

double default_c_alpha() {
  static const double cached = [] {
    constexpr int kDegree = 512;
    constexpr double kAlpha = 3.0;
    const BuiltinTargets t = builtin_targets();
    const Quadrature q = Quadrature::simpson(8193);
    double worst = 0.0;
    for (const auto& fn : {t.mu1_fn, t.mu2_fn}) {
      const CoeffVector a = project_to_coeffs(fn, kDegree, q);
      double lhs = 0.0;
      for (int ell = 1; ell <= kDegree; ++ell) {
        lhs += std::pow(static_cast<double>(ell), 2.0 * kAlpha) * a(ell - 1) *
               a(ell - 1);
      }
      worst = std::max(worst, lhs);
    }
    const double c = std::pow(std::numbers::pi, kAlpha) * std::sqrt(worst);
    return std::ceil(c * 10.0) / 10.0;
  }();
  return cached;
}

}  // namespace dpfda
