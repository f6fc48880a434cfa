#include "dpfda/sobolev.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpfda {

namespace {
constexpr double kFeasibilitySlack = 1e-12;
constexpr double kResidualTol = 1e-12;
constexpr int kMaxBisectionIters = 200;
}  // namespace

EllipsoidSpec::EllipsoidSpec(SobolevParams params, int r_) : sobolev(params), r(r_) {
  if (r < 1) {
    throw std::invalid_argument("EllipsoidSpec: r must be >= 1");
  }
}

double EllipsoidSpec::radius_sq() const {
  return sobolev.c_alpha * sobolev.c_alpha /
         std::pow(std::numbers::pi, 2.0 * sobolev.alpha);
}

Eigen::VectorXd EllipsoidSpec::weights() const {
  Eigen::VectorXd w(r);
  for (int ell = 1; ell <= r; ++ell) {
    w(ell - 1) = std::pow(static_cast<double>(ell), 2.0 * sobolev.alpha);
  }
  return w;
}

bool in_ellipsoid(const CoeffVector& a, const EllipsoidSpec& spec) {
  if (a.size() != spec.r) {
    throw std::invalid_argument("in_ellipsoid: coefficient length != spec.r");
  }
  const double lhs = spec.weights().cwiseProduct(a.cwiseAbs2()).sum();
  return lhs <= spec.radius_sq() + kFeasibilitySlack;
}

CoeffVector project_ellipsoid(const CoeffVector& v, const EllipsoidSpec& spec) {
  if (v.size() != spec.r) {
    throw std::invalid_argument("project_ellipsoid: coefficient length != spec.r");
  }
  if (!v.allFinite()) {
    throw std::invalid_argument("project_ellipsoid: non-finite input");
  }
  const Eigen::VectorXd w = spec.weights();
  const double radius_sq = spec.radius_sq();

  const auto constraint = [&](double lambda) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double denom = 1.0 + lambda * w(i);
      s += w(i) * (v(i) / denom) * (v(i) / denom);
    }
    return s;
  };

  if (constraint(0.0) <= radius_sq) {
    return v;
  }

  // constraint(lambda) is strictly decreasing; double the bracket until
  // feasible, then bisect.
  double lo = 0.0;
  double hi = 1.0;
  while (constraint(hi) > radius_sq) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) {
      throw std::runtime_error("project_ellipsoid: bisection bracket overflow");
    }
  }
  double lambda = hi;
  for (int it = 0; it < kMaxBisectionIters; ++it) {
    lambda = 0.5 * (lo + hi);
    const double c = constraint(lambda);
    if (std::abs(c - radius_sq) < kResidualTol) {
      break;
    }
    if (c > radius_sq) {
      lo = lambda;
    } else {
      hi = lambda;
    }
  }
  // Land on the feasible side of the bracket.
  if (constraint(lambda) > radius_sq + kFeasibilitySlack) {
    lambda = hi;
  }
  return v.array() / (1.0 + lambda * w.array());
}

Eigen::VectorXd project_vcm(const Eigen::VectorXd& stacked, const EllipsoidSpec& spec,
                            int d) {
  if (d < 0 || stacked.size() % (d + 1) != 0 ||
      stacked.size() / (d + 1) != spec.r) {
    throw std::invalid_argument("project_vcm: length must be r*(d+1)");
  }
  Eigen::VectorXd out(stacked.size());
  for (int k = 0; k <= d; ++k) {
    out.segment(static_cast<Eigen::Index>(k) * spec.r, spec.r) =
        project_ellipsoid(stacked.segment(static_cast<Eigen::Index>(k) * spec.r, spec.r),
                          spec);
  }
  return out;
}

bool in_ellipsoid_blocks(const Eigen::VectorXd& stacked, const EllipsoidSpec& spec,
                         int d) {
  if (d < 0 || stacked.size() % (d + 1) != 0 ||
      stacked.size() / (d + 1) != spec.r) {
    throw std::invalid_argument("in_ellipsoid_blocks: length must be r*(d+1)");
  }
  for (int k = 0; k <= d; ++k) {
    if (!in_ellipsoid(
            stacked.segment(static_cast<Eigen::Index>(k) * spec.r, spec.r), spec)) {
      return false;
    }
  }
  return true;
}

}  // namespace dpfda
