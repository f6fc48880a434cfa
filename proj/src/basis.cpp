#include "dpfda/basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpfda {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

SobolevParams::SobolevParams(double alpha_, double c_alpha_)
    : alpha(alpha_), c_alpha(c_alpha_) {
  if (!(alpha > 1.0)) {
    throw std::invalid_argument("SobolevParams: alpha must be > 1");
  }
  if (!(c_alpha > 0.0)) {
    throw std::invalid_argument("SobolevParams: c_alpha must be > 0");
  }
}

Quadrature Quadrature::simpson(int node_count) {
  if (node_count < 3 || node_count % 2 == 0) {
    throw std::invalid_argument("Quadrature::simpson: node count must be odd and >= 3");
  }
  Quadrature q;
  q.nodes = Eigen::VectorXd::LinSpaced(node_count, 0.0, 1.0);
  q.weights.resize(node_count);
  const double h = 1.0 / static_cast<double>(node_count - 1);
  q.weights(0) = h / 3.0;
  q.weights(node_count - 1) = h / 3.0;
  for (int k = 1; k < node_count - 1; ++k) {
    q.weights(k) = (k % 2 == 1) ? 4.0 * h / 3.0 : 2.0 * h / 3.0;
  }
  return q;
}

double eval_basis(int ell, double t) {
  if (ell < 1) {
    throw std::invalid_argument("eval_basis: basis index is 1-based");
  }
  if (ell == 1) {
    return 1.0;
  }
  const int k = ell / 2;
  const double arg = kTwoPi * static_cast<double>(k) * t;
  return (ell % 2 == 0) ? kSqrt2 * std::cos(arg) : kSqrt2 * std::sin(arg);
}

Eigen::VectorXd eval_basis_vector(int r, double t) {
  if (r < 1) {
    throw std::invalid_argument("eval_basis_vector: r must be >= 1");
  }
  Eigen::VectorXd phi(r);
  phi(0) = 1.0;
  // One sincos pair per frequency covers both the cos and sin entries.
  for (int k = 1; 2 * k <= r; ++k) {
    const double arg = kTwoPi * static_cast<double>(k) * t;
    phi(2 * k - 1) = kSqrt2 * std::cos(arg);
    if (2 * k < r) {
      phi(2 * k) = kSqrt2 * std::sin(arg);
    }
  }
  return phi;
}

double eval_function(const CoeffVector& a, double t) {
  if (a.size() == 0) {
    throw std::invalid_argument("eval_function: empty coefficient vector");
  }
  return eval_basis_vector(static_cast<int>(a.size()), t).dot(a);
}

double l2_distance(const CoeffVector& a, const CoeffVector& b) {
  const Eigen::Index n = std::max(a.size(), b.size());
  double sq = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ai = i < a.size() ? a(i) : 0.0;
    const double bi = i < b.size() ? b(i) : 0.0;
    sq += (ai - bi) * (ai - bi);
  }
  return std::sqrt(sq);
}

CoeffVector project_to_coeffs(const std::function<double(double)>& f, int r,
                              const Quadrature& q) {
  if (r < 1) {
    throw std::invalid_argument("project_to_coeffs: r must be >= 1");
  }
  CoeffVector a = CoeffVector::Zero(r);
  for (Eigen::Index k = 0; k < q.nodes.size(); ++k) {
    a += q.weights(k) * f(q.nodes(k)) * eval_basis_vector(r, q.nodes(k));
  }
  return a;
}

double integrate(const std::function<double(double)>& f, const Quadrature& q) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < q.nodes.size(); ++k) {
    s += q.weights(k) * f(q.nodes(k));
  }
  return s;
}

double l2_distance_fn(const CoeffVector& a, const std::function<double(double)>& f,
                      const Quadrature& q) {
  const double sq = integrate(
      [&](double t) {
        const double d = eval_function(a, t) - f(t);
        return d * d;
      },
      q);
  return std::sqrt(std::max(sq, 0.0));
}

}  // namespace dpfda
