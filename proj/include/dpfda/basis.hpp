#pragma once

#include <Eigen/Dense>
#include <functional>

namespace dpfda {

using CoeffVector = Eigen::VectorXd;

/// Smoothness class parameters: exponent alpha (> 1) and radius constant
/// c_alpha (> 0) of the periodic Sobolev ellipsoid in Fourier coefficient
/// space.
struct SobolevParams {
  double alpha = 3.0;
  double c_alpha = 1.0;

  SobolevParams() = default;
  SobolevParams(double alpha_, double c_alpha_);
};

/// Composite Simpson rule on [0,1]. Node count is odd and >= 3; weights sum
/// to one.
struct Quadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  static Quadrature simpson(int node_count = 2049);
};

// Trigonometric basis, 1-based: phi_1 = 1, phi_{2k} = sqrt(2)cos(2k pi t),
// phi_{2k+1} = sqrt(2)sin(2k pi t). Orthonormal on [0,1].
double eval_basis(int ell, double t);

/// First r basis functions stacked at a single point.
Eigen::VectorXd eval_basis_vector(int r, double t);

/// Evaluates sum_l a_l phi_l(t).
double eval_function(const CoeffVector& a, double t);

/// Euclidean distance of zero-padded coefficient vectors; equals the L2
/// distance of the represented functions.
double l2_distance(const CoeffVector& a, const CoeffVector& b);

/// Leading r basis coefficients of f, approximated by quadrature.
CoeffVector project_to_coeffs(const std::function<double(double)>& f, int r,
                              const Quadrature& q);

double integrate(const std::function<double(double)>& f, const Quadrature& q);

/// L2 distance between an arbitrary function and a coefficient expansion,
/// by quadrature. Used where the target is not band-limited.
double l2_distance_fn(const CoeffVector& a, const std::function<double(double)>& f,
                      const Quadrature& q);

}  // namespace dpfda
