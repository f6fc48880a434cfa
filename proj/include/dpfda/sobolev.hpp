#pragma once

#include <Eigen/Dense>

#include "dpfda/basis.hpp"

namespace dpfda {

/// Coefficient-space ellipsoid sum_l l^{2 alpha} a_l^2 <= c_alpha^2 / pi^{2 alpha}
/// restricted to the leading r coordinates.
struct EllipsoidSpec {
  SobolevParams sobolev;
  int r = 1;

  EllipsoidSpec() = default;
  EllipsoidSpec(SobolevParams params, int r_);

  double radius_sq() const;

  /// Constraint weights (1^{2a}, 2^{2a}, ..., r^{2a}).
  Eigen::VectorXd weights() const;
};

bool in_ellipsoid(const CoeffVector& a, const EllipsoidSpec& spec);

/// Euclidean projection onto the ellipsoid. Interior points pass through
/// unchanged; otherwise the unique boundary point v_l / (1 + lambda l^{2a})
/// is found by bisection on the dual variable.
CoeffVector project_ellipsoid(const CoeffVector& v, const EllipsoidSpec& spec);

/// Blockwise projection of (d+1) stacked length-r coefficient blocks, each
/// onto the same ellipsoid.
Eigen::VectorXd project_vcm(const Eigen::VectorXd& stacked, const EllipsoidSpec& spec,
                            int d);

bool in_ellipsoid_blocks(const Eigen::VectorXd& stacked, const EllipsoidSpec& spec,
                         int d);

}  // namespace dpfda
