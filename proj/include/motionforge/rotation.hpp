#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace motionforge {

// Axis-angle (radians, rotation vector) to rotation matrix via Rodrigues'
// formula. Below 1e-8 rad the second-order series I + K + K^2/2 is used.
Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Inverse of rodrigues for angles in [0, pi].
Eigen::Vector3d rotation_to_axis_angle(const Eigen::Matrix3d& R);

// max |R^T R - I| entry and |det R - 1|.
double orthonormality_error(const Eigen::Matrix3d& R);

}  // namespace motionforge
