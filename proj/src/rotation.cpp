#include "motionforge/rotation.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

namespace motionforge {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d K;
    K << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return K;
}

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle) {
    const double theta = axis_angle.norm();
    const Eigen::Matrix3d K = skew(axis_angle);
    if (theta < 1e-8) return Eigen::Matrix3d::Identity() + K + 0.5 * K * K;
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / (theta * theta);
    return Eigen::Matrix3d::Identity() + a * K + b * K * K;
}

Eigen::Vector3d rotation_to_axis_angle(const Eigen::Matrix3d& R) {
    const Eigen::AngleAxisd aa(R);
    return aa.angle() * aa.axis();
}

double orthonormality_error(const Eigen::Matrix3d& R) {
    const double ortho = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    return std::max(ortho, std::abs(R.determinant() - 1.0));
}

}  // namespace motionforge
