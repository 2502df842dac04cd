#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace motionforge {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

// Flattened pose sequence: one row per frame.
using PoseVectors = Matrix;

}  // namespace motionforge
