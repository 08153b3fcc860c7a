#pragma once

#include <Eigen/Dense>

namespace ptcl {

/// Dense row-major matrix used for features, parameters and activations.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

}  // namespace ptcl
