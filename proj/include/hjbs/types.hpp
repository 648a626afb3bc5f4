#pragma once

#include <Eigen/Dense>

namespace hjbs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace hjbs
