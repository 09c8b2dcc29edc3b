#pragma once

#include <Eigen/Dense>

namespace expbias {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

} // namespace expbias
