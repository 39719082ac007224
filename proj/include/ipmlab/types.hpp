#pragma once

#include <Eigen/Dense>

namespace ipmlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace ipmlab
