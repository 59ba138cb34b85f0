#pragma once

#include <Eigen/Core>

namespace koopid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Adjacency = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace koopid
