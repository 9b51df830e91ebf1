#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace pcg {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Binary adjacency storage. Entry (i, j) is 1 iff the edge j -> i exists.
using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace pcg
