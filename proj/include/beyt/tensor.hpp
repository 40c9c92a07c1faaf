#pragma once

#include <Eigen/Dense>

namespace beyt {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

// Rounds every entry to the nearest 32-bit float. Parameters that go through
// a checkpoint are kept on this grid so a reload is bit-exact.
template <class Derived>
void round_to_float32(Eigen::DenseBase<Derived>& m) {
  m = m.derived().unaryExpr([](double v) { return static_cast<double>(static_cast<float>(v)); });
}

}  // namespace beyt
