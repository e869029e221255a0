#ifndef DSMREG_TYPES_HPP
#define DSMREG_TYPES_HPP

#include <Eigen/Dense>

namespace dsmreg {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

}  // namespace dsmreg

#endif  // DSMREG_TYPES_HPP
