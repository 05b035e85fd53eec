#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>

namespace fblab {

inline constexpr int kMaxDim = 3;

// Points live in R^n with n <= 3; the fixed upper bound keeps them off the heap.
template <typename Scalar>
using PointT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

// Values live in R^m.
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// m x n Jacobian of a vector-valued field.
template <typename Scalar>
using JacobianT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Point = PointT<double>;
using Vector = VectorT<double>;
using Jacobian = JacobianT<double>;

using Index = std::int64_t;
using NodeIndex = std::array<int, kMaxDim>;

}  // namespace fblab
