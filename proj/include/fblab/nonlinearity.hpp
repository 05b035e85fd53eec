#pragma once

#include "fblab/params.hpp"
#include "fblab/types.hpp"

#include <Eigen/Core>

#include <cmath>

namespace fblab {

/// Componentwise max(0, v_i).
template <typename Derived>
auto positive_part(const Eigen::MatrixBase<Derived>& v) {
  return v.cwiseMax(typename Derived::Scalar(0));
}

/// Componentwise max(0, -v_i).
template <typename Derived>
auto negative_part(const Eigen::MatrixBase<Derived>& v) {
  return (-v).cwiseMax(typename Derived::Scalar(0));
}

/// (lambda_+ |v^+|^{q+1} + lambda_- |v^-|^{q+1}) / (1+q).
template <typename Derived>
typename Derived::Scalar sublinear_potential(const Eigen::MatrixBase<Derived>& v,
                                             typename Derived::Scalar lambda_plus,
                                             typename Derived::Scalar lambda_minus,
                                             typename Derived::Scalar q) {
  using std::pow;
  using Scalar = typename Derived::Scalar;
  const Scalar pos = positive_part(v).norm();
  const Scalar neg = negative_part(v).norm();
  Scalar out(0);
  if (pos > Scalar(0)) out += lambda_plus * pow(pos, q + Scalar(1));
  if (neg > Scalar(0)) out += lambda_minus * pow(neg, q + Scalar(1));
  return out / (Scalar(1) + q);
}

/// Gradient of sublinear_potential in v:
///   lambda_+ |v^+|^{q-1} v^+ - lambda_- |v^-|^{q-1} v^-,
/// each term extended by zero where the corresponding part vanishes.
template <typename Derived>
VectorT<typename Derived::Scalar> sublinear_force(const Eigen::MatrixBase<Derived>& v,
                                                  typename Derived::Scalar lambda_plus,
                                                  typename Derived::Scalar lambda_minus,
                                                  typename Derived::Scalar q) {
  using std::pow;
  using Scalar = typename Derived::Scalar;
  const VectorT<Scalar> pos = positive_part(v);
  const VectorT<Scalar> neg = negative_part(v);
  const Scalar pos_norm = pos.norm();
  const Scalar neg_norm = neg.norm();
  VectorT<Scalar> out = VectorT<Scalar>::Zero(v.size());
  if (pos_norm > Scalar(0)) out += lambda_plus * pow(pos_norm, q - Scalar(1)) * pos;
  if (neg_norm > Scalar(0)) out -= lambda_minus * pow(neg_norm, q - Scalar(1)) * neg;
  return out;
}

/// F(x0, v) with the coefficients of `params` evaluated at x0.
inline double eval_F(const Point& x0, const Vector& v, const ProblemParams& params) {
  return sublinear_potential(v, params.lambda_plus(x0), params.lambda_minus(x0), params.q);
}

/// f(x0, v) = grad_v F(x0, v).
inline Vector eval_f(const Point& x0, const Vector& v, const ProblemParams& params) {
  return sublinear_force(v, params.lambda_plus(x0), params.lambda_minus(x0), params.q);
}

}  // namespace fblab
