#pragma once

#include "fblab/grid_field.hpp"
#include "fblab/params.hpp"
#include "fblab/types.hpp"

#include <cmath>

namespace fblab {

/// x -> beta max((x - x0).nu, 0)^kappa e, an exact one-sided solution of the
/// sublinear system when e has nonnegative components.
template <typename Scalar>
struct HalfSpaceSolutionT {
  PointT<Scalar> x0;
  PointT<Scalar> nu;
  VectorT<Scalar> e;
  Scalar beta = Scalar(0);
  Scalar kappa = Scalar(4);
};

using HalfSpaceSolution = HalfSpaceSolutionT<double>;

/// Builds the half-space solution for `params` based at x0; nu and e are
/// normalized, beta is taken from lambda_+(x0).
HalfSpaceSolution make_halfspace(const ProblemParams& params, const Point& x0, const Point& nu,
                                 const Vector& e);

template <typename Scalar>
VectorT<Scalar> halfspace_eval(const HalfSpaceSolutionT<Scalar>& hs, const PointT<Scalar>& x) {
  using std::pow;
  const Scalar s = (x - hs.x0).dot(hs.nu);
  if (s <= Scalar(0)) return VectorT<Scalar>::Zero(hs.e.size());
  return hs.beta * pow(s, hs.kappa) * hs.e;
}

/// Exact Jacobian beta kappa max(s,0)^{kappa-1} e nu^T.
template <typename Scalar>
JacobianT<Scalar> halfspace_jacobian(const HalfSpaceSolutionT<Scalar>& hs,
                                     const PointT<Scalar>& x) {
  using std::pow;
  const Scalar s = (x - hs.x0).dot(hs.nu);
  if (s <= Scalar(0)) return JacobianT<Scalar>::Zero(hs.e.size(), hs.nu.size());
  return hs.beta * hs.kappa * pow(s, hs.kappa - Scalar(1)) * hs.e * hs.nu.transpose();
}

template <typename Scalar>
GridField<Scalar> sample_halfspace(const GridField<Scalar>& geometry,
                                   const HalfSpaceSolutionT<Scalar>& hs) {
  return sample(geometry, static_cast<int>(hs.e.size()),
                [&](const PointT<Scalar>& x) { return halfspace_eval(hs, x); });
}

}  // namespace fblab
