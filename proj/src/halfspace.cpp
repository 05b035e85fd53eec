#include "fblab/halfspace.hpp"

#include "fblab/errors.hpp"

namespace fblab {

HalfSpaceSolution make_halfspace(const ProblemParams& params, const Point& x0, const Point& nu,
                                 const Vector& e) {
  if (nu.size() != params.n || x0.size() != params.n) {
    throw InputError("half-space: base point and normal must live in R^n");
  }
  if (e.size() != params.m) throw InputError("half-space: direction e must live in R^m");
  if (nu.norm() == 0.0 || e.norm() == 0.0) {
    throw InputError("half-space: nu and e must be nonzero");
  }
  HalfSpaceSolution hs;
  hs.x0 = x0;
  hs.nu = nu.normalized();
  hs.e = e.normalized();
  hs.kappa = params.kappa();
  hs.beta = halfspace_beta(params, x0);
  return hs;
}

}  // namespace fblab
