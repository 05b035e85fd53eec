#pragma once

#include "fblab/types.hpp"

#include <functional>
#include <string>

namespace fblab {

/// A coefficient field lambda(x): either a constant or a smooth callable.
class Coefficient {
 public:
  using Function = std::function<double(const Point&)>;

  Coefficient(double value = 1.0);  // NOLINT(google-explicit-constructor)
  Coefficient(Function fn, std::string description);

  double operator()(const Point& x) const { return fn_ ? fn_(x) : value_; }

  bool is_constant() const { return !fn_; }
  const std::string& description() const { return description_; }

 private:
  double value_ = 1.0;
  Function fn_;
  std::string description_;
};

/// Parameters of the energy  int |grad u|^2 + 2F(x,u)  with
/// F(x,u) = (lambda_+ |u^+|^{q+1} + lambda_- |u^-|^{q+1}) / (1+q).
///
/// M is the single bookkeeping constant bounding the Hoelder norms of the
/// coefficients, 1/lambda0, lambda1 and the gauge M r^alpha.
struct ProblemParams {
  int n = 2;
  int m = 1;
  double q = 0.5;
  double alpha = 1.0;
  Coefficient lambda_plus{1.0};
  Coefficient lambda_minus{1.0};
  double lambda0 = 1.0;
  double lambda1 = 1.0;
  double M = 2.5;

  /// Critical homogeneity 2/(1-q).
  double kappa() const { return 2.0 / (1.0 - q); }

  /// Copy with lambda_+- frozen at x0.
  ProblemParams frozen_at(const Point& x0) const;
};

/// Throws InputError unless n in {2,3}, m >= 1, 0 < q < 1, 0 < alpha < 2,
/// 0 < lambda0 <= lambda1 and M > 2, M >= 1/lambda0, M >= lambda1.
void validate(const ProblemParams& params);

/// Checks lambda0 <= lambda_+-(x) <= lambda1 at x.
bool coefficients_in_bounds(const ProblemParams& params, const Point& x);

/// Half-space amplitude lambda_+(x0)^{kappa/2} (kappa(kappa-1))^{-kappa/2}.
double halfspace_beta(const ProblemParams& params, const Point& x0);

/// Weiss constants a = M(n+2kappa-2)/alpha and b = M(n+2kappa)/alpha.
struct WeissParams {
  double a = 0.0;
  double b = 0.0;
  double t0 = 0.5;

  static WeissParams from(const ProblemParams& params);
  static WeissParams zero() { return {}; }
};

}  // namespace fblab
