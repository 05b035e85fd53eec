#include "fblab/params.hpp"

#include "fblab/errors.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace fblab {

Coefficient::Coefficient(double value) : value_(value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  description_ = os.str();
}

Coefficient::Coefficient(Function fn, std::string description)
    : fn_(std::move(fn)), description_(std::move(description)) {}

ProblemParams ProblemParams::frozen_at(const Point& x0) const {
  ProblemParams out = *this;
  out.lambda_plus = Coefficient(lambda_plus(x0));
  out.lambda_minus = Coefficient(lambda_minus(x0));
  return out;
}

void validate(const ProblemParams& p) {
  std::ostringstream err;
  if (p.n != 2 && p.n != 3) err << "n must be 2 or 3 (got " << p.n << "); ";
  if (p.m < 1) err << "m must be >= 1; ";
  if (!(p.q > 0.0 && p.q < 1.0)) err << "q must lie in (0,1); ";
  if (!(p.alpha > 0.0 && p.alpha < 2.0)) err << "alpha must lie in (0,2); ";
  if (!(p.lambda0 > 0.0 && p.lambda0 <= p.lambda1)) err << "need 0 < lambda0 <= lambda1; ";
  if (!(p.M > 2.0)) err << "M must exceed 2; ";
  if (p.lambda0 > 0.0 && p.M < 1.0 / p.lambda0) err << "M must be >= 1/lambda0; ";
  if (p.M < p.lambda1) err << "M must be >= lambda1; ";
  const std::string msg = err.str();
  if (!msg.empty()) throw InputError("invalid problem parameters: " + msg);
}

bool coefficients_in_bounds(const ProblemParams& p, const Point& x) {
  const double lp = p.lambda_plus(x);
  const double lm = p.lambda_minus(x);
  const double slack = 1e-12 * p.lambda1;
  return lp >= p.lambda0 - slack && lp <= p.lambda1 + slack && lm >= p.lambda0 - slack &&
         lm <= p.lambda1 + slack;
}

double halfspace_beta(const ProblemParams& p, const Point& x0) {
  const double kappa = p.kappa();
  return std::pow(p.lambda_plus(x0), kappa / 2.0) * std::pow(kappa * (kappa - 1.0), -kappa / 2.0);
}

WeissParams WeissParams::from(const ProblemParams& p) {
  const double kappa = p.kappa();
  WeissParams w;
  w.a = p.M * (p.n + 2.0 * kappa - 2.0) / p.alpha;
  w.b = p.M * (p.n + 2.0 * kappa) / p.alpha;
  return w;
}

}  // namespace fblab
