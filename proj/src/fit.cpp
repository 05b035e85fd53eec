#include "fblab/fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace fblab {

FitResult fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  FitResult out;
  out.radii = x;
  out.values = y;
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) {
    out.note = "fewer than two positive samples";
    return out;
  }
  const auto [lo, hi] = std::minmax_element(lx.begin(), lx.end());
  if (*hi - *lo < 1e-12) {
    out.note = "abscissae coincide";
    return out;
  }
  const Eigen::Index k = static_cast<Eigen::Index>(lx.size());
  Eigen::MatrixXd A(k, 2);
  Eigen::VectorXd b(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = lx[static_cast<std::size_t>(i)];
    b[i] = ly[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(b);
  out.exponent = coef[1];
  out.constant = std::exp(coef[0]);
  out.residual = (A * coef - b).cwiseAbs().maxCoeff();
  out.ok = std::isfinite(out.exponent) && std::isfinite(out.constant);
  if (!out.ok) out.note = "non-finite fit";
  return out;
}

}  // namespace fblab
