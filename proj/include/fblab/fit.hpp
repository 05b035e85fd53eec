#pragma once

#include <string>
#include <vector>

namespace fblab {

/// Power law y ~ constant * x^exponent fitted by least squares in log-log.
struct FitResult {
  double exponent = 0.0;
  double constant = 0.0;
  /// Largest |log y_i - log(constant x_i^exponent)|.
  double residual = 0.0;
  std::vector<double> radii;
  std::vector<double> values;
  bool ok = false;
  std::string note;
};

/// Fits log y = log C + p log x over the pairs with x > 0 and y > 0. Needs
/// at least two usable pairs with distinct x; otherwise returns ok = false
/// with a note.
FitResult fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace fblab
