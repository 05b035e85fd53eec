#pragma once

#include "fblab/fit.hpp"
#include "fblab/grid_field.hpp"
#include "fblab/params.hpp"
#include "fblab/quadrature.hpp"

#include <string>
#include <vector>

namespace fblab {

struct RescaleResult {
  double r = 1.0;
  /// Field on unit_ball_grid(n, out_resolution).
  Field field;
  /// Estimated interpolation error (sup norm, in rescaled units).
  double interp_error = 0.0;
};

/// Sup-norm error estimate of the interpolant of u on the nodes of `ball`
/// (sixth differences times the quintic remainder constant).
double interpolation_error_estimate(const Field& u, const BallSpec& ball);

/// u_{x0,r}(x) = u(r x + x0) / r^kappa sampled on a fresh unit-ball grid.
/// Throws PreconditionError unless B_r(x0) lies in the grid with r >= 4h.
/// Nodes of the output grid outside the source box take the value at the
/// nearest point of the box.
RescaleResult rescale(const Field& u, const Point& x0, double r, const ProblemParams& params,
                      int out_resolution = 65);

/// c(x) = |x|^kappa u_{x0,r}(x/|x|), c(0) = 0: the kappa-homogeneous
/// extension of the trace of u_{x0,r} on the unit sphere.
Field homogeneous_replacement(const Field& u, const Point& x0, double r,
                              const ProblemParams& params, int out_resolution = 65);

/// phi(r) = exp(-(kappa b/alpha) r^alpha) r^kappa.
double phi(double r, const ProblemParams& params, const WeissParams& wp);

/// u(r x + x0) / phi(r) on the unit-ball grid.
RescaleResult phi_rescale(const Field& u, const Point& x0, double r, const ProblemParams& params,
                          const WeissParams& wp, int out_resolution = 65);

enum class NormKind { kW12, kC1 };

const char* to_string(NormKind kind);

struct HFit {
  Point nu;
  Vector e;
  double distance = 0.0;
  NormKind norm = NormKind::kW12;
  /// Distance of the best start before refinement, and the spread of the
  /// start distances.
  double start_best = 0.0;
  double start_worst = 0.0;
  /// Number of starts that are local minima among their neighbours.
  int local_minima = 0;
  int starts = 0;
};

/// Distance from v (a field on a grid covering B_1) to the half-space class
/// {beta(x0) max(x.nu,0)^kappa e}: multistart over unit nu (64 directions in
/// 2D, a Fibonacci lattice in 3D) followed by local refinement; for each nu
/// the best e is P/|P| with P the W^{1,2} inner product of v with
/// beta max(x.nu,0)^kappa. The C^1 variant uses the same e.
HFit dist_to_H(const Field& v, const Point& x0, NormKind norm, const ProblemParams& params);

/// W^{1,2}(B_1) norm of the half-space solutions at x0 (same for every nu),
/// from beta^2 (c_{2kappa}/(n+2kappa) + kappa^2 c_{2kappa-2}/(n+2kappa-2)).
double halfspace_w12_norm(const Point& x0, const ProblemParams& params);

/// C^1(B_1) norm of the half-space solutions at x0: beta (1 + kappa).
double halfspace_c1_norm(const Point& x0, const ProblemParams& params);

enum class PointClass { kRegular, kNotRegular, kNotFreeBoundary };

const char* to_string(PointClass c);

struct BlowupResult {
  std::vector<double> radii;
  /// sup over B_1 nodes of |u_{x0,r_k} - u_{x0,r_{k+1}}|, one per consecutive pair.
  std::vector<double> cauchy;
  /// sup over B_1 of |u_{x0,r_k}| per radius.
  std::vector<double> sup;
  /// Distance to the half-space class of every rescaling.
  std::vector<HFit> fits;
  Field limit;
  HFit fit;
  double interp_error = 0.0;
  double eps_reg = 0.0;
  PointClass verdict = PointClass::kNotRegular;
  std::string note;
};

struct BlowupOptions {
  int out_resolution = 65;
  /// Regular-point threshold as a fraction of the half-space W^{1,2} norm.
  double eps_reg_fraction = 0.1;
  NormKind norm = NormKind::kW12;
};

/// Rescalings at decreasing radii, their Cauchy differences and the
/// half-space fit at the smallest radius. NOT-A-FB-POINT when the sup of the
/// rescalings grows faster than (r_first/r_last)^{kappa/2} or vanishes.
BlowupResult blowup_limit(const Field& u, const Point& x0, const std::vector<double>& radii,
                          const ProblemParams& params, const BlowupOptions& opts = {});

/// For pairs (s, t), s < t: int_{dB_1} |u^phi_{x0,t} - u^phi_{x0,s}|, fitted
/// as C t^p (p estimates delta/2).
struct RotationEstimate {
  std::vector<double> s;
  std::vector<double> t;
  std::vector<double> integral;
  FitResult fit;
};

RotationEstimate rotation_estimate(const Field& u, const Point& x0,
                                   const std::vector<std::pair<double, double>>& pairs,
                                   const ProblemParams& params, const WeissParams& wp,
                                   const QuadratureOptions& opts = {});

}  // namespace fblab
