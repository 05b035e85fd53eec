#pragma once

#include "fblab/blowup.hpp"
#include "fblab/fit.hpp"
#include "fblab/grid_field.hpp"
#include "fblab/params.hpp"
#include "fblab/quadrature.hpp"

#include <string>
#include <vector>

namespace fblab {

/// Default threshold for extract_gamma, relative to max|u|.
inline constexpr double kDefaultTauRel = 1e-10;

/// Crossing points of |u| = tau on grid edges, sorted lexicographically.
struct FreeBoundarySet {
  std::vector<Point> points;
  /// Edge endpoints per point: `inner` has |u| > tau, `outer` has |u| <= tau.
  std::vector<Index> inner;
  std::vector<Index> outer;
  /// Connected component per point (points on edges of a common cell are
  /// connected), numbered in order of first appearance.
  std::vector<int> labels;
  int components = 0;
  double tau = 0.0;
  std::string note;
};

/// Marching-edges extraction with tau = tau_rel * max|u|. On each crossing
/// edge the point is placed where g = |u|^{1/kappa}, extrapolated linearly
/// from the two nearest nodes on the positive side, vanishes (g is linear
/// across a regular interface); when that is unavailable, where |u|
/// crosses tau. Points are clamped to their edge.
FreeBoundarySet extract_gamma(const Field& u, double tau_rel, const ProblemParams& params);

/// `count` geometric radii from max(4.5h, r_max/8) to r_max, where r_max is
/// the smaller of `cap` and 99% of the distance from x0 to the box boundary.
/// Throws PreconditionError when no admissible radius exists.
std::vector<double> auto_radii(const Field& u, const Point& x0, int count = 4, double cap = 0.4);

struct GrowthFit {
  FitResult sup;
  FitResult energy;
  std::vector<double> sup_values;
  std::vector<double> energy_values;
  /// |u(x0)| is comparable to the sup at the smallest radius.
  bool not_fb_point = false;
};

/// Log-log fits of sup_{B_r}|u| (nodes in the ball plus sphere samples) and
/// of E(u, r) against r.
GrowthFit growth_fit(const Field& u, const Point& x0, const std::vector<double>& radii,
                     const ProblemParams& params, const QuadratureOptions& opts = {});

struct NondegeneracyResult {
  FitResult fit;
  /// min_r sup_{B_r}|u| / r^kappa and min_r E(u,r) / r^{n+2kappa-2}.
  double c0_hat = 0.0;
  double eps0_hat = 0.0;
  /// Largest quadrature error of E(u,r)/r^{n+2kappa-2} and interpolation
  /// error of sup/r^kappa over the radii.
  double eps0_floor = 0.0;
  double c0_floor = 0.0;
  bool pass = false;
};

/// When `gamma` is given, x0 must lie within one cell diagonal of one of
/// its points.
NondegeneracyResult nondegeneracy_check(const Field& u, const Point& x0,
                                        const std::vector<double>& radii,
                                        const ProblemParams& params,
                                        const FreeBoundarySet* gamma = nullptr,
                                        const QuadratureOptions& opts = {});

struct ClassifyOptions {
  BlowupOptions blowup;
  /// Gamma^kappa proxy: fitted sup slope within kappa +- slope_band.
  double slope_band = 0.25;
};

struct Classification {
  PointClass verdict = PointClass::kNotRegular;
  HFit fit;
  double sup_slope = 0.0;
  double energy_slope = 0.0;
  double c0_hat = 0.0;
  std::vector<double> cauchy;
  std::string note;
};

/// Blowup at the given radii (any order) plus the growth test.
Classification classify_regular(const Field& u, const Point& x0, const std::vector<double>& radii,
                                const ProblemParams& params, const ClassifyOptions& opts = {});

struct NormalFit {
  FitResult fit;
  std::vector<Point> points;
  std::vector<Classification> classes;
  /// Pair samples entering the fit.
  std::vector<double> pair_distance;
  std::vector<double> pair_difference;
  double band_min = 0.0;
  double band_max = 0.0;
  bool constant_normal = false;
  int regular_points = 0;
  std::string note;
};

struct NormalFitOptions {
  ClassifyOptions classify;
  /// Pair band [band_min, band_max]; zero picks 4 h and half the diameter
  /// of the regular point set.
  double band_min = 0.0;
  double band_max = 0.0;
  /// Pair differences at or below this count as identical normals.
  double constant_tol = 1e-6;
};

/// Classifies every point, then fits log|nu_i - nu_j| against log|x_i - x_j|
/// over regular pairs in the band. Throws PreconditionError with fewer than
/// 8 regular points.
NormalFit normal_field_fit(const Field& u, const std::vector<Point>& fb_points,
                           const std::vector<double>& radii, const ProblemParams& params,
                           const NormalFitOptions& opts = {});

/// The fitting half of normal_field_fit for points already classified
/// (classes[i] belongs to points[i]); `u` supplies the grid spacing.
NormalFit fit_normals(const Field& u, std::vector<Point> points,
                      std::vector<Classification> classes, const NormalFitOptions& opts = {});

struct GraphFit {
  Point x0;
  Point nu;
  /// Tangential coordinates (n-1 per sample) and heights.
  std::vector<Point> x_tangent;
  std::vector<double> g;
  double lipschitz = 0.0;
  FitResult gradient_holder;
  bool constant_gradient = false;
  std::string note;
};

struct GraphOptions {
  /// Column spacing relative to the grid spacing.
  double column_spacing = 1.0;
  double tau_rel = kDefaultTauRel;
  ClassifyOptions classify;
  /// Blowup radii for the classification at x0; empty selects auto_radii.
  std::vector<double> radii;
  double constant_tol = 1e-6;
};

/// Interface as a graph over the tangent plane at x0, in a cube of side
/// `window` centred at x0 and rotated so that nu(x0) is the last axis.
/// Throws PreconditionError when x0 is not regular, the window leaves the
/// grid, or some column has no interface crossing.
GraphFit graph_fit(const Field& u, const Point& x0, double window, const ProblemParams& params,
                   const GraphOptions& opts);

}  // namespace fblab
