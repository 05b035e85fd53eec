#pragma once

#include "fblab/grid_field.hpp"
#include "fblab/params.hpp"
#include "fblab/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fblab {

/// The closed ball B_r(x0).
struct BallSpec {
  Point center;
  double radius = 1.0;
};

struct QuadratureOptions {
  /// Sub-cells per axis used to resolve cells cut by the sphere.
  int subsamples = 4;
  /// Levels of subdivision applied to cut cells (each splits by subsamples).
  int refine_levels = 2;
  /// Directions on the sphere; 0 selects 512 (n=2) or 2048 (n=3).
  int sphere_points = 0;
  /// Minimum number of grid cells across the radius.
  double min_cells = 4.0;
};

int default_sphere_points(int n);
double ball_volume(int n, double radius);
double sphere_area(int n, double radius);

/// Throws PreconditionError unless the closed ball lies in the grid box and
/// spans at least opts.min_cells cells across its radius.
void check_ball(const Field& grid, const BallSpec& ball, const QuadratureOptions& opts = {});

/// Integral of a scalar node field over B_r. Cells inside the ball use a
/// 3-point tensor Gauss rule on the interpolant; cells cut by the sphere are
/// split recursively into subsamples^n sub-cells, the finest cut ones
/// weighted by the fraction of them lying inside the ball.
double ball_integral(const Field& expr, const BallSpec& ball, const QuadratureOptions& opts = {});

/// Integral of a scalar node field over the sphere of the ball, sampled at
/// equidistributed directions with uniform surface weights.
double sphere_integral(const Field& expr, const BallSpec& ball, const QuadratureOptions& opts = {});

/// Equidistributed unit directions: uniform angles for n=2, a Fibonacci
/// lattice for n=3.
std::vector<Point> sphere_directions(int n, int count);

namespace detail {

// Tensor Gauss rule (3 points per axis) over the box [corner, corner + size];
// emit(x, weight) per point.
template <typename Emit>
void gauss_box(int n, const Point& corner, double size, Emit&& emit) {
  static const double g = 0.5 * std::sqrt(0.6);
  static const double nodes[3] = {0.5 - g, 0.5, 0.5 + g};
  static const double weights[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  Point x(n);
  const double volume = std::pow(size, n);
  const int na = 3;
  const int nb = n > 1 ? 3 : 1;
  const int nc = n > 2 ? 3 : 1;
  for (int a = 0; a < na; ++a) {
    for (int b = 0; b < nb; ++b) {
      for (int c = 0; c < nc; ++c) {
        const int gi[kMaxDim] = {a, b, c};
        double w = 1.0;
        for (int d = 0; d < n; ++d) {
          x[d] = corner[d] + size * nodes[gi[d]];
          w *= weights[gi[d]];
        }
        emit(x, w * volume);
      }
    }
  }
}

// Integral of eval over the part of a box inside the ball. Boxes cut by the
// sphere are split into subsamples^n children `depth` times; at the last
// level a cut box contributes its covered fraction times the integrand at
// the centroid of the covered part.
template <typename Emit>
void integrate_box(int n, const BallSpec& ball, const Point& corner, double size, int split,
                   int depth, Emit&& emit) {
  const double r2 = ball.radius * ball.radius;
  double near2 = 0.0;
  double far2 = 0.0;
  for (int d = 0; d < n; ++d) {
    const double a = corner[d] - ball.center[d];
    const double b = a + size;
    const double nearest = (a > 0.0) ? a : (b < 0.0 ? b : 0.0);
    near2 += nearest * nearest;
    far2 += std::max(a * a, b * b);
  }
  if (near2 >= r2) return;
  if (far2 <= r2) {
    gauss_box(n, corner, size, emit);
    return;
  }
  if (depth > 0) {
    const double child = size / split;
    const int sb = n > 1 ? split : 1;
    const int sc = n > 2 ? split : 1;
    Point sub(n);
    for (int a = 0; a < split; ++a) {
      for (int b = 0; b < sb; ++b) {
        for (int c = 0; c < sc; ++c) {
          const int si[kMaxDim] = {a, b, c};
          for (int d = 0; d < n; ++d) sub[d] = corner[d] + child * si[d];
          integrate_box(n, ball, sub, child, split, depth - 1, emit);
        }
      }
    }
    return;
  }
  Point x(n);
  double dist2 = 0.0;
  for (int d = 0; d < n; ++d) {
    x[d] = corner[d] + 0.5 * size;
    const double t = x[d] - ball.center[d];
    dist2 += t * t;
  }
  const double dist = std::sqrt(dist2);
  if (dist == 0.0) {
    emit(x, std::pow(size, n));
    return;
  }
  // Smoothed indicator: linear ramp across the box width measured along the
  // sphere normal.
  double width = 0.0;
  for (int d = 0; d < n; ++d) width += std::abs(x[d] - ball.center[d]);
  width *= size / dist;
  const double frac = std::clamp(0.5 + (ball.radius - dist) / width, 0.0, 1.0);
  if (frac <= 0.0) return;
  if (frac < 1.0) {
    const double shift = 0.5 * (1.0 - frac) * width / dist;
    for (int d = 0; d < n; ++d) x[d] -= shift * (x[d] - ball.center[d]);
  }
  emit(x, frac * std::pow(size, n));
}

// Calls emit(x, weight) for every quadrature point of the ball rule, cell by
// cell over the grid cells that meet the ball.
template <typename Emit>
void for_each_ball_point(const Field& grid, const BallSpec& ball, const QuadratureOptions& opts,
                         Emit&& emit) {
  const int n = grid.dim();
  const double h = grid.spacing();
  const double r = ball.radius;
  int lo[kMaxDim] = {0, 0, 0};
  int hi[kMaxDim] = {0, 0, 0};
  for (int d = 0; d < n; ++d) {
    const double a = (ball.center[d] - r - grid.origin()[d]) / h;
    const double b = (ball.center[d] + r - grid.origin()[d]) / h;
    lo[d] = std::clamp(static_cast<int>(std::floor(a)), 0, grid.dims()[d] - 2);
    hi[d] = std::clamp(static_cast<int>(std::floor(b)), 0, grid.dims()[d] - 2);
  }
  const int split = std::max(2, opts.subsamples);
  const int depth = std::max(1, opts.refine_levels);
  Point corner(n);
  for (int i = lo[0]; i <= hi[0]; ++i) {
    for (int j = (n > 1 ? lo[1] : 0); j <= (n > 1 ? hi[1] : 0); ++j) {
      for (int k = (n > 2 ? lo[2] : 0); k <= (n > 2 ? hi[2] : 0); ++k) {
        const int idx[kMaxDim] = {i, j, k};
        for (int d = 0; d < n; ++d) corner[d] = grid.origin()[d] + h * idx[d];
        integrate_box(n, ball, corner, h, split, depth, emit);
      }
    }
  }
}

template <typename Eval>
double integrate_ball(const Field& grid, const BallSpec& ball, const QuadratureOptions& opts,
                      Eval&& eval) {
  double total = 0.0;
  for_each_ball_point(grid, ball, opts, [&](const Point& x, double w) { total += w * eval(x); });
  return total;
}

}  // namespace detail

/// Integral of a pointwise integrand fn(x) over B_r with the same cell rule
/// as ball_integral; `grid` supplies the cells.
template <typename Fn>
double ball_integral_fn(const Field& grid, const BallSpec& ball, const QuadratureOptions& opts,
                        Fn&& fn) {
  check_ball(grid, ball, opts);
  return detail::integrate_ball(grid, ball, opts, fn);
}

/// A quadrature rule stored as points and weights.
struct QuadratureRule {
  std::vector<Point> points;
  std::vector<double> weights;
};

/// The ball rule used by ball_integral_fn, materialized.
QuadratureRule ball_rule(const Field& grid, const BallSpec& ball, const QuadratureOptions& opts = {});

/// The sphere rule used by sphere_integral_fn; weights are uniform.
QuadratureRule sphere_rule(int n, const BallSpec& ball, int count);

/// Sphere integral of fn(x, direction) over the boundary of `ball`.
template <typename Fn>
double sphere_integral_fn(int n, const BallSpec& ball, int count, Fn&& fn) {
  const std::vector<Point> dirs = sphere_directions(n, count);
  double sum = 0.0;
  for (const Point& dir : dirs) {
    const Point x = ball.center + ball.radius * dir;
    sum += fn(x, dir);
  }
  return sum * sphere_area(n, ball.radius) / static_cast<double>(dirs.size());
}

/// Relative quadrature error of the constant field 1 on the ball and its
/// sphere (the larger of the two); the calibration used for tolerances.
double quadrature_relative_error(const Field& grid, const BallSpec& ball,
                                 const QuadratureOptions& opts = {});

/// |grad u|^2 + |u|^{q+1} at every node.
Field energy_density(const Field& u, const ProblemParams& params);

/// E(u, B) = int_B |grad u|^2 + |u|^{q+1}.
double energy_E(const Field& u, const BallSpec& ball, const ProblemParams& params,
                const QuadratureOptions& opts = {});

/// Discrete W^{1,2}(B) norm: sqrt of ball_integral(|v|^2 + |grad v|^2).
double w12_norm(const Field& v, const BallSpec& ball, const QuadratureOptions& opts = {});

/// Discrete C^1(B) norm: max over nodes in B of |v| + |grad v|.
double c1_norm(const Field& v, const BallSpec& ball);

}  // namespace fblab
