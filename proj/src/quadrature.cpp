#include "fblab/quadrature.hpp"

#include "fblab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fblab {

int default_sphere_points(int n) { return n == 2 ? 512 : 2048; }

double ball_volume(int n, double radius) {
  if (n == 2) return std::numbers::pi * radius * radius;
  if (n == 3) return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
  return 2.0 * radius;
}

double sphere_area(int n, double radius) {
  if (n == 2) return 2.0 * std::numbers::pi * radius;
  if (n == 3) return 4.0 * std::numbers::pi * radius * radius;
  return 2.0;
}

void check_ball(const Field& grid, const BallSpec& ball, const QuadratureOptions& opts) {
  const int n = grid.dim();
  if (ball.center.size() != n) throw PreconditionError("ball center has wrong dimension");
  if (!(ball.radius > 0.0) || !std::isfinite(ball.radius)) {
    throw PreconditionError("ball radius must be positive");
  }
  if (ball.radius < opts.min_cells * grid.spacing() * (1.0 - 1e-9)) {
    std::ostringstream os;
    os << "degenerate radius: r = " << ball.radius << " spans fewer than " << opts.min_cells
       << " grid cells (spacing " << grid.spacing() << ")";
    throw PreconditionError(os.str());
  }
  const Point lo = grid.lower();
  const Point hi = grid.upper();
  const double slack = 1e-9 * grid.spacing();
  for (int d = 0; d < n; ++d) {
    if (ball.center[d] - ball.radius < lo[d] - slack || ball.center[d] + ball.radius > hi[d] + slack) {
      std::ostringstream os;
      os << "ball outside grid: B(" << ball.center.transpose() << "; " << ball.radius
         << ") leaves the box along axis " << d;
      throw PreconditionError(os.str());
    }
  }
}

std::vector<Point> sphere_directions(int n, int count) {
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double theta = 2.0 * std::numbers::pi * k / count;
      Point p(2);
      p << std::cos(theta), std::sin(theta);
      out.push_back(p);
    }
  } else {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / count;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * k;
      Point p(3);
      p << rho * std::cos(phi), rho * std::sin(phi), z;
      out.push_back(p);
    }
  }
  return out;
}

namespace {

void require_scalar(const Field& expr) {
  if (expr.components() != 1) throw InputError("quadrature expects a scalar node field");
}

}  // namespace

double ball_integral(const Field& expr, const BallSpec& ball, const QuadratureOptions& opts) {
  require_scalar(expr);
  check_ball(expr, ball, opts);
  return detail::integrate_ball(expr, ball, opts,
                        [&](const Point& x) { return interpolate_component(expr, x, 0); });
}

double sphere_integral(const Field& expr, const BallSpec& ball, const QuadratureOptions& opts) {
  require_scalar(expr);
  check_ball(expr, ball, opts);
  const int count = opts.sphere_points > 0 ? opts.sphere_points : default_sphere_points(expr.dim());
  return sphere_integral_fn(expr.dim(), ball, count, [&](const Point& x, const Point&) {
    return interpolate_component(expr, x, 0);
  });
}

QuadratureRule ball_rule(const Field& grid, const BallSpec& ball, const QuadratureOptions& opts) {
  check_ball(grid, ball, opts);
  QuadratureRule rule;
  detail::for_each_ball_point(grid, ball, opts, [&](const Point& x, double w) {
    rule.points.push_back(x);
    rule.weights.push_back(w);
  });
  return rule;
}

QuadratureRule sphere_rule(int n, const BallSpec& ball, int count) {
  QuadratureRule rule;
  const std::vector<Point> dirs = sphere_directions(n, count);
  const double w = sphere_area(n, ball.radius) / static_cast<double>(dirs.size());
  for (const Point& dir : dirs) {
    rule.points.push_back(ball.center + ball.radius * dir);
    rule.weights.push_back(w);
  }
  return rule;
}

double quadrature_relative_error(const Field& grid, const BallSpec& ball,
                                 const QuadratureOptions& opts) {
  check_ball(grid, ball, opts);
  const int n = grid.dim();
  const double vol = detail::integrate_ball(grid, ball, opts, [](const Point&) { return 1.0; });
  const double exact_vol = ball_volume(n, ball.radius);
  const int count = opts.sphere_points > 0 ? opts.sphere_points : default_sphere_points(n);
  const double area = sphere_integral_fn(n, ball, count, [](const Point&, const Point&) { return 1.0; });
  const double exact_area = sphere_area(n, ball.radius);
  return std::max(std::abs(vol - exact_vol) / exact_vol, std::abs(area - exact_area) / exact_area);
}

Field energy_density(const Field& u, const ProblemParams& params) {
  return node_map(u, [&](Index i) {
    const double g2 = node_jacobian(u, i).squaredNorm();
    const double un = u.values().row(i).norm();
    return g2 + (un > 0.0 ? std::pow(un, params.q + 1.0) : 0.0);
  });
}

double energy_E(const Field& u, const BallSpec& ball, const ProblemParams& params,
                const QuadratureOptions& opts) {
  const FieldSampler sampler(u);
  Vector value;
  Jacobian jac;
  return ball_integral_fn(u, ball, opts, [&](const Point& x) {
    sampler.evaluate(x, value, jac);
    const double un = value.norm();
    return jac.squaredNorm() + (un > 0.0 ? std::pow(un, params.q + 1.0) : 0.0);
  });
}

double w12_norm(const Field& v, const BallSpec& ball, const QuadratureOptions& opts) {
  const FieldSampler sampler(v);
  Vector value;
  Jacobian jac;
  const double sq = ball_integral_fn(v, ball, opts, [&](const Point& x) {
    sampler.evaluate(x, value, jac);
    return value.squaredNorm() + jac.squaredNorm();
  });
  return std::sqrt(std::max(0.0, sq));
}

double c1_norm(const Field& v, const BallSpec& ball) {
  double best = 0.0;
  const double r2 = ball.radius * ball.radius * (1.0 + 1e-12);
  for (Index i = 0; i < v.num_nodes(); ++i) {
    if ((v.position(i) - ball.center).squaredNorm() > r2) continue;
    best = std::max(best, v.values().row(i).norm() + node_jacobian(v, i).norm());
  }
  return best;
}

}  // namespace fblab
