#include "fblab/blowup.hpp"

#include "fblab/errors.hpp"
#include "fblab/weiss.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fblab {

namespace {

double sup_in_unit_ball(const Field& v) {
  double best = 0.0;
  for (Index i = 0; i < v.num_nodes(); ++i) {
    if (v.position(i).squaredNorm() > 1.0 + 1e-12) continue;
    best = std::max(best, v.values().row(i).norm());
  }
  return best;
}

void check_rescale(const Field& u, const Point& x0, double r) {
  if (x0.size() != u.dim()) throw PreconditionError("rescale: base point has wrong dimension");
  check_ball(u, BallSpec{x0, r});
}

}  // namespace

// Sup-norm interpolation error estimate of the quintic tensor interpolant on
// the nodes of `ball`: the largest undivided sixth difference along an axis
// times the Lagrange remainder constant max|prod_{j=-2..3}(s-j)|/6! on [0,1].
double interpolation_error_estimate(const Field& u, const BallSpec& ball) {
  static const double binom[7] = {1, -6, 15, -20, 15, -6, 1};
  const double remainder = 3.515625 / 720.0;
  const double r2 = ball.radius * ball.radius;
  double worst = 0.0;
  for (Index i = 0; i < u.num_nodes(); ++i) {
    if ((u.position(i) - ball.center).squaredNorm() > r2) continue;
    const NodeIndex k = u.node(i);
    for (int d = 0; d < u.dim(); ++d) {
      const int start = std::clamp(k[d] - 3, 0, u.dims()[d] - 7);
      if (u.dims()[d] < 7) continue;
      const Index base = i + static_cast<Index>(start - k[d]) * u.stride(d);
      Vector diff = Vector::Zero(u.components());
      for (int j = 0; j < 7; ++j) diff += binom[j] * u.value(base + j * u.stride(d));
      worst = std::max(worst, diff.norm());
    }
  }
  return remainder * worst;
}

RescaleResult rescale(const Field& u, const Point& x0, double r, const ProblemParams& params,
                      int out_resolution) {
  check_rescale(u, x0, r);
  if (out_resolution < 5) throw InputError("rescale: output resolution must be at least 5");
  const double scale = std::pow(r, -params.kappa());
  RescaleResult out;
  out.r = r;
  const Field grid = unit_ball_grid<double>(u.dim(), out_resolution, u.components());
  out.field = sample(grid, u.components(), [&](const Point& x) {
    return Vector(scale * interpolate(u, Point(x0 + r * x)));
  });
  out.interp_error = scale * interpolation_error_estimate(u, BallSpec{x0, r});
  return out;
}

Field homogeneous_replacement(const Field& u, const Point& x0, double r,
                              const ProblemParams& params, int out_resolution) {
  check_rescale(u, x0, r);
  const double kappa = params.kappa();
  const double scale = std::pow(r, -kappa);
  const Field grid = unit_ball_grid<double>(u.dim(), out_resolution, u.components());
  return sample(grid, u.components(), [&](const Point& x) {
    const double rho = x.norm();
    if (rho == 0.0) return Vector(Vector::Zero(u.components()));
    const Point y = x0 + (r / rho) * x;
    return Vector(std::pow(rho, kappa) * scale * interpolate(u, y));
  });
}

double phi(double r, const ProblemParams& params, const WeissParams& wp) {
  const double kappa = params.kappa();
  return std::exp(-(kappa * wp.b / params.alpha) * std::pow(r, params.alpha)) * std::pow(r, kappa);
}

RescaleResult phi_rescale(const Field& u, const Point& x0, double r, const ProblemParams& params,
                          const WeissParams& wp, int out_resolution) {
  RescaleResult out = rescale(u, x0, r, params, out_resolution);
  const double factor = std::pow(r, params.kappa()) / phi(r, params, wp);
  out.field.values() *= factor;
  out.interp_error *= factor;
  return out;
}

const char* to_string(NormKind kind) { return kind == NormKind::kW12 ? "W12" : "C1"; }

const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::kRegular:
      return "REGULAR";
    case PointClass::kNotRegular:
      return "NOT-REGULAR";
    case PointClass::kNotFreeBoundary:
      return "NOT-A-FB-POINT";
  }
  return "?";
}

double halfspace_w12_norm(const Point& x0, const ProblemParams& params) {
  const double kappa = params.kappa();
  const double beta = halfspace_beta(params, x0);
  const int n = params.n;
  const double l2 = sphere_cap_moment(n, 2.0 * kappa) / (n + 2.0 * kappa);
  const double grad = kappa * kappa * sphere_cap_moment(n, 2.0 * kappa - 2.0) / (n + 2.0 * kappa - 2.0);
  return beta * std::sqrt(l2 + grad);
}

double halfspace_c1_norm(const Point& x0, const ProblemParams& params) {
  return halfspace_beta(params, x0) * (1.0 + params.kappa());
}

namespace {

// Everything dist_to_H needs about v, evaluated once.
class HalfSpaceDistance {
 public:
  HalfSpaceDistance(const Field& v, const Point& x0, NormKind norm, const ProblemParams& params)
      : n_(v.dim()), m_(v.components()), norm_(norm), kappa_(params.kappa()),
        beta_(halfspace_beta(params, x0)) {
    if (norm == NormKind::kW12) {
      const QuadratureRule rule = ball_rule(v, BallSpec{Point::Zero(n_), 1.0});
      const FieldSampler sampler(v);
      points_ = rule.points;
      weights_ = rule.weights;
      values_.resize(points_.size());
      jacobians_.resize(points_.size());
      for (std::size_t i = 0; i < points_.size(); ++i) {
        sampler.evaluate(points_[i], values_[i], jacobians_[i]);
      }
    } else {
      for (Index i = 0; i < v.num_nodes(); ++i) {
        const Point x = v.position(i);
        if (x.squaredNorm() > 1.0 + 1e-12) continue;
        points_.push_back(x);
        values_.push_back(v.value(i));
        jacobians_.push_back(node_jacobian(v, i));
      }
      weights_.assign(points_.size(), 1.0);
    }
  }

  // Best e for this nu (W^{1,2} projection) and the resulting distance.
  double evaluate(const Point& nu, Vector* e_out) const {
    Vector P = Vector::Zero(m_);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double s = points_[i].dot(nu);
      if (s <= 0.0) continue;
      const double p = beta_ * std::pow(s, kappa_);
      const double dp = beta_ * kappa_ * std::pow(s, kappa_ - 1.0);
      P += weights_[i] * (p * values_[i] + dp * (jacobians_[i] * nu));
    }
    Vector e = Vector::Zero(m_);
    const double pn = P.norm();
    if (pn > 0.0) {
      e = P / pn;
    } else {
      e[0] = 1.0;
    }
    if (e_out) *e_out = e;
    double acc = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double s = std::max(points_[i].dot(nu), 0.0);
      const double p = s > 0.0 ? beta_ * std::pow(s, kappa_) : 0.0;
      const double dp = s > 0.0 ? beta_ * kappa_ * std::pow(s, kappa_ - 1.0) : 0.0;
      const double dv = (values_[i] - p * e).norm();
      const double dj = (jacobians_[i] - dp * e * nu.transpose()).norm();
      if (norm_ == NormKind::kW12) {
        acc += weights_[i] * (dv * dv + dj * dj);
      } else {
        acc = std::max(acc, dv + dj);
      }
    }
    return norm_ == NormKind::kW12 ? std::sqrt(std::max(acc, 0.0)) : acc;
  }

 private:
  int n_;
  int m_;
  NormKind norm_;
  double kappa_;
  double beta_;
  std::vector<Point> points_;
  std::vector<double> weights_;
  std::vector<Vector> values_;
  std::vector<Jacobian> jacobians_;
};

Point angle_to_nu(double theta) {
  Point nu(2);
  nu << std::cos(theta), std::sin(theta);
  return nu;
}

}  // namespace

HFit dist_to_H(const Field& v, const Point& x0, NormKind norm, const ProblemParams& params) {
  const int n = v.dim();
  if (n != params.n) throw InputError("dist_to_H: field dimension differs from params.n");
  const HalfSpaceDistance dist(v, x0, norm, params);
  HFit fit;
  fit.norm = norm;
  if (n == 2) {
    const int starts = 64;
    fit.starts = starts;
    std::vector<double> values(starts);
    for (int k = 0; k < starts; ++k) {
      values[k] = dist.evaluate(angle_to_nu(2.0 * std::numbers::pi * k / starts), nullptr);
    }
    int best = 0;
    for (int k = 0; k < starts; ++k) {
      if (values[k] < values[best]) best = k;
      const double prev = values[(k + starts - 1) % starts];
      const double next = values[(k + 1) % starts];
      if (values[k] < prev && values[k] <= next) ++fit.local_minima;
    }
    fit.start_best = values[best];
    fit.start_worst = *std::max_element(values.begin(), values.end());
    // Golden-section search on the bracket around the best start.
    const double step = 2.0 * std::numbers::pi / starts;
    double a = 2.0 * std::numbers::pi * best / starts - step;
    double b = a + 2.0 * step;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = dist.evaluate(angle_to_nu(c), nullptr);
    double fd = dist.evaluate(angle_to_nu(d), nullptr);
    while (b - a > 1e-9) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = dist.evaluate(angle_to_nu(c), nullptr);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = dist.evaluate(angle_to_nu(d), nullptr);
      }
    }
    double theta = 0.5 * (a + b);
    double value = dist.evaluate(angle_to_nu(theta), nullptr);
    if (values[best] < value) {
      theta = 2.0 * std::numbers::pi * best / starts;
      value = values[best];
    }
    fit.nu = angle_to_nu(theta);
  } else {
    const int starts = 128;
    fit.starts = starts;
    const std::vector<Point> dirs = sphere_directions(3, starts);
    std::vector<double> values(starts);
    for (int k = 0; k < starts; ++k) values[k] = dist.evaluate(dirs[k], nullptr);
    const double spacing = std::sqrt(4.0 * std::numbers::pi / starts);
    int best = 0;
    for (int k = 0; k < starts; ++k) {
      if (values[k] < values[best]) best = k;
      bool local = true;
      for (int j = 0; j < starts && local; ++j) {
        if (j == k) continue;
        const double angle = std::acos(std::clamp(dirs[j].dot(dirs[k]), -1.0, 1.0));
        if (angle < 1.5 * spacing && values[j] < values[k]) local = false;
      }
      if (local) ++fit.local_minima;
    }
    fit.start_best = values[best];
    fit.start_worst = *std::max_element(values.begin(), values.end());
    // Pattern search on the sphere in a tangent frame.
    Point nu = dirs[best];
    double value = values[best];
    double step = 0.5 * spacing;
    while (step > 1e-9) {
      Point t1 = Point::Unit(3, std::abs(nu[0]) < 0.9 ? 0 : 1);
      t1 = (t1 - t1.dot(nu) * nu).normalized();
      const Eigen::Vector3d c = Eigen::Vector3d(nu).cross(Eigen::Vector3d(t1));
      const Point t2 = c;
      bool improved = false;
      for (const Point& dir : {Point(t1), Point(-t1), Point(t2), Point(-t2)}) {
        const Point cand = (std::cos(step) * nu + std::sin(step) * dir).normalized();
        const double val = dist.evaluate(cand, nullptr);
        if (val < value) {
          value = val;
          nu = cand;
          improved = true;
          break;
        }
      }
      if (!improved) step *= 0.5;
    }
    fit.nu = nu;
  }
  fit.distance = dist.evaluate(fit.nu, &fit.e);
  return fit;
}

BlowupResult blowup_limit(const Field& u, const Point& x0, const std::vector<double>& radii,
                          const ProblemParams& params, const BlowupOptions& opts) {
  if (radii.empty()) throw PreconditionError("blowup_limit needs at least one radius");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] < radii[i - 1])) {
      throw PreconditionError("blowup_limit: radii must be strictly decreasing");
    }
  }
  BlowupResult out;
  out.radii = radii;
  out.eps_reg = opts.eps_reg_fraction * (opts.norm == NormKind::kW12
                                             ? halfspace_w12_norm(x0, params)
                                             : halfspace_c1_norm(x0, params));
  Field previous;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    RescaleResult rs = rescale(u, x0, radii[i], params, opts.out_resolution);
    out.interp_error = std::max(out.interp_error, rs.interp_error);
    out.sup.push_back(sup_in_unit_ball(rs.field));
    out.fits.push_back(dist_to_H(rs.field, x0, opts.norm, params));
    if (i > 0) {
      Field diff = rs.field;
      diff.values() -= previous.values();
      out.cauchy.push_back(sup_in_unit_ball(diff));
    }
    previous = std::move(rs.field);
  }
  out.limit = std::move(previous);
  out.fit = out.fits.back();

  const double kappa = params.kappa();
  const double growth_cap = std::pow(radii.front() / radii.back(), 0.5 * kappa);
  const double first = out.sup.front();
  const double last = out.sup.back();
  if (last == 0.0) {
    out.verdict = PointClass::kNotFreeBoundary;
    out.note = "rescalings vanish: x0 is interior to the zero set";
  } else if (radii.size() > 1 && (first == 0.0 || last / first > growth_cap)) {
    out.verdict = PointClass::kNotFreeBoundary;
    out.note = "sup of rescalings grows faster than the r^kappa scaling allows";
  } else if (out.fit.distance <= out.eps_reg) {
    out.verdict = PointClass::kRegular;
  } else {
    out.verdict = PointClass::kNotRegular;
    out.note = "distance to the half-space class exceeds eps_reg";
  }
  return out;
}

RotationEstimate rotation_estimate(const Field& u, const Point& x0,
                                   const std::vector<std::pair<double, double>>& pairs,
                                   const ProblemParams& params, const WeissParams& wp,
                                   const QuadratureOptions& opts) {
  RotationEstimate out;
  const int n = u.dim();
  const int count = opts.sphere_points > 0 ? opts.sphere_points : default_sphere_points(n);
  for (const auto& [s, t] : pairs) {
    if (!(s < t)) throw PreconditionError("rotation_estimate: pairs need s < t");
    check_ball(u, BallSpec{x0, s}, opts);
    check_ball(u, BallSpec{x0, t}, opts);
    const double ps = phi(s, params, wp);
    const double pt = phi(t, params, wp);
    const double integral =
        sphere_integral_fn(n, BallSpec{Point::Zero(n), 1.0}, count, [&](const Point& x, const Point&) {
          const Vector a = interpolate(u, Point(x0 + t * x)) / pt;
          const Vector b = interpolate(u, Point(x0 + s * x)) / ps;
          return (a - b).norm();
        });
    out.s.push_back(s);
    out.t.push_back(t);
    out.integral.push_back(integral);
  }
  out.fit = fit_power_law(out.t, out.integral);
  return out;
}

}  // namespace fblab
