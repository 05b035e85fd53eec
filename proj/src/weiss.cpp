#include "fblab/weiss.hpp"

#include "fblab/errors.hpp"
#include "fblab/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fblab {

WeissEnergy::WeissEnergy(const Field& u, const ProblemParams& params, const QuadratureOptions& opts)
    : sampler_(u), params_(params), opts_(opts) {}

void WeissEnergy::check(const Point& x0, double t) const {
  check_ball(field(), BallSpec{x0, t}, opts_);
}

int WeissEnergy::sphere_points() const {
  return opts_.sphere_points > 0 ? opts_.sphere_points : default_sphere_points(field().dim());
}

double WeissEnergy::bulk(const Point& x0, const Point& x1, double t) const {
  check(x0, t);
  const double lp = params_.lambda_plus(x1);
  const double lm = params_.lambda_minus(x1);
  const double q = params_.q;
  Vector value;
  Jacobian jac;
  return ball_integral_fn(field(), BallSpec{x0, t}, opts_, [&](const Point& x) {
    sampler_.evaluate(x, value, jac);
    return jac.squaredNorm() + 2.0 * sublinear_potential(value, lp, lm, q);
  });
}

double WeissEnergy::sphere_l2(const Point& x0, double t) const {
  check(x0, t);
  return sphere_integral_fn(field().dim(), BallSpec{x0, t}, sphere_points(),
                            [&](const Point& x, const Point&) { return sampler_.value(x).squaredNorm(); });
}

double WeissEnergy::W(const Point& x0, const Point& x1, double t, const WeissParams& wp) const {
  const double kappa = params_.kappa();
  const int n = field().dim();
  const double ta = std::pow(t, params_.alpha);
  const double pre = std::exp(wp.a * ta) * std::pow(t, -(n + 2.0 * kappa - 2.0));
  return pre * (bulk(x0, x1, t) - kappa * (1.0 - wp.b * ta) / t * sphere_l2(x0, t));
}

double WeissEnergy::W0(const Point& z, const Point& y, double s) const {
  return W(z, y, s, WeissParams::zero());
}

double WeissEnergy::R(const Point& x0, double t, const WeissParams& wp) const {
  check(x0, t);
  const double kappa = params_.kappa();
  const int n = field().dim();
  const double ta = std::pow(t, params_.alpha);
  const double coef = kappa * (1.0 - wp.b * ta) / t;
  Vector value;
  Jacobian jac;
  const double integral =
      sphere_integral_fn(n, BallSpec{x0, t}, sphere_points(), [&](const Point& x, const Point& nu) {
        sampler_.evaluate(x, value, jac);
        return (jac * nu - coef * value).squaredNorm();
      });
  return std::exp(wp.a * ta) * std::pow(t, -(n + 2.0 * kappa - 2.0)) * integral;
}

double WeissEnergy::calibration(const Point& x0, double t) const {
  return quadrature_relative_error(field(), BallSpec{x0, t}, opts_);
}

double weiss_W(const Field& u, const Point& x0, const Point& x1, double t,
               const ProblemParams& params, const WeissParams& wp) {
  return WeissEnergy(u, params).W(x0, x1, t, wp);
}

double weiss_W0(const Field& u, const Point& z, const Point& y, double s,
                const ProblemParams& params) {
  return WeissEnergy(u, params).W0(z, y, s);
}

double weiss_M(const Field& v, const Point& x0, const ProblemParams& params,
               const QuadratureOptions& opts) {
  const Point origin = Point::Zero(v.dim());
  const WeissEnergy energy(v, params, opts);
  return energy.bulk(origin, x0, 1.0) - params.kappa() * energy.sphere_l2(origin, 1.0);
}

double sphere_cap_moment(int n, double k) {
  // Composite 5-point Gauss-Legendre on [0, pi/2].
  static const double xg[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                               0.9061798459386640};
  static const double wg[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                               0.2369268850561891, 0.2369268850561891};
  const int panels = 4000;
  const double width = 0.5 * std::numbers::pi / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * width;
    for (int g = 0; g < 5; ++g) {
      const double phi = mid + 0.5 * width * xg[g];
      sum += wg[g] * std::pow(std::cos(phi), k) * std::pow(std::sin(phi), n - 2);
    }
  }
  sum *= 0.5 * width;
  // |S^0| = 2, |S^1| = 2 pi.
  const double lower_sphere = n == 2 ? 2.0 : 2.0 * std::numbers::pi;
  return lower_sphere * sum;
}

BReduction B_reduction(const Point& x0, const ProblemParams& params) {
  const double kappa = params.kappa();
  const double q = params.q;
  const int n = params.n;
  BReduction r;
  r.beta = halfspace_beta(params, x0);
  const double b2 = r.beta * r.beta;
  const double c_low = sphere_cap_moment(n, 2.0 * kappa - 2.0);
  const double c_high = sphere_cap_moment(n, 2.0 * kappa);
  const double bulk_coef = kappa * kappa + 2.0 * kappa * (kappa - 1.0) / (1.0 + q);
  r.assembled = b2 * (bulk_coef * c_low / (n + 2.0 * kappa - 2.0) - kappa * c_high);
  r.closed = kappa * b2 * c_low / (n + 2.0 * kappa - 2.0);
  return r;
}

double B_value(const Point& x0, const ProblemParams& params) {
  return B_reduction(x0, params).assembled;
}

WeissTrace monotonicity_check(const Field& u, const Point& x0, const Point& x1,
                              const std::vector<double>& radii, const ProblemParams& params,
                              const WeissParams& wp, const QuadratureOptions& opts) {
  if (radii.size() < 2) throw PreconditionError("monotonicity_check needs at least two radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (i > 0 && !(radii[i] > radii[i - 1])) {
      throw PreconditionError("monotonicity_check: radii must be strictly increasing");
    }
    if (radii[i] >= wp.t0) {
      throw PreconditionError("monotonicity_check: radius " + std::to_string(radii[i]) +
                              " is not below t0 = " + std::to_string(wp.t0));
    }
  }
  const WeissEnergy energy(u, params, opts);
  const double kappa = params.kappa();
  const int n = u.dim();
  WeissTrace tr;
  tr.x0 = x0;
  tr.x1 = x1;
  tr.t = radii;
  std::vector<double> magnitude;
  std::vector<double> calib;
  for (double t : radii) {
    const double ta = std::pow(t, params.alpha);
    const double pre = std::exp(wp.a * ta) * std::pow(t, -(n + 2.0 * kappa - 2.0));
    const double bulk = energy.bulk(x0, x1, t);
    const double sph = kappa * (1.0 - wp.b * ta) / t * energy.sphere_l2(x0, t);
    tr.W.push_back(pre * (bulk - sph));
    magnitude.push_back(pre * (std::abs(bulk) + std::abs(sph)));
    tr.R.push_back(energy.R(x0, t, wp));
    calib.push_back(energy.calibration(x0, t));
  }
  tr.pass = true;
  tr.dominates_R = true;
  tr.R_margin = std::numeric_limits<double>::infinity();
  tr.empirical_t0 = radii.front();
  bool monotone_so_far = true;
  for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
    const double dt = radii[i + 1] - radii[i];
    const double quotient = (tr.W[i + 1] - tr.W[i]) / dt;
    const double eps = 5.0 * std::max(calib[i], calib[i + 1]) * (magnitude[i] + magnitude[i + 1]) / dt;
    tr.quotient.push_back(quotient);
    tr.eps_mono.push_back(eps);
    const bool ok = quotient >= -eps;
    tr.pass = tr.pass && ok;
    monotone_so_far = monotone_so_far && ok;
    if (monotone_so_far) tr.empirical_t0 = radii[i + 1];
    const double margin = quotient - 0.5 * (tr.R[i] + tr.R[i + 1]);
    tr.R_margin = std::min(tr.R_margin, margin);
    tr.dominates_R = tr.dominates_R && margin >= -eps;
  }
  return tr;
}

DecayFit weiss_decay_fit(const Field& u, const Point& x0, const std::vector<double>& radii,
                         const ProblemParams& params, const WeissParams& wp,
                         const QuadratureOptions& opts) {
  if (radii.size() < 3) throw PreconditionError("weiss_decay_fit needs at least three radii");
  std::vector<double> t = radii;
  std::sort(t.begin(), t.end());
  const WeissEnergy energy(u, params, opts);
  DecayFit out;
  out.t = t;
  for (double r : t) out.W.push_back(energy.W(x0, x0, r, wp));
  const auto [wmin_it, wmax_it] = std::minmax_element(out.W.begin(), out.W.end());
  const double wmin = *wmin_it;
  const double wmax = *wmax_it;
  const double scale = std::max(std::abs(wmin), std::abs(wmax));
  const double tol = 1e-3 * scale + std::numeric_limits<double>::min();
  if (wmax - wmin <= tol) {
    out.degenerate = true;
    out.W_limit = out.W.front();
    out.note = "already at limit: W constant within tolerance";
    return out;
  }
  // W(t) = W0 + C t^delta through the three smallest radii.
  const double t1 = t[0], t2 = t[1], t3 = t[2];
  const double d1 = out.W[1] - out.W[0];
  const double d2 = out.W[2] - out.W[1];
  double delta = 0.0;
  if (d1 > 0.0 && d2 > 0.0) {
    const double ratio = d1 / d2;
    auto g = [&](double dl) {
      return (std::pow(t2, dl) - std::pow(t1, dl)) / (std::pow(t3, dl) - std::pow(t2, dl));
    };
    double lo = 1e-3;
    double hi = 50.0;
    // g decreases in delta for increasing radii.
    if ((g(lo) - ratio) * (g(hi) - ratio) < 0.0) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((g(lo) - ratio) * (g(mid) - ratio) <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      delta = 0.5 * (lo + hi);
    }
  }
  if (delta > 0.0) {
    const double C = d1 / (std::pow(t2, delta) - std::pow(t1, delta));
    out.W_limit = out.W[0] - C * std::pow(t1, delta);
    if (out.W_limit > wmin) {
      out.W_limit = wmin;
      out.note = "extrapolated limit above min W; clamped to min W";
    }
  } else {
    out.W_limit = wmin;
    out.note = "three-point extrapolation failed; W(0+) taken as min W";
  }
  std::vector<double> x;
  std::vector<double> y;
  out.accepted = true;
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double diff = out.W[i] - out.W_limit;
    if (diff < prev - tol) out.accepted = false;
    prev = std::max(prev, diff);
    if (diff > 0.0) {
      x.push_back(t[i]);
      y.push_back(diff);
    }
  }
  out.fit = fit_power_law(x, y);
  if (!out.fit.ok) out.accepted = false;
  if (!out.accepted && out.note.empty()) out.note = "fit rejected: W - W(0+) not monotone";
  return out;
}

}  // namespace fblab
