#include "fblab/freeboundary.hpp"

#include "fblab/errors.hpp"
#include "fblab/parallel.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace fblab {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

constexpr int kExtrapolationOffset = 3;

bool lex_less(const Point& a, const Point& b) {
  for (int d = 0; d < a.size(); ++d) {
    if (a[d] != b[d]) return a[d] < b[d];
  }
  return false;
}

// Orthonormal basis of the plane orthogonal to nu.
std::vector<Point> tangent_basis(const Point& nu) {
  const int n = static_cast<int>(nu.size());
  std::vector<Point> out;
  if (n == 2) {
    Point t(2);
    t << -nu[1], nu[0];
    out.push_back(t);
    return out;
  }
  Point t1 = Point::Unit(3, std::abs(nu[0]) < 0.9 ? 0 : 1);
  t1 = (t1 - t1.dot(nu) * nu).normalized();
  const Eigen::Vector3d c = Eigen::Vector3d(nu).cross(Eigen::Vector3d(t1));
  out.push_back(t1);
  out.push_back(Point(c));
  return out;
}

double sup_on_ball(const Field& u, const BallSpec& ball, int sphere_points) {
  double best = 0.0;
  const double r2 = ball.radius * ball.radius * (1.0 + 1e-12);
  for (Index i = 0; i < u.num_nodes(); ++i) {
    if ((u.position(i) - ball.center).squaredNorm() > r2) continue;
    best = std::max(best, u.values().row(i).norm());
  }
  for (const Point& dir : sphere_directions(u.dim(), sphere_points)) {
    best = std::max(best, interpolate(u, Point(ball.center + ball.radius * dir)).norm());
  }
  return best;
}

bool inside_box(const Field& u, const Point& x) {
  const Point lo = u.lower();
  const Point hi = u.upper();
  for (int d = 0; d < u.dim(); ++d) {
    if (x[d] < lo[d] || x[d] > hi[d]) return false;
  }
  return true;
}

// Multilinear interpolation of a scalar field.
double multilinear(const Field& f, const Point& x) {
  const int n = f.dim();
  int cell[kMaxDim] = {0, 0, 0};
  double frac[kMaxDim] = {0.0, 0.0, 0.0};
  for (int d = 0; d < n; ++d) {
    const double s = (x[d] - f.origin()[d]) / f.spacing();
    cell[d] = std::clamp(static_cast<int>(std::floor(s)), 0, f.dims()[d] - 2);
    frac[d] = std::clamp(s - cell[d], 0.0, 1.0);
  }
  double total = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    Index idx = 0;
    for (int d = 0; d < n; ++d) {
      const int bit = (corner >> d) & 1;
      w *= bit ? frac[d] : 1.0 - frac[d];
      idx += static_cast<Index>(cell[d] + bit) * f.stride(d);
    }
    if (w != 0.0) total += w * f.values()(idx, 0);
  }
  return total;
}

}  // namespace

FreeBoundarySet extract_gamma(const Field& u, double tau_rel, const ProblemParams& params) {
  if (!all_finite(u)) throw InputError("extract_gamma: field has non-finite values");
  if (!(tau_rel >= 0.0)) throw InputError("extract_gamma: tau_rel must be nonnegative");
  FreeBoundarySet out;
  const int n = u.dim();
  const double inv_kappa = 1.0 / params.kappa();
  Eigen::VectorXd mag = u.values().rowwise().norm();
  out.tau = tau_rel * (mag.size() ? mag.maxCoeff() : 0.0);
  const double tau = out.tau;

  struct Raw {
    Point x;
    Index inner;
    Index outer;
    int axis;
  };
  std::vector<Raw> raw;
  for (Index i = 0; i < u.num_nodes(); ++i) {
    const NodeIndex k = u.node(i);
    for (int d = 0; d < n; ++d) {
      if (k[d] + 1 >= u.dims()[d]) continue;
      const Index j = i + u.stride(d);
      const bool pi = mag[i] > tau;
      const bool pj = mag[j] > tau;
      if (pi == pj) continue;
      const Index a = pi ? i : j;  // positive side
      const Index b = pi ? j : i;
      // |u|^{1/kappa} extrapolated linearly from two nodes behind a (away
      // from b), skipping the cells next to the interface where the
      // discrete profile rounds off. s is the fraction of the way to b.
      const Index step = a - b;
      const int ka = u.node(a)[d];
      double s = -1.0;
      for (int back = kExtrapolationOffset; back >= 0 && s < 0.0; --back) {
        const int far = ka + (step > 0 ? 1 : -1) * (back + 1);
        if (far < 0 || far >= u.dims()[d]) continue;
        const double g1 = std::pow(mag[a + back * step], inv_kappa);
        const double g2 = std::pow(mag[a + (back + 1) * step], inv_kappa);
        if (g2 > g1) s = std::clamp(g1 / (g2 - g1) - back, 0.0, 1.0);
      }
      if (s < 0.0) s = std::clamp((mag[a] - tau) / (mag[a] - mag[b]), 0.0, 1.0);
      const Point xa = u.position(a);
      const Point xb = u.position(b);
      raw.push_back({Point(xa + s * (xb - xa)), a, b, d});
    }
  }
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t p, std::size_t q) { return lex_less(raw[p].x, raw[q].x); });

  const int count = static_cast<int>(raw.size());
  UnionFind uf(count);
  // Cells containing each edge: lower corner = min node, shifted by -1 along
  // every other axis where possible.
  std::map<Index, int> cell_owner;
  for (int p = 0; p < count; ++p) {
    const Raw& r = raw[order[static_cast<std::size_t>(p)]];
    const Index base = std::min(r.inner, r.outer);
    const NodeIndex kb = u.node(base);
    std::vector<Index> cells{base};
    for (int d = 0; d < n; ++d) {
      if (d == r.axis) continue;
      std::vector<Index> next;
      for (Index c : cells) {
        if (kb[d] + 1 < u.dims()[d]) next.push_back(c);
        if (kb[d] > 0) next.push_back(c - u.stride(d));
      }
      cells = next;
    }
    for (Index c : cells) {
      auto [it, inserted] = cell_owner.emplace(c, p);
      if (!inserted) uf.unite(p, it->second);
    }
  }
  std::map<int, int> relabel;
  for (int p = 0; p < count; ++p) {
    const Raw& r = raw[order[static_cast<std::size_t>(p)]];
    out.points.push_back(r.x);
    out.inner.push_back(r.inner);
    out.outer.push_back(r.outer);
    const int root = uf.find(p);
    auto [it, inserted] = relabel.emplace(root, static_cast<int>(relabel.size()));
    out.labels.push_back(it->second);
  }
  out.components = static_cast<int>(relabel.size());
  if (out.points.empty()) out.note = "no crossing of |u| = tau";
  return out;
}

std::vector<double> auto_radii(const Field& u, const Point& x0, int count, double cap) {
  const Point lo = u.lower();
  const Point hi = u.upper();
  double room = std::numeric_limits<double>::infinity();
  for (int d = 0; d < u.dim(); ++d) room = std::min({room, x0[d] - lo[d], hi[d] - x0[d]});
  const double r_max = std::min(cap, 0.99 * room);
  const double r_min = std::max(4.5 * u.spacing(), r_max / 8.0);
  if (!(r_max > r_min) || count < 2) {
    throw PreconditionError("no admissible radii at this point (too close to the box boundary)");
  }
  std::vector<double> radii;
  for (int k = 0; k < count; ++k) {
    radii.push_back(r_min * std::pow(r_max / r_min, static_cast<double>(k) / (count - 1)));
  }
  return radii;
}

GrowthFit growth_fit(const Field& u, const Point& x0, const std::vector<double>& radii,
                     const ProblemParams& params, const QuadratureOptions& opts) {
  if (radii.size() < 2) throw PreconditionError("growth_fit needs at least two radii");
  std::vector<double> r = radii;
  std::sort(r.begin(), r.end());
  const int sphere_points = opts.sphere_points > 0 ? opts.sphere_points : default_sphere_points(u.dim());
  GrowthFit out;
  for (double t : r) {
    const BallSpec ball{x0, t};
    check_ball(u, ball, opts);
    out.sup_values.push_back(sup_on_ball(u, ball, sphere_points));
    out.energy_values.push_back(energy_E(u, ball, params, opts));
  }
  out.sup = fit_power_law(r, out.sup_values);
  out.energy = fit_power_law(r, out.energy_values);
  out.not_fb_point = interpolate(u, x0).norm() >= 0.5 * out.sup_values.front();
  return out;
}

NondegeneracyResult nondegeneracy_check(const Field& u, const Point& x0,
                                        const std::vector<double>& radii,
                                        const ProblemParams& params, const FreeBoundarySet* gamma,
                                        const QuadratureOptions& opts) {
  if (gamma) {
    double best = std::numeric_limits<double>::infinity();
    for (const Point& p : gamma->points) best = std::min(best, (p - x0).norm());
    if (best > u.spacing() * std::sqrt(static_cast<double>(u.dim())) * (1.0 + 1e-9)) {
      throw PreconditionError("nondegeneracy_check: x0 is not within one cell of the extracted free boundary");
    }
  }
  const GrowthFit growth = growth_fit(u, x0, radii, params, opts);
  std::vector<double> r = radii;
  std::sort(r.begin(), r.end());
  const double kappa = params.kappa();
  const double p = u.dim() + 2.0 * kappa - 2.0;
  NondegeneracyResult out;
  out.fit = growth.sup;
  out.c0_hat = std::numeric_limits<double>::infinity();
  out.eps0_hat = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const BallSpec ball{x0, r[i]};
    const double c = growth.sup_values[i] / std::pow(r[i], kappa);
    const double e = growth.energy_values[i] / std::pow(r[i], p);
    out.c0_hat = std::min(out.c0_hat, c);
    out.eps0_hat = std::min(out.eps0_hat, e);
    const double calib = quadrature_relative_error(u, ball, opts);
    out.eps0_floor = std::max(out.eps0_floor, calib * std::abs(e));
    out.c0_floor = std::max(out.c0_floor, interpolation_error_estimate(u, ball) / std::pow(r[i], kappa));
  }
  out.pass = out.c0_hat > out.c0_floor && out.eps0_hat > out.eps0_floor && out.c0_hat > 0.0 &&
             out.eps0_hat > 0.0;
  return out;
}

Classification classify_regular(const Field& u, const Point& x0, const std::vector<double>& radii,
                                const ProblemParams& params, const ClassifyOptions& opts) {
  std::vector<double> down = radii;
  std::sort(down.begin(), down.end(), std::greater<>());
  down.erase(std::unique(down.begin(), down.end()), down.end());
  Classification out;
  const BlowupResult blow = blowup_limit(u, x0, down, params, opts.blowup);
  const GrowthFit growth = growth_fit(u, x0, down, params);
  out.fit = blow.fit;
  out.cauchy = blow.cauchy;
  out.sup_slope = growth.sup.exponent;
  out.energy_slope = growth.energy.exponent;
  const double kappa = params.kappa();
  out.c0_hat = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < down.size(); ++i) {
    out.c0_hat = std::min(out.c0_hat, growth.sup_values[down.size() - 1 - i] / std::pow(down[i], kappa));
  }
  if (blow.verdict == PointClass::kNotFreeBoundary || growth.not_fb_point) {
    out.verdict = PointClass::kNotFreeBoundary;
    out.note = blow.note.empty() ? "u(x0) does not vanish" : blow.note;
  } else if (blow.verdict == PointClass::kRegular &&
             std::abs(out.sup_slope - kappa) <= opts.slope_band) {
    out.verdict = PointClass::kRegular;
  } else {
    out.verdict = PointClass::kNotRegular;
    out.note = blow.verdict == PointClass::kRegular ? "growth exponent outside the kappa band" : blow.note;
  }
  return out;
}

NormalFit normal_field_fit(const Field& u, const std::vector<Point>& fb_points,
                           const std::vector<double>& radii, const ProblemParams& params,
                           const NormalFitOptions& opts) {
  if (fb_points.size() < 8) {
    throw PreconditionError("normal_field_fit needs at least 8 points, got " +
                            std::to_string(fb_points.size()));
  }
  std::vector<Classification> classes(fb_points.size());
  parallel_for(fb_points.size(), [&](std::size_t i) {
    try {
      classes[i] = classify_regular(u, fb_points[i], radii, params, opts.classify);
    } catch (const PreconditionError& e) {
      classes[i].verdict = PointClass::kNotRegular;
      classes[i].note = e.what();
    }
  });
  return fit_normals(u, fb_points, std::move(classes), opts);
}

NormalFit fit_normals(const Field& u, std::vector<Point> points,
                      std::vector<Classification> classes, const NormalFitOptions& opts) {
  if (points.size() != classes.size()) throw InputError("fit_normals: points and classes differ in size");
  NormalFit out;
  out.points = std::move(points);
  out.classes = std::move(classes);
  const std::vector<Point>& fb_points = out.points;
  std::vector<std::size_t> regular;
  for (std::size_t i = 0; i < fb_points.size(); ++i) {
    if (out.classes[i].verdict == PointClass::kRegular) regular.push_back(i);
  }
  out.regular_points = static_cast<int>(regular.size());
  if (regular.size() < 8) {
    throw PreconditionError("normal_field_fit: only " + std::to_string(regular.size()) +
                            " regular points (need 8)");
  }
  double diameter = 0.0;
  for (std::size_t a : regular) {
    for (std::size_t b : regular) diameter = std::max(diameter, (fb_points[a] - fb_points[b]).norm());
  }
  out.band_min = opts.band_min > 0.0 ? opts.band_min : 4.0 * u.spacing();
  out.band_max = opts.band_max > 0.0 ? opts.band_max : 0.5 * diameter;
  double largest = 0.0;
  for (std::size_t ia = 0; ia < regular.size(); ++ia) {
    for (std::size_t ib = ia + 1; ib < regular.size(); ++ib) {
      const std::size_t a = regular[ia];
      const std::size_t b = regular[ib];
      const double dist = (fb_points[a] - fb_points[b]).norm();
      if (dist < out.band_min || dist > out.band_max) continue;
      const double diff = (out.classes[a].fit.nu - out.classes[b].fit.nu).norm();
      out.pair_distance.push_back(dist);
      out.pair_difference.push_back(diff);
      largest = std::max(largest, diff);
    }
  }
  if (out.pair_distance.empty()) {
    out.note = "no point pairs in the band";
    return out;
  }
  if (largest <= opts.constant_tol) {
    out.constant_normal = true;
    out.note = "constant normal";
    return out;
  }
  out.fit = fit_power_law(out.pair_distance, out.pair_difference);
  return out;
}

GraphFit graph_fit(const Field& u, const Point& x0, double window, const ProblemParams& params,
                   const GraphOptions& opts) {
  if (!(window > 0.0)) throw InputError("graph_fit: window must be positive");
  const int n = u.dim();
  const std::vector<double> radii = opts.radii.empty() ? auto_radii(u, x0) : opts.radii;
  const Classification cls = classify_regular(u, x0, radii, params, opts.classify);
  if (cls.verdict != PointClass::kRegular) {
    throw PreconditionError(std::string("graph_fit: x0 is not a regular point (") +
                            to_string(cls.verdict) + ")");
  }
  GraphFit out;
  out.x0 = x0;
  out.nu = cls.fit.nu;
  const std::vector<Point> tangent = tangent_basis(out.nu);
  const double half = 0.5 * window;
  // The rotated cube must lie in the grid box.
  {
    const Point lo = u.lower();
    const Point hi = u.upper();
    for (int corner = 0; corner < (1 << n); ++corner) {
      Point x = x0 + ((corner & 1) ? half : -half) * out.nu;
      for (int t = 0; t < n - 1; ++t) x += ((corner >> (t + 1)) & 1 ? half : -half) * tangent[t];
      for (int d = 0; d < n; ++d) {
        if (x[d] < lo[d] - 1e-12 || x[d] > hi[d] + 1e-12) {
          throw PreconditionError("graph_fit: window leaves the grid");
        }
      }
    }
  }
  const double mx = max_norm(u);
  const double inv_kappa = 1.0 / params.kappa();
  // |u|^{1/kappa} is close to linear across a regular interface; its
  // multilinear interpolant has no overshoot into the zero phase.
  const Field root = node_map(u, [&](Index i) { return std::pow(u.values().row(i).norm(), inv_kappa); });
  const double g_tau = std::pow(opts.tau_rel * mx, inv_kappa);
  const double h = u.spacing();
  const double dc = opts.column_spacing * u.spacing();
  const int per_axis = std::max(2, static_cast<int>(std::floor(window / dc)) + 1);
  const int steps = static_cast<int>(std::ceil(window / (0.25 * h)));
  std::vector<std::vector<int>> index(n == 2 ? 1 : static_cast<std::size_t>(per_axis),
                                      std::vector<int>(static_cast<std::size_t>(per_axis), -1));
  const int outer_count = n == 2 ? 1 : per_axis;
  for (int jb = 0; jb < outer_count; ++jb) {
    for (int ja = 0; ja < per_axis; ++ja) {
      Point xt(n - 1);
      xt[0] = -half + ja * window / (per_axis - 1);
      if (n == 3) xt[1] = -half + jb * window / (per_axis - 1);
      Point base = x0;
      for (int t = 0; t < n - 1; ++t) base += xt[t] * tangent[t];
      // First sample along +nu where the root profile leaves zero, then a
      // linear extrapolation of it back to zero from two samples further in.
      double found = std::numeric_limits<double>::quiet_NaN();
      double prev_s = -half;
      double prev_g = multilinear(root, Point(base - half * out.nu));
      for (int k = 1; k <= steps; ++k) {
        const double s = -half + k * window / steps;
        const double gs = multilinear(root, Point(base + s * out.nu));
        if (prev_g <= g_tau && gs > g_tau) {
          found = prev_s + (s - prev_s) * (g_tau - prev_g) / (gs - prev_g);
          const Point p1 = base + (s + 2.0 * h) * out.nu;
          const Point p2 = base + (s + 3.0 * h) * out.nu;
          if (inside_box(u, p1) && inside_box(u, p2)) {
            const double g1 = multilinear(root, p1);
            const double g2 = multilinear(root, p2);
            if (g2 > g1 && g1 > g_tau) {
              found = std::clamp(s + 2.0 * h - g1 * h / (g2 - g1), s - 2.0 * h, s + 2.0 * h);
            }
          }
          break;
        }
        prev_s = s;
        prev_g = gs;
      }
      if (!std::isfinite(found)) {
        throw PreconditionError("graph_fit: interface exits window at tangential offset " +
                                std::to_string(xt[0]));
      }
      index[static_cast<std::size_t>(jb)][static_cast<std::size_t>(ja)] =
          static_cast<int>(out.g.size());
      out.x_tangent.push_back(xt);
      out.g.push_back(found);
    }
  }
  // Discrete Lipschitz constant over neighbouring columns.
  const double step = window / (per_axis - 1);
  std::vector<Point> grad(out.g.size(), Point::Zero(n - 1));
  for (int jb = 0; jb < outer_count; ++jb) {
    for (int ja = 0; ja < per_axis; ++ja) {
      const int here = index[static_cast<std::size_t>(jb)][static_cast<std::size_t>(ja)];
      if (ja + 1 < per_axis) {
        const int right = index[static_cast<std::size_t>(jb)][static_cast<std::size_t>(ja + 1)];
        out.lipschitz = std::max(out.lipschitz, std::abs(out.g[right] - out.g[here]) / step);
      }
      if (n == 3 && jb + 1 < outer_count) {
        const int up = index[static_cast<std::size_t>(jb + 1)][static_cast<std::size_t>(ja)];
        out.lipschitz = std::max(out.lipschitz, std::abs(out.g[up] - out.g[here]) / step);
      }
      const int a0 = std::max(ja - 1, 0);
      const int a1 = std::min(ja + 1, per_axis - 1);
      grad[here][0] = (out.g[index[static_cast<std::size_t>(jb)][static_cast<std::size_t>(a1)]] -
                       out.g[index[static_cast<std::size_t>(jb)][static_cast<std::size_t>(a0)]]) /
                      ((a1 - a0) * step);
      if (n == 3) {
        const int b0 = std::max(jb - 1, 0);
        const int b1 = std::min(jb + 1, outer_count - 1);
        grad[here][1] = (out.g[index[static_cast<std::size_t>(b1)][static_cast<std::size_t>(ja)]] -
                         out.g[index[static_cast<std::size_t>(b0)][static_cast<std::size_t>(ja)]]) /
                        ((b1 - b0) * step);
      }
    }
  }
  // Hoelder exponent of the discrete gradient over pairs in [4h, window/2].
  std::vector<double> dist;
  std::vector<double> diff;
  double largest = 0.0;
  for (std::size_t a = 0; a < out.g.size(); ++a) {
    for (std::size_t b = a + 1; b < out.g.size(); ++b) {
      const double d = (out.x_tangent[a] - out.x_tangent[b]).norm();
      if (d < 4.0 * u.spacing() || d > half) continue;
      const double gd = (grad[a] - grad[b]).norm();
      largest = std::max(largest, gd);
      dist.push_back(d);
      diff.push_back(gd);
    }
  }
  if (largest <= opts.constant_tol) {
    out.constant_gradient = true;
    out.note = "constant gradient";
  } else {
    out.gradient_holder = fit_power_law(dist, diff);
  }
  return out;
}

}  // namespace fblab
