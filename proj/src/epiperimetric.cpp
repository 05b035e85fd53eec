#include "fblab/epiperimetric.hpp"

#include "fblab/errors.hpp"
#include "fblab/halfspace.hpp"
#include "fblab/weiss.hpp"

#include <array>
#include <cmath>
#include <random>
#include <sstream>

namespace fblab {

const char* to_string(EpiMode mode) {
  switch (mode) {
    case EpiMode::kHalfspace: return "a";
    case EpiMode::kPerturbed: return "b";
    case EpiMode::kScaled: return "c";
  }
  return "?";
}

EpiMode parse_epi_mode(const std::string& text) {
  if (text == "a" || text == "halfspace") return EpiMode::kHalfspace;
  if (text == "b" || text == "perturbed") return EpiMode::kPerturbed;
  if (text == "c" || text == "scaled") return EpiMode::kScaled;
  throw InputError("unknown epiperimetric mode '" + text + "' (expected a, b or c)");
}

namespace {

constexpr int kPerturbationDegree = 4;

// Exponent tuples of all monomials of degree <= kPerturbationDegree in n variables.
std::vector<std::array<int, kMaxDim>> monomials(int n) {
  std::vector<std::array<int, kMaxDim>> out;
  const int top = kPerturbationDegree;
  for (int a = 0; a <= top; ++a) {
    for (int b = 0; b <= (n > 1 ? top - a : 0); ++b) {
      for (int c = 0; c <= (n > 2 ? top - a - b : 0); ++c) out.push_back({a, b, c});
    }
  }
  return out;
}

struct Polynomial {
  std::vector<std::array<int, kMaxDim>> powers;
  // coefficients(k, j): monomial k, component j.
  Eigen::MatrixXd coefficients;

  Vector operator()(const Point& x) const {
    Vector out = Vector::Zero(coefficients.cols());
    for (std::size_t k = 0; k < powers.size(); ++k) {
      double mono = 1.0;
      for (int d = 0; d < x.size(); ++d) mono *= std::pow(x[d], powers[k][static_cast<std::size_t>(d)]);
      out += mono * coefficients.row(static_cast<Index>(k)).transpose();
    }
    return out;
  }
};

}  // namespace

HomogeneousInput make_homogeneous_input(EpiMode mode, double eps, std::uint64_t seed,
                                        const ProblemParams& params, const Point& x0,
                                        const HomogeneousOptions& opts) {
  validate(params);
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw InputError("eps must be finite and >= 0");
  const int n = params.n;
  const int m = params.m;
  Point nu = opts.nu.size() ? opts.nu : Point(Point::Unit(n, 0));
  if (nu.size() != n || !(nu.norm() > 0.0)) throw InputError("reference normal has wrong dimension");
  Vector e = Vector::Zero(m);
  e[0] = 1.0;
  const ProblemParams frozen = params.frozen_at(x0);
  // Based at the origin of the unit-ball grid; beta taken at x0.
  HalfSpaceSolution hs = make_halfspace(frozen, x0, nu, e);
  hs.x0 = Point::Zero(n);
  const double kappa = params.kappa();

  HomogeneousInput out;
  out.mode = mode;
  out.eps = eps;
  out.seed = seed;
  const Field grid = unit_ball_grid(n, opts.resolution, m);
  out.h = sample_halfspace(grid, hs);

  Polynomial poly;
  double scale = 0.0;
  if (mode == EpiMode::kPerturbed) {
    poly.powers = monomials(n);
    poly.coefficients.resize(static_cast<Index>(poly.powers.size()), m);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index k = 0; k < poly.coefficients.rows(); ++k) {
      for (int j = 0; j < m; ++j) poly.coefficients(k, j) = normal(rng);
    }
    // Match the RMS of the perturbation to the RMS of the trace of h.
    const std::vector<Point> dirs = sphere_directions(n, default_sphere_points(n));
    double trace2 = 0.0;
    double poly2 = 0.0;
    for (const Point& dir : dirs) {
      trace2 += halfspace_eval(hs, dir).squaredNorm();
      poly2 += poly(dir).squaredNorm();
    }
    scale = poly2 > 0.0 ? std::sqrt(trace2 / poly2) : 0.0;
  }

  out.c = sample(grid, m, [&](const Point& x) -> Vector {
    const double rho = x.norm();
    if (rho == 0.0) return Vector::Zero(m);
    const Point dir = x / rho;
    Vector trace = halfspace_eval(hs, dir);
    switch (mode) {
      case EpiMode::kHalfspace: break;
      case EpiMode::kPerturbed: trace += eps * scale * poly(dir); break;
      case EpiMode::kScaled: trace *= 1.0 + eps; break;
    }
    return std::pow(rho, kappa) * trace;
  });

  Field diff = out.c;
  diff.values() -= out.h.values();
  out.dist_w12 = w12_norm(diff, BallSpec{Point::Zero(n), 1.0});

  std::ostringstream os;
  os << "mode " << to_string(mode) << ", eps " << eps;
  if (mode == EpiMode::kPerturbed) os << ", seed " << seed << ", degree " << kPerturbationDegree;
  out.description = os.str();
  return out;
}

Field epi_competitor(const Field& c, const Point& x0, const ProblemParams& params,
                     const SolveConfig& cfg, SolveStats* stats) {
  Region region;
  region.ball = BallSpec{Point::Zero(c.dim()), 1.0};
  return minimize_energy(c, params.frozen_at(x0), cfg, region, stats);
}

EpiReport epi_eta(const Field& c, const Field& h, const Point& x0, const ProblemParams& params,
                  const SolveConfig& cfg, const EpiOptions& opts) {
  EpiReport rep;
  const int n = c.dim();
  const BallSpec unit{Point::Zero(n), 1.0};
  rep.fit = dist_to_H(c, x0, NormKind::kW12, params);
  rep.dist_w12 = rep.fit.distance;
  rep.delta_probe = opts.delta_probe_fraction * halfspace_w12_norm(x0, params);

  const Field vstar = epi_competitor(c, x0, params, cfg, &rep.solver);
  rep.M_c = weiss_M(c, x0, params);
  // The competitor shares the boundary term with c, so its gain is the drop
  // of the discrete energy the solver minimized; this keeps M(v*) <= M(c)
  // exact up to solver tolerance.
  Region region;
  region.ball = unit;
  const EnergyProblem problem(c, params.frozen_at(x0), region);
  rep.energy_drop = problem.energy(c) - problem.energy(vstar);
  rep.M_vstar = rep.M_c - rep.energy_drop;
  rep.M_vstar_quadrature = weiss_M(vstar, x0, params);
  rep.B = B_value(x0, params);
  rep.B_discrete = weiss_M(h, x0, params);
  // The quadrature error of M(h) against its closed form, or the
  // calibration of the unit ball times the size of the terms if larger.
  const double calib = quadrature_relative_error(c, unit);
  const double magnitude = std::max(std::abs(rep.M_c), std::abs(rep.B));
  rep.floor = std::max(std::abs(rep.B_discrete - rep.B), calib * magnitude);

  const double gap = rep.M_c - rep.B;
  if (gap <= rep.floor) {
    rep.verdict = "DEGENERATE";
    rep.note = gap < 0.0 ? "M(c) below the half-space level" : "M(c) at the half-space level";
    return rep;
  }
  rep.eta_defined = true;
  rep.eta_star = (rep.M_c - rep.M_vstar) / gap;
  if (rep.dist_w12 > rep.delta_probe) {
    rep.verdict = "OUTSIDE-DELTA";
  } else {
    rep.verdict = rep.eta_star >= opts.eta_min ? "PASS" : "FAIL";
  }
  return rep;
}

EpiReport epi_run(EpiMode mode, double eps, std::uint64_t seed, const ProblemParams& params,
                  const Point& x0, const SolveConfig& cfg, const EpiOptions& opts,
                  const HomogeneousOptions& hopts) {
  const HomogeneousInput input = make_homogeneous_input(mode, eps, seed, params, x0, hopts);
  EpiReport rep = epi_eta(input.c, input.h, x0, params, cfg, opts);
  rep.description = input.description;
  return rep;
}

}  // namespace fblab
