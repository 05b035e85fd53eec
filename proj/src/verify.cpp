#include "fblab/commands.hpp"

#include "fblab/blowup.hpp"
#include "fblab/epiperimetric.hpp"
#include "fblab/errors.hpp"
#include "fblab/field_io.hpp"
#include "fblab/freeboundary.hpp"
#include "fblab/halfspace.hpp"
#include "fblab/nonlinearity.hpp"
#include "fblab/parallel.hpp"
#include "fblab/quadrature.hpp"
#include "fblab/solver.hpp"
#include "fblab/weiss.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

namespace fblab {

namespace {

InvariantCheck at_most(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), value <= tol, value, tol, std::move(detail)};
}

InvariantCheck at_least(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), value >= tol, value, tol, std::move(detail)};
}

// Runs a check, turning library errors into a failed check.
InvariantCheck guarded(const std::string& name, const std::function<InvariantCheck()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    return {name, false, std::nan(""), std::nan(""), std::string("error: ") + e.what()};
  }
}

Point unit(double angle) {
  Point p(2);
  p << std::cos(angle), std::sin(angle);
  return p;
}

Point origin2() { return Point::Zero(2); }

Vector ones(int m) { return Vector::Ones(m); }

double rel_sup_diff(const Field& a, const Field& b, double radius) {
  double diff = 0.0;
  double mag = 0.0;
  for (Index i = 0; i < a.num_nodes(); ++i) {
    if (a.position(i).norm() > radius) continue;
    diff = std::max(diff, (a.value(i) - b.value(i)).norm());
    mag = std::max(mag, a.value(i).norm());
  }
  return mag > 0.0 ? diff / mag : diff;
}

double halfspace_residual(const ProblemParams& params, int res) {
  const Field grid = box_grid(2, -1.0, 1.0, res, 1);
  const Field u = sample_halfspace(grid, make_halfspace(params, origin2(), unit(0.0), ones(1)));
  return EnergyProblem(u, params).residual(u);
}

std::vector<InvariantCheck> core_checks(const ProblemParams& params) {
  std::vector<InvariantCheck> out;
  out.push_back(guarded("core.potential_oracle", [&] {
    Vector v(2);
    v << 4.0, 0.0;
    const double F = eval_F(origin2(), v, params);
    const Vector f = eval_f(origin2(), v, params);
    const double err = std::abs(F - 16.0 / 3.0) + std::abs(f[0] - 2.0) + std::abs(f[1]);
    return at_most("core.potential_oracle", err, 1e-12, "F(4,0) = 16/3, f(4,0) = (2,0)");
  }));
  out.push_back(guarded("core.halfspace_residual_refinement", [&] {
    const double r33 = halfspace_residual(params, 33);
    const double r65 = halfspace_residual(params, 65);
    const double r129 = halfspace_residual(params, 129);
    std::ostringstream os;
    os << "residuals " << r33 << " " << r65 << " " << r129;
    return at_least("core.halfspace_residual_refinement", std::min(r33 / r65, r65 / r129), 3.0, os.str());
  }));
  out.push_back(guarded("core.field_io_roundtrip", [&] {
    Field u = box_grid(2, -1.0, 1.0, 17, 2);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (Index i = 0; i < u.num_nodes(); ++i) u.values().row(i) << g(rng), g(rng) * 1e-300;
    std::stringstream ss;
    write_field(ss, u);
    const Field back = read_field(ss);
    const double diff = back.same_geometry(u) ? (back.values() - u.values()).cwiseAbs().maxCoeff() : 1.0;
    return at_most("core.field_io_roundtrip", diff, 0.0, "exact round trip");
  }));
  out.push_back(guarded("core.field_io_rejects_corrupt", [&] {
    const Field u = box_grid(2, -1.0, 1.0, 9, 1);
    std::stringstream ss;
    write_field(ss, u);
    std::string text = ss.str();
    text.resize(text.size() / 2);
    std::stringstream bad(text);
    bool rejected = false;
    try {
      read_field(bad);
    } catch (const InputError&) {
      rejected = true;
    }
    return InvariantCheck{"core.field_io_rejects_corrupt", rejected, rejected ? 1.0 : 0.0, 1.0,
                          "truncated file raises an input error"};
  }));
  out.push_back(guarded("core.quadrature_calibration", [&] {
    const Field grid = box_grid(2, -1.0, 1.0, 65, 1);
    return at_most("core.quadrature_calibration",
                   quadrature_relative_error(grid, BallSpec{unit(0.3) * 0.2, 0.45}), 1e-3,
                   "volume and area of an off-center ball");
  }));
  out.push_back(guarded("core.sphere_moment", [&] {
    const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
    const HalfSpaceSolution hs = make_halfspace(params, origin2(), unit(0.4), ones(1));
    const Field u = sample_halfspace(grid, hs);
    const Field sq = node_map(u, [&](Index i) { return u.value(i).squaredNorm(); });
    const double got = sphere_integral(sq, BallSpec{origin2(), 0.5});
    const double k = params.kappa();
    const double want = hs.beta * hs.beta * std::pow(0.5, 2 * k + 1) * sphere_cap_moment(2, 2 * k);
    return at_most("core.sphere_moment", std::abs(got - want) / want, 1e-4,
                   "int_{dB} |h|^2 against the cap moment");
  }));
  return out;
}

std::vector<InvariantCheck> solver_checks(const ProblemParams& params, const SolveConfig& cfg) {
  std::vector<InvariantCheck> out;
  out.push_back(guarded("solver.gradient_fd", [&] {
    Field u = box_grid(2, -1.0, 1.0, 17, 2);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (Index i = 0; i < u.num_nodes(); ++i) u.values().row(i) << g(rng), g(rng);
    const EnergyProblem prob(u, params);
    const Field grad = prob.gradient(u);
    double worst = 0.0;
    std::uniform_int_distribution<std::size_t> pick(0, prob.free_nodes().size() - 1);
    for (int k = 0; k < 20; ++k) {
      const Index node = prob.free_nodes()[pick(rng)];
      const int comp = k % 2;
      const double step = 1e-6;
      Field up = u;
      Field dn = u;
      up.values()(node, comp) += step;
      dn.values()(node, comp) -= step;
      const double fd = (prob.energy(up) - prob.energy(dn)) / (2 * step);
      const double an = grad.values()(node, comp);
      worst = std::max(worst, std::abs(fd - an) / std::max(1e-8, std::abs(an)));
    }
    return at_most("solver.gradient_fd", worst, 1e-6, "20 random nodes, central differences");
  }));
  const Field grid = box_grid(2, -1.0, 1.0, 65, 1);
  Field boundary = grid.like(1);
  for (Index i = 0; i < boundary.num_nodes(); ++i) {
    const Point x = boundary.position(i);
    boundary.values()(i, 0) = 1e-3 * (1.0 + 0.5 * std::sin(3.0 * x[0] + 1.0) * std::cos(2.0 * x[1]));
  }
  out.push_back(guarded("solver.uniqueness", [&] {
    SolveConfig a = cfg;
    a.random_init = true;
    a.seed = 11;
    SolveConfig b = a;
    b.seed = 12;
    const Field ua = minimize_energy(boundary, params, a);
    const Field ub = minimize_energy(boundary, params, b);
    const double diff = (ua.values() - ub.values()).cwiseAbs().maxCoeff() / max_norm(ua);
    return at_most("solver.uniqueness", diff, 1e-6, "two random starts");
  }));
  out.push_back(guarded("solver.energy_monotone", [&] {
    SolveStats stats;
    SolveConfig c = cfg;
    minimize_energy(boundary, params, c, {}, &stats);
    double worst = 0.0;
    const auto& hist = stats.energy_history;
    for (std::size_t k = 1; k < hist.size(); ++k) {
      worst = std::max(worst, (hist[k] - hist[k - 1]) / std::max(1e-300, std::abs(hist[k - 1])));
    }
    return at_most("solver.energy_monotone", worst, 1e-10, "relative increase between accepted iterates");
  }));
  return out;
}

std::vector<InvariantCheck> weiss_checks(const ProblemParams& params, const SolveConfig& cfg) {
  std::vector<InvariantCheck> out;
  out.push_back(guarded("weiss.halfspace_W0_constant", [&] {
    const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
    const Field u = sample_halfspace(grid, make_halfspace(params, origin2(), unit(0.7), ones(1)));
    const WeissEnergy energy(u, params);
    const double B = B_value(origin2(), params);
    double worst = 0.0;
    for (double t : {0.15, 0.3, 0.45}) worst = std::max(worst, std::abs(energy.W0(origin2(), origin2(), t) - B) / B);
    return at_most("weiss.halfspace_W0_constant", worst, 1e-3, "W0 at t = 0.15, 0.3, 0.45 against B");
  }));
  out.push_back(guarded("weiss.B_reduction", [&] {
    const BReduction red = B_reduction(origin2(), params);
    return at_most("weiss.B_reduction", std::abs(red.assembled - red.closed) / red.closed, 1e-10,
                   "assembled and closed forms of B");
  }));
  out.push_back(guarded("weiss.monotone_minimizer", [&] {
    const Field grid = box_grid(2, -1.0, 1.0, 65, 1);
    const Field bd = sample_halfspace(grid, make_halfspace(params, Point::Constant(2, -0.1), unit(0.3), ones(1)));
    const Field u = minimize_energy(bd, params, cfg);
    const WeissTrace tr = monotonicity_check(u, origin2(), origin2(), {0.15, 0.2, 0.25, 0.3, 0.35, 0.4},
                                             params, WeissParams::from(params));
    double worst = 0.0;
    for (std::size_t k = 0; k < tr.quotient.size(); ++k) worst = std::min(worst, tr.quotient[k] + tr.eps_mono[k]);
    return InvariantCheck{"weiss.monotone_minimizer", tr.pass, worst, 0.0,
                          "min over intervals of quotient + eps_mono"};
  }));
  return out;
}

std::vector<InvariantCheck> blowup_checks(const ProblemParams& params) {
  std::vector<InvariantCheck> out;
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  const double angle = 0.5;
  const Field u = sample_halfspace(grid, make_halfspace(params, origin2(), unit(angle), ones(1)));
  out.push_back(guarded("blowup.planted_normal", [&] {
    const BlowupResult res = blowup_limit(u, origin2(), {0.4, 0.2, 0.1}, params);
    const double err = std::acos(std::clamp(res.fit.nu.dot(unit(angle)), -1.0, 1.0)) * 180.0 / std::numbers::pi;
    return at_most("blowup.planted_normal", err, 2.0, std::string("degrees; verdict ") + to_string(res.verdict));
  }));
  out.push_back(guarded("blowup.homogeneity", [&] {
    const Field h = sample_halfspace(unit_ball_grid(2, 65, 1), make_halfspace(params, origin2(), unit(angle), ones(1)));
    const RescaleResult r = rescale(u, origin2(), 0.3, params);
    return at_most("blowup.homogeneity", rel_sup_diff(h, r.field, 1.0), 1e-6,
                   "rescaling of a half-space solution is itself");
  }));
  out.push_back(guarded("blowup.semigroup", [&] {
    Field v = box_grid(2, -1.0, 1.0, 129, 1);
    for (Index i = 0; i < v.num_nodes(); ++i) {
      const Point x = v.position(i);
      v.values()(i, 0) = std::sin(2.0 * x[0]) * std::cos(x[1]) + 0.3 * x[0] * x[1];
    }
    const Point x0 = unit(1.0) * 0.1;
    // Off-aligned intermediate grid so the second rescaling interpolates.
    const RescaleResult a = rescale(v, x0, 0.4, params, 97);
    const RescaleResult b = rescale(a.field, origin2(), 0.5, params, 65);
    const RescaleResult c = rescale(v, x0, 0.2, params, 65);
    return at_most("blowup.semigroup", rel_sup_diff(c.field, b.field, 1.0), 1e-5,
                   "(u_{x0,r})_{0,s} = u_{x0,rs}");
  }));
  return out;
}

std::vector<InvariantCheck> fb_checks(const ProblemParams& params) {
  std::vector<InvariantCheck> out;
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  const double h = grid.spacing();
  const double angle = 0.3;
  const HalfSpaceSolution hs = make_halfspace(params, Point::Constant(2, 0.05), unit(angle), ones(1));
  const Field u = sample_halfspace(grid, hs);
  out.push_back(guarded("fb.extraction_distance", [&] {
    const FreeBoundarySet g = extract_gamma(u, kDefaultTauRel, params);
    double worst = g.points.empty() ? 1e9 : 0.0;
    for (const Point& p : g.points) worst = std::max(worst, std::abs((p - hs.x0).dot(hs.nu)));
    return at_most("fb.extraction_distance", worst / h, 1.5, "cells from the planted interface");
  }));
  out.push_back(guarded("fb.growth_slope", [&] {
    const GrowthFit g = growth_fit(u, hs.x0, {0.0625, 0.125, 0.25}, params);
    return at_most("fb.growth_slope", std::abs(g.sup.exponent - params.kappa()), 0.25, "|slope - kappa|");
  }));
  out.push_back(guarded("fb.nondegeneracy_constant", [&] {
    const NondegeneracyResult nd = nondegeneracy_check(u, hs.x0, {0.0625, 0.125, 0.25}, params);
    const double ratio = nd.c0_hat / hs.beta;
    return InvariantCheck{"fb.nondegeneracy_constant", ratio >= 0.8 && ratio <= 1.0 + 1e-6, ratio, 0.8,
                          "c0 / beta in [0.8, 1]"};
  }));
  out.push_back(guarded("fb.rotation_equivariance", [&] {
    Field rot = grid.like(1);
    for (Index i = 0; i < rot.num_nodes(); ++i) {
      const auto k = grid.node(i);
      auto src = k;
      src[0] = k[1];
      src[1] = grid.dims()[0] - 1 - k[0];
      rot.values()(i, 0) = u.values()(grid.index(src), 0);
    }
    const Classification a = classify_regular(u, hs.x0, {0.25, 0.125, 0.0625}, params);
    Point x0r(2);
    x0r << -hs.x0[1], hs.x0[0];
    const Classification b = classify_regular(rot, x0r, {0.25, 0.125, 0.0625}, params);
    Point nur(2);
    nur << -a.fit.nu[1], a.fit.nu[0];
    const double diff = (nur - b.fit.nu).norm() + std::abs(a.sup_slope - b.sup_slope);
    return at_most("fb.rotation_equivariance", diff, 1e-6, "90 degree grid rotation");
  }));
  return out;
}

std::vector<InvariantCheck> epi_checks(const ProblemParams& params, const SolveConfig& cfg) {
  std::vector<InvariantCheck> out;
  const Point x0 = origin2();
  out.push_back(guarded("epi.halfspace_degenerate", [&] {
    const EpiReport r = epi_run(EpiMode::kHalfspace, 0.0, 1, params, x0, cfg);
    return InvariantCheck{"epi.halfspace_degenerate", r.verdict == "DEGENERATE", r.M_c - r.B, r.floor,
                          "verdict " + r.verdict};
  }));
  out.push_back(guarded("epi.competitor_not_worse", [&] {
    const EpiReport r = epi_run(EpiMode::kPerturbed, 0.05, 1, params, x0, cfg);
    return at_most("epi.competitor_not_worse", r.M_vstar - r.M_c, 0.0, "M(v*) - M(c), verdict " + r.verdict);
  }));
  out.push_back(guarded("epi.zero_data", [&] {
    const Field c = unit_ball_grid(2, 33, 1);
    const Field v = epi_competitor(c, x0, params, cfg);
    return at_most("epi.zero_data", max_norm(v), 0.0, "c = 0 gives v* = 0");
  }));
  return out;
}

}  // namespace

std::vector<InvariantCheck> run_invariant_suite(const ExperimentConfig& cfg) {
  // Fixed desk-scale problems with the configured exponent and coefficients.
  ExperimentConfig base = cfg;
  base.n = 2;
  base.m = 1;
  base.lambda_plus = CoefficientSpec{};
  base.lambda_minus = CoefficientSpec{};
  base.lambda_plus.value = cfg.lambda_plus.value;
  base.lambda_minus.value = cfg.lambda_minus.value;
  const ProblemParams params = problem_params(base);
  SolveConfig scfg = cfg.solver;
  scfg.seed = cfg.seed;

  using Group = std::function<std::vector<InvariantCheck>()>;
  const std::vector<Group> groups{
      [&] { return core_checks(params); },         [&] { return solver_checks(params, scfg); },
      [&] { return weiss_checks(params, scfg); },  [&] { return blowup_checks(params); },
      [&] { return fb_checks(params); },           [&] { return epi_checks(params, scfg); },
  };
  std::vector<std::vector<InvariantCheck>> results(groups.size());
  parallel_for(groups.size(), [&](std::size_t i) { results[i] = groups[i](); });
  std::vector<InvariantCheck> all;
  for (auto& r : results) all.insert(all.end(), r.begin(), r.end());
  return all;
}

}  // namespace fblab
