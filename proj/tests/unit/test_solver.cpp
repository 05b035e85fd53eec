#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "generators.hpp"

#include "fblab/errors.hpp"
#include "fblab/halfspace.hpp"
#include "fblab/solver.hpp"

#include <cmath>

using namespace fblab;
using fblab::testing::for_all;
using fblab::testing::Gen;

namespace {

Point p2(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

// Radial solution of u'' + (n-1) u'/r = u^q with u'(0) = 0 and u(1) = 1, by
// RK4 shooting on u(0) and bisection.
struct RadialOracle {
  int n = 2;
  double q = 0.5;
  double u0 = 0.0;

  // Integrates from 0 to r; returns u(r). Starts at a small r with the
  // series u = u0 + u0^q r^2 / (2n).
  double solve(double start, double r_end, std::vector<double>* samples = nullptr, int steps = 20000) const {
    const double r0 = 1e-6;
    double r = r0;
    double u = start + std::pow(start, q) * r0 * r0 / (2 * n);
    double v = std::pow(start, q) * r0 / n;
    const double h = (r_end - r0) / steps;
    auto rhs = [&](double rr, double uu, double vv) {
      return std::pair<double, double>{vv, std::pow(std::max(uu, 0.0), q) - (n - 1) * vv / rr};
    };
    if (samples) samples->push_back(start);
    for (int k = 0; k < steps; ++k) {
      auto [a1, b1] = rhs(r, u, v);
      auto [a2, b2] = rhs(r + h / 2, u + h / 2 * a1, v + h / 2 * b1);
      auto [a3, b3] = rhs(r + h / 2, u + h / 2 * a2, v + h / 2 * b2);
      auto [a4, b4] = rhs(r + h, u + h * a3, v + h * b3);
      u += h / 6 * (a1 + 2 * a2 + 2 * a3 + a4);
      v += h / 6 * (b1 + 2 * b2 + 2 * b3 + b4);
      r += h;
      if (samples) samples->push_back(u);
    }
    return u;
  }

  explicit RadialOracle(double target) {
    double lo = 0.0;
    double hi = target;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (solve(mid, 1.0) > target ? hi : lo) = mid;
    }
    u0 = 0.5 * (lo + hi);
  }
};

}  // namespace

TEST_CASE("energy gradient matches finite differences (property)") {
  for_all(6, 11, [](Gen& g) {
    ProblemParams p;
    p.q = g.uniform(0.1, 0.9);
    const int m = g.integer(1, 2);
    const Field grid = box_grid(2, -1.0, 1.0, 9, m);
    Field u = grid.like(m);
    // Components bounded away from zero so the potential is smooth.
    for (Index i = 0; i < u.num_nodes(); ++i) {
      for (int j = 0; j < m; ++j) u.values()(i, j) = (g.coin() ? 1 : -1) * g.uniform(0.5, 1.5);
    }
    const EnergyProblem prob(u, p);
    const Field grad = prob.gradient(u);
    for (Index node : prob.free_nodes()) {
      for (int j = 0; j < m; ++j) {
        const double h = 1e-4 * std::abs(u.values()(node, j));
        Field a = u;
        Field b = u;
        a.values()(node, j) += h;
        b.values()(node, j) -= h;
        const double fd = (prob.energy(a) - prob.energy(b)) / (2 * h);
        CHECK(fd == doctest::Approx(grad.values()(node, j)).epsilon(1e-6));
      }
    }
    for (Index i = 0; i < u.num_nodes(); ++i) {
      if (!prob.is_free(i)) CHECK(grad.value(i).norm() == 0.0);
    }
  });
}

TEST_CASE("discrete energy is convex along segments (property)") {
  for_all(30, 12, [](Gen& g) {
    ProblemParams p;
    p.q = g.uniform(0.1, 0.9);
    const Field grid = box_grid(2, -1.0, 1.0, 9, 2);
    const Field a = g.noise(grid, 2);
    Field b = g.noise(grid, 2);
    b.values().topRows(9) = a.values().topRows(9);
    const EnergyProblem prob(a, p);
    const double t = g.uniform(0.0, 1.0);
    Field mid = a;
    mid.values() = (1 - t) * a.values() + t * b.values();
    CHECK(prob.energy(mid) <= (1 - t) * prob.energy(a) + t * prob.energy(b) + 1e-12);
  });
}

TEST_CASE("radial Dirichlet problem matches the shooting oracle") {
  // u = 1 on the unit circle. The fixed nodes outside the disk carry the
  // continued radial profile, so only the interior discretization is tested.
  const ProblemParams p;
  const RadialOracle oracle(1.0);
  std::vector<double> profile;
  const int steps = 30000;
  const double r_end = 1.5;
  oracle.solve(oracle.u0, r_end, &profile, steps);
  auto radial = [&](double r) {
    const double s = r / r_end * steps;
    const int k = std::min(steps - 1, static_cast<int>(s));
    return profile[k] + (s - k) * (profile[k + 1] - profile[k]);
  };
  double prev = 1e300;
  for (int res : {33, 65}) {
    const Field grid = box_grid(2, -1.0, 1.0, res, 1);
    const Field bd = sample(grid, 1, [&](const Point& x) { return Vector::Constant(1, radial(x.norm())); });
    const Field u = minimize_energy(bd, p, SolveConfig{}, Region{BallSpec{p2(0, 0), 1.0}});
    double worst = 0.0;
    for (Index i = 0; i < u.num_nodes(); ++i) {
      const double r = u.position(i).norm();
      if (r < 1.0) worst = std::max(worst, std::abs(u.values()(i, 0) - radial(r)));
    }
    CAPTURE(res);
    CHECK(worst <= 5e-3);
    CHECK(worst < prev);
    prev = worst;
  }
}

TEST_CASE("half-space boundary data recover the half-space solution") {
  const ProblemParams p;
  const HalfSpaceSolution hs = make_halfspace(p, p2(0.1, 0), p2(1, 1), Vector::Ones(1));
  double prev = 1e300;
  for (int res : {33, 65}) {
    const Field grid = box_grid(2, -1.0, 1.0, res, 1);
    const Field h = sample_halfspace(grid, hs);
    SolveStats stats;
    const Field u = minimize_energy(h, p, SolveConfig{}, {}, &stats);
    CHECK(stats.converged);
    const double err = (u.values() - h.values()).cwiseAbs().maxCoeff();
    CHECK(err < prev);
    CHECK(err <= 5e-3);
    prev = err;
    for (std::size_t k = 1; k < stats.energy_history.size(); ++k) {
      CHECK(stats.energy_history[k] <= stats.energy_history[k - 1] * (1 + 1e-12));
    }
  }
}

TEST_CASE("zero boundary data give the zero minimizer") {
  const Field grid = box_grid(2, -1.0, 1.0, 33, 2);
  const Field u = minimize_energy(grid, ProblemParams{}, SolveConfig{});
  CHECK(u.values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("drift solver with b = 0 coincides with the minimizer") {
  const ProblemParams p;
  const Field grid = box_grid(2, -1.0, 1.0, 33, 1);
  Field bd = grid.like(1);
  bd.values().setConstant(9e-4);
  const Field u = minimize_energy(bd, p, SolveConfig{});
  const Field v = drift_solve(bd, grid.like(2), p, SolveConfig{});
  CHECK((u.values() - v.values()).cwiseAbs().maxCoeff() <= 1e-6 * u.values().cwiseAbs().maxCoeff());
}

TEST_CASE("minimizer is an almost minimizer with zero gauge") {
  const ProblemParams p;
  const Field grid = box_grid(2, -1.0, 1.0, 33, 1);
  Field bd = grid.like(1);
  bd.values().setConstant(9e-4);
  const Field u = minimize_energy(bd, p, SolveConfig{});
  const GaugeFit g = verify_almost_min(u, {BallSpec{p2(0.5, 0), 0.3}, BallSpec{p2(0.5, 0), 0.4}}, p, SolveConfig{});
  for (double w : g.omega) CHECK(std::abs(w) <= 1e-9);
}

TEST_CASE("harmonic replacement keeps harmonic polynomials") {
  const Field grid = box_grid(2, -1.0, 1.0, 33, 1);
  const Field u = sample(grid, 1, [](const Point& x) { return Vector::Constant(1, x[0] * x[0] - x[1] * x[1] + x[0]); });
  const Field v = harmonic_replacement(u, BallSpec{p2(0, 0), 0.6});
  CHECK((u.values() - v.values()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("solver config validation") {
  SolveConfig c;
  CHECK_NOTHROW(validate(c));
  c.backtrack = 1.5;
  CHECK_THROWS_AS(validate(c), InputError);
  c = SolveConfig{};
  c.max_iters = 0;
  CHECK_THROWS_AS(validate(c), InputError);
}

TEST_CASE("iteration cap raises a solver error") {
  const Field grid = box_grid(2, -1.0, 1.0, 33, 1);
  Field bd = grid.like(1);
  bd.values().setConstant(1.0);
  SolveConfig c;
  c.max_iters = 2;
  c.random_init = true;
  CHECK_THROWS_AS(minimize_energy(bd, ProblemParams{}, c), SolverError);
}
