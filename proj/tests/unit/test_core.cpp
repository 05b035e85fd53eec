#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "generators.hpp"

#include "fblab/errors.hpp"
#include "fblab/field_io.hpp"
#include "fblab/fit.hpp"
#include "fblab/halfspace.hpp"
#include "fblab/nonlinearity.hpp"
#include "fblab/parallel.hpp"
#include "fblab/params.hpp"
#include "fblab/quadrature.hpp"
#include "fblab/weiss.hpp"

#include <atomic>
#include <sstream>

using namespace fblab;
using fblab::testing::for_all;
using fblab::testing::Gen;

namespace {

Point p2(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

}  // namespace

TEST_CASE("kappa and beta") {
  ProblemParams p;
  CHECK(p.kappa() == doctest::Approx(4.0));
  CHECK(halfspace_beta(p, p2(0, 0)) == doctest::Approx(1.0 / 144.0).epsilon(1e-14));
  p.q = 0.2;
  CHECK(p.kappa() == doctest::Approx(2.5));
  // (kappa (kappa - 1))^{-kappa/2} with kappa = 5/2.
  CHECK(halfspace_beta(p, p2(0, 0)) == doctest::Approx(std::pow(3.75, -1.25)).epsilon(1e-14));
  p.lambda_plus = Coefficient(4.0);
  CHECK(halfspace_beta(p, p2(0, 0)) == doctest::Approx(std::pow(4.0, 1.25) * std::pow(3.75, -1.25)));
}

TEST_CASE("parameter validation") {
  ProblemParams p;
  CHECK_NOTHROW(validate(p));
  p.q = 1.0;
  CHECK_THROWS_AS(validate(p), InputError);
  p = ProblemParams{};
  p.alpha = 2.0;
  CHECK_THROWS_AS(validate(p), InputError);
  p = ProblemParams{};
  p.M = 2.0;
  CHECK_THROWS_AS(validate(p), InputError);
  p = ProblemParams{};
  p.n = 4;
  CHECK_THROWS_AS(validate(p), InputError);
}

TEST_CASE("potential oracle") {
  const ProblemParams p;
  Vector v(2);
  v << 4.0, 0.0;
  CHECK(eval_F(p2(0, 0), v, p) == doctest::Approx(16.0 / 3.0).epsilon(1e-14));
  const Vector f = eval_f(p2(0, 0), v, p);
  CHECK(f[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f[1] == 0.0);
  CHECK(eval_F(p2(0, 0), Vector::Zero(3), p) == 0.0);
  CHECK(eval_f(p2(0, 0), Vector::Zero(3), p).norm() == 0.0);
}

TEST_CASE("potential: homogeneity, Euler identity and gradient (property)") {
  for_all(200, 1, [](Gen& g) {
    ProblemParams p;
    p.q = g.uniform(0.05, 0.95);
    p.lambda_plus = Coefficient(g.uniform(0.5, 2.0));
    p.lambda_minus = Coefficient(g.uniform(0.5, 2.0));
    const int m = g.integer(1, 3);
    const Vector v = g.vector(m);
    const Point x = p2(0, 0);
    const double t = g.uniform(0.1, 3.0);
    const double F = eval_F(x, v, p);
    CHECK(eval_F(x, Vector(t * v), p) == doctest::Approx(std::pow(t, p.q + 1.0) * F).epsilon(1e-12));
    CHECK(eval_f(x, v, p).dot(v) == doctest::Approx((p.q + 1.0) * F).epsilon(1e-12));
    // Gradient against central differences (v stays away from 0 by construction).
    const Vector f = eval_f(x, v, p);
    for (int j = 0; j < m; ++j) {
      if (std::abs(v[j]) < 1e-2) continue;
      const double h = 1e-6;
      Vector a = v;
      Vector b = v;
      a[j] += h;
      b[j] -= h;
      CHECK((eval_F(x, a, p) - eval_F(x, b, p)) / (2 * h) == doctest::Approx(f[j]).epsilon(1e-6));
    }
  });
}

TEST_CASE("half-space profile solves the ODE and matches its Jacobian (property)") {
  for_all(100, 2, [](Gen& g) {
    ProblemParams p;
    p.q = g.uniform(0.1, 0.9);
    const int n = g.integer(2, 3);
    const int m = g.integer(1, 2);
    p.n = n;
    p.m = m;
    const Point x0 = Point::Zero(n);
    const HalfSpaceSolution hs = make_halfspace(p, x0, g.unit(n), g.vector(m).cwiseAbs() + Vector::Constant(m, 0.1));
    CHECK(hs.nu.norm() == doctest::Approx(1.0));
    CHECK(hs.e.norm() == doctest::Approx(1.0));
    const double s = g.uniform(0.05, 1.0);
    // beta kappa (kappa - 1) s^{kappa-2} = lambda_+ (beta s^kappa)^q.
    const double k = hs.kappa;
    CHECK(hs.beta * k * (k - 1) * std::pow(s, k - 2) == doctest::Approx(std::pow(hs.beta * std::pow(s, k), p.q)).epsilon(1e-12));
    const Point x = x0 + s * hs.nu + 0.3 * g.unit(n);
    const Jacobian jac = halfspace_jacobian(hs, x);
    for (int d = 0; d < n; ++d) {
      Point a = x;
      Point b = x;
      a[d] += 1e-6;
      b[d] -= 1e-6;
      const Vector fd = (halfspace_eval(hs, a) - halfspace_eval(hs, b)) / 2e-6;
      CHECK((fd - jac.col(d)).norm() <= 1e-6 * (1.0 + jac.norm()));
    }
    CHECK(halfspace_eval(hs, Point(x0 - 0.1 * hs.nu)).norm() == 0.0);
  });
}

TEST_CASE("interpolation reproduces quintic polynomials (property)") {
  const Field grid = box_grid(2, -1.0, 1.0, 33, 1);
  for_all(20, 3, [&](Gen& g) {
    double c[6][6] = {};
    for (int a = 0; a <= 5; ++a)
      for (int b = 0; a + b <= 5; ++b) c[a][b] = g.normal();
    auto poly = [&](const Point& x) {
      double s = 0.0;
      for (int a = 0; a <= 5; ++a)
        for (int b = 0; a + b <= 5; ++b) s += c[a][b] * std::pow(x[0], a) * std::pow(x[1], b);
      return s;
    };
    const Field u = sample(grid, 1, [&](const Point& x) { return Vector::Constant(1, poly(x)); });
    const Point x = p2(g.uniform(-0.9, 0.9), g.uniform(-0.9, 0.9));
    CHECK(interpolate_component(u, x, 0) == doctest::Approx(poly(x)).epsilon(1e-10));
  });
}

TEST_CASE("node Jacobian is exact on cubics") {
  const Field grid = box_grid(2, -1.0, 1.0, 17, 1);
  const Field u = sample(grid, 1, [](const Point& x) {
    return Vector::Constant(1, x[0] * x[0] * x[0] - 2 * x[0] * x[1] + x[1] * x[1]);
  });
  for (Index i = 0; i < u.num_nodes(); ++i) {
    const Point x = u.position(i);
    const Jacobian j = node_jacobian(u, i);
    const bool interior = std::abs(x[0]) < 0.85 && std::abs(x[1]) < 0.85;
    if (!interior) continue;
    CHECK(j(0, 0) == doctest::Approx(3 * x[0] * x[0] - 2 * x[1]).epsilon(1e-10));
    CHECK(j(0, 1) == doctest::Approx(-2 * x[0] + 2 * x[1]).epsilon(1e-10));
  }
}

TEST_CASE("ball volume and sphere area calibration") {
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  CHECK(quadrature_relative_error(grid, BallSpec{p2(0.1, -0.2), 0.5}) < 1e-4);
  const Field grid3 = box_grid(3, -1.0, 1.0, 33, 1);
  Point c3 = Point::Zero(3);
  CHECK(quadrature_relative_error(grid3, BallSpec{c3, 0.6}) < 1e-3);
}

TEST_CASE("ball integral of polynomials matches polar formulas (property)") {
  const Field grid = box_grid(2, -1.0, 1.0, 65, 1);
  for_all(10, 4, [&](Gen& g) {
    const double r = g.uniform(0.2, 0.5);
    const Point c = p2(g.uniform(-0.3, 0.3), g.uniform(-0.3, 0.3));
    // int_B |x - c|^2 = pi r^4 / 2.
    const Field f = sample(grid, 1, [&](const Point& x) { return Vector::Constant(1, (x - c).squaredNorm()); });
    CHECK(ball_integral(f, BallSpec{c, r}) == doctest::Approx(std::numbers::pi * std::pow(r, 4) / 2).epsilon(2e-4));
    CHECK(sphere_integral(f, BallSpec{c, r}) == doctest::Approx(2 * std::numbers::pi * std::pow(r, 3)).epsilon(1e-6));
  });
}

TEST_CASE("degenerate and outside balls are rejected") {
  const Field grid = box_grid(2, -1.0, 1.0, 65, 1);
  CHECK_THROWS_AS(check_ball(grid, BallSpec{p2(0, 0), 0.05}), PreconditionError);
  CHECK_THROWS_AS(check_ball(grid, BallSpec{p2(0.8, 0), 0.3}), PreconditionError);
  CHECK_NOTHROW(check_ball(grid, BallSpec{p2(0.5, 0), 0.5}));
}

TEST_CASE("cap moments against closed forms") {
  // n = 2: int_{-pi/2}^{pi/2} cos^k = sqrt(pi) Gamma((k+1)/2) / Gamma(k/2+1);
  // n = 3: 2 pi / (k + 1).
  for (double k : {0.0, 1.0, 3.0, 5.5, 6.0, 8.0}) {
    const double c2 = std::sqrt(std::numbers::pi) * std::tgamma((k + 1) / 2) / std::tgamma(k / 2 + 1);
    CHECK(sphere_cap_moment(2, k) == doctest::Approx(c2).epsilon(1e-12));
    CHECK(sphere_cap_moment(3, k) == doctest::Approx(2 * std::numbers::pi / (k + 1)).epsilon(1e-12));
  }
}

TEST_CASE("field I/O round trip is exact (property)") {
  for_all(20, 5, [](Gen& g) {
    const int n = g.integer(1, 3);
    const int m = g.integer(1, 3);
    const int res = g.integer(2, n == 3 ? 6 : 12);
    Field u = box_grid(n, g.uniform(-2, 0), g.uniform(0.5, 2), res, m);
    for (Index i = 0; i < u.num_nodes(); ++i) u.set_value(i, g.vector(m, std::pow(10.0, g.integer(-300, 300))));
    std::stringstream ss;
    write_field(ss, u);
    const Field back = read_field(ss);
    REQUIRE(back.same_geometry(u));
    CHECK(back.components() == m);
    CHECK((back.values().array() == u.values().array()).all());
  });
}

TEST_CASE("corrupted field files are rejected") {
  Field u = box_grid(2, -1.0, 1.0, 4, 1);
  std::stringstream ss;
  write_field(ss, u);
  const std::string good = ss.str();
  auto rejects = [](const std::string& text) {
    std::stringstream in(text);
    CHECK_THROWS_AS(read_field(in), InputError);
  };
  rejects("");
  rejects("FBLAB2" + good.substr(6));
  rejects(good.substr(0, good.size() / 2));
  rejects(good + "0\n");
  std::string nan = good;
  nan.replace(nan.rfind('0'), 1, "nan");
  rejects(nan);
  std::string extra = good;
  extra.insert(extra.find('\n', extra.find('\n') + 1), " 1");
  rejects(extra);
}

TEST_CASE("power-law fit recovers exponents (property)") {
  for_all(50, 6, [](Gen& g) {
    const double p = g.uniform(-3, 5);
    const double c = std::exp(g.uniform(-5, 5));
    std::vector<double> x;
    std::vector<double> y;
    for (int k = 0; k < 6; ++k) {
      x.push_back(g.uniform(0.01, 1.0));
      y.push_back(c * std::pow(x.back(), p));
    }
    const FitResult f = fit_power_law(x, y);
    REQUIRE(f.ok);
    CHECK(f.exponent == doctest::Approx(p).epsilon(1e-9));
    CHECK(f.residual < 1e-9);
  });
  CHECK_FALSE(fit_power_law({0.1}, {1.0}).ok);
  CHECK_FALSE(fit_power_law({0.1, 0.1}, {1.0, 2.0}).ok);
}

TEST_CASE("parallel_for covers every index and rethrows the first failure") {
  for (int threads : {1, 3}) {
    set_thread_count(threads);
    std::vector<int> hits(50, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
    CHECK(std::count(hits.begin(), hits.end(), 1) == 50);
    try {
      parallel_for(20, [](std::size_t i) {
        if (i == 7 || i == 13) throw InputError("index " + std::to_string(i));
      });
      FAIL("expected an exception");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()) == "index 7");
    }
  }
  set_thread_count(1);
}
