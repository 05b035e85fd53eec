#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "generators.hpp"

#include "fblab/errors.hpp"
#include "fblab/freeboundary.hpp"
#include "fblab/halfspace.hpp"

#include <cmath>
#include <numbers>

using namespace fblab;
using fblab::testing::for_all;
using fblab::testing::Gen;

namespace {

Point p2(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

const std::vector<double> kRadii{0.25, 0.125, 0.0625};

}  // namespace

TEST_CASE("extracted points lie on the planted interface and straddle it (property)") {
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  const double h = grid.spacing();
  for_all(10, 41, [&](Gen& g) {
    ProblemParams p;
    p.q = g.uniform(0.2, 0.7);
    const HalfSpaceSolution hs = make_halfspace(p, p2(g.uniform(-0.3, 0.3), g.uniform(-0.3, 0.3)), g.unit2(), Vector::Ones(1));
    const Field u = sample_halfspace(grid, hs);
    const FreeBoundarySet s = extract_gamma(u, kDefaultTauRel, p);
    REQUIRE(!s.points.empty());
    CHECK(s.components == 1);
    // |u| = tau sits at depth (tau/beta)^{1/kappa} inside the positive side;
    // for large kappa that is several cells and the point must stay on that edge.
    const double depth = std::pow(s.tau / hs.beta, 1.0 / p.kappa());
    CAPTURE(p.q);
    CAPTURE(depth);
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      CHECK(std::abs((s.points[i] - hs.x0).dot(hs.nu)) <= depth + 1.5 * h);
      CHECK(u.value(s.inner[i]).norm() > s.tau);
      CHECK(u.value(s.outer[i]).norm() <= s.tau);
      if (i > 0) {
        const Point& a = s.points[i - 1];
        const Point& b = s.points[i];
        CHECK((a[0] < b[0] || (a[0] == b[0] && a[1] <= b[1])));
      }
    }
  });
}

TEST_CASE("planted interface at default q is recovered within 1.5 cells") {
  const ProblemParams p;
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  const HalfSpaceSolution hs = make_halfspace(p, p2(0.1, 0), p2(1, 0), Vector::Ones(1));
  const FreeBoundarySet s = extract_gamma(sample_halfspace(grid, hs), kDefaultTauRel, p);
  REQUIRE(!s.points.empty());
  for (const Point& x : s.points) CHECK(std::abs(x[0] - 0.1) <= 1.5 * grid.spacing());
}

TEST_CASE("separate interfaces get separate labels") {
  const ProblemParams p;
  const Field grid = box_grid(2, -1.0, 1.0, 65, 1);
  const HalfSpaceSolution left = make_halfspace(p, p2(-0.5, 0), p2(-1, 0), Vector::Ones(1));
  const HalfSpaceSolution right = make_halfspace(p, p2(0.5, 0), p2(1, 0), Vector::Ones(1));
  const Field u = sample(grid, 1, [&](const Point& x) { return Vector(halfspace_eval(left, x) + halfspace_eval(right, x)); });
  const FreeBoundarySet s = extract_gamma(u, kDefaultTauRel, p);
  CHECK(s.components == 2);
  for (std::size_t i = 0; i < s.points.size(); ++i) CHECK(s.labels[i] == (s.points[i][0] < 0 ? 0 : 1));
}

TEST_CASE("a field without zero set has no free boundary") {
  const Field grid = box_grid(2, -1.0, 1.0, 17, 1);
  Field u = grid.like(1);
  u.values().setConstant(1.0);
  const FreeBoundarySet s = extract_gamma(u, kDefaultTauRel, ProblemParams{});
  CHECK(s.points.empty());
  CHECK(!s.note.empty());
}

TEST_CASE("growth slopes and nondegeneracy on the half-space solution (property)") {
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  for_all(5, 42, [&](Gen& g) {
    ProblemParams p;
    p.q = g.uniform(0.2, 0.6);
    const HalfSpaceSolution hs = make_halfspace(p, p2(g.uniform(-0.1, 0.1), 0), g.unit2(), Vector::Ones(1));
    const Field u = sample_halfspace(grid, hs);
    const GrowthFit gf = growth_fit(u, hs.x0, kRadii, p);
    CHECK(gf.sup.exponent == doctest::Approx(p.kappa()).epsilon(1e-3));
    CHECK(gf.energy.exponent == doctest::Approx(2 * p.kappa()).epsilon(5e-3));
    CHECK_FALSE(gf.not_fb_point);
    const NondegeneracyResult nd = nondegeneracy_check(u, hs.x0, kRadii, p);
    CHECK(nd.c0_hat / hs.beta >= 0.8);
    CHECK(nd.c0_hat / hs.beta <= 1.0 + 1e-6);
    CHECK(nd.eps0_hat > 10 * nd.eps0_floor);
  });
}

TEST_CASE("classification is equivariant under grid rotations") {
  const ProblemParams p;
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  const HalfSpaceSolution hs = make_halfspace(p, p2(0.05, -0.02), p2(std::cos(0.3), std::sin(0.3)), Vector::Ones(1));
  const Field u = sample_halfspace(grid, hs);
  Field rot = grid.like(1);
  const int last = grid.dims()[0] - 1;
  for (Index i = 0; i < rot.num_nodes(); ++i) {
    NodeIndex k = grid.node(i);
    NodeIndex src = k;
    src[0] = k[1];
    src[1] = last - k[0];
    rot.values()(i, 0) = u.values()(grid.index(src), 0);
  }
  // rot(x) = u(R^T x) with R the quarter turn.
  const Classification a = classify_regular(u, hs.x0, kRadii, p);
  const Classification b = classify_regular(rot, p2(-hs.x0[1], hs.x0[0]), kRadii, p);
  CHECK(a.verdict == PointClass::kRegular);
  CHECK(b.verdict == PointClass::kRegular);
  CHECK((p2(-a.fit.nu[1], a.fit.nu[0]) - b.fit.nu).norm() <= 1e-9);
  CHECK(a.sup_slope == doctest::Approx(b.sup_slope).epsilon(1e-9));
}

TEST_CASE("points away from the interface are not regular") {
  const ProblemParams p;
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  const Field u = sample_halfspace(grid, make_halfspace(p, p2(-0.5, 0), p2(1, 0), Vector::Ones(1)));
  CHECK(classify_regular(u, p2(0.2, 0), kRadii, p).verdict == PointClass::kNotFreeBoundary);
}

TEST_CASE("normal field of a flat interface is constant") {
  const ProblemParams p;
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  const Field u = sample_halfspace(grid, make_halfspace(p, p2(0, 0), p2(1, 1), Vector::Ones(1)));
  std::vector<Point> pts;
  for (int k = -4; k <= 4; ++k) pts.push_back(p2(0.05 * k, -0.05 * k));
  const NormalFit nf = normal_field_fit(u, pts, kRadii, p);
  CHECK(nf.regular_points == 9);
  CHECK(nf.constant_normal);
  CHECK_THROWS_AS(normal_field_fit(u, {pts.begin(), pts.begin() + 4}, kRadii, p), PreconditionError);
}

TEST_CASE("graph of a flat interface is affine") {
  const ProblemParams p;
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  const Field u = sample_halfspace(grid, make_halfspace(p, p2(0, 0), p2(std::cos(0.4), std::sin(0.4)), Vector::Ones(1)));
  GraphOptions go;
  go.radii = kRadii;
  const GraphFit g = graph_fit(u, p2(0, 0), 0.5, p, go);
  CHECK(g.lipschitz <= 1e-3);
  CHECK(g.constant_gradient);
  CHECK_THROWS_AS(graph_fit(u, p2(0.3, 0.3), 0.5, p, go), PreconditionError);
}

TEST_CASE("auto radii") {
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  const std::vector<double> r = auto_radii(grid, p2(0, 0));
  REQUIRE(r.size() == 4);
  CHECK(r.back() == doctest::Approx(0.4));
  CHECK(r.front() == doctest::Approx(std::max(4.5 * grid.spacing(), 0.05)));
  const std::vector<double> edge = auto_radii(grid, p2(0.8, 0));
  CHECK(edge.back() <= 0.2);
  CHECK_THROWS_AS(auto_radii(grid, p2(0.99, 0)), PreconditionError);
}
