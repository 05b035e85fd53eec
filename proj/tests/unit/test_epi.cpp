#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "generators.hpp"

#include "fblab/epiperimetric.hpp"
#include "fblab/errors.hpp"
#include "fblab/weiss.hpp"

#include <cmath>

using namespace fblab;
using fblab::testing::for_all;
using fblab::testing::Gen;

TEST_CASE("mode names") {
  CHECK(parse_epi_mode("a") == EpiMode::kHalfspace);
  CHECK(parse_epi_mode("perturbed") == EpiMode::kPerturbed);
  CHECK(parse_epi_mode("c") == EpiMode::kScaled);
  CHECK(std::string(to_string(EpiMode::kScaled)) == "c");
  CHECK_THROWS_AS(parse_epi_mode("d"), InputError);
}

TEST_CASE("homogeneous inputs are kappa-homogeneous (property)") {
  const ProblemParams p;
  for_all(3, 51, [&](Gen& g) {
    const EpiMode mode = g.coin() ? EpiMode::kPerturbed : EpiMode::kScaled;
    const HomogeneousInput in = make_homogeneous_input(mode, g.uniform(0.01, 0.3), g.integer(1, 1000), p, Point::Zero(2));
    for (int k = 0; k < 20; ++k) {
      const Point x = 0.9 * g.uniform(0.3, 1.0) * g.unit2();
      const double t = g.uniform(0.3, 1.0);
      const double a = interpolate_component(in.c, Point(t * x), 0);
      const double b = std::pow(t, p.kappa()) * interpolate_component(in.c, x, 0);
      CHECK(std::abs(a - b) <= 1e-4 * halfspace_beta(p, Point::Zero(2)));
    }
  });
}

TEST_CASE("the half-space itself is degenerate") {
  const EpiReport r = epi_run(EpiMode::kHalfspace, 0.0, 1, ProblemParams{}, Point::Zero(2), SolveConfig{});
  CHECK(r.verdict == "DEGENERATE");
  CHECK(std::abs(r.M_c - r.B) <= r.floor);
  CHECK(r.dist_w12 <= 1e-6);
}

TEST_CASE("the competitor never raises M, and eta exceeds the threshold (property)") {
  HomogeneousOptions coarse;
  coarse.resolution = 33;
  for_all(2, 52, [&](Gen& g) {
    const EpiReport r = epi_run(EpiMode::kPerturbed, g.uniform(0.02, 0.2), g.integer(1, 1000), ProblemParams{},
                                Point::Zero(2), SolveConfig{}, {}, coarse);
    CHECK(r.M_vstar <= r.M_c);
    if (r.verdict != "DEGENERATE") CHECK(r.eta_star >= 0.01);
  });
}

TEST_CASE("zero data give a zero competitor") {
  const Field c = unit_ball_grid(2, 33, 1);
  const Field v = epi_competitor(c, Point::Zero(2), ProblemParams{}, SolveConfig{});
  CHECK(v.values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("perturbation scales with eps") {
  const ProblemParams p;
  const HomogeneousInput a = make_homogeneous_input(EpiMode::kPerturbed, 0.05, 9, p, Point::Zero(2));
  const HomogeneousInput b = make_homogeneous_input(EpiMode::kPerturbed, 0.1, 9, p, Point::Zero(2));
  CHECK(b.dist_w12 == doctest::Approx(2 * a.dist_w12).epsilon(1e-9));
  const HomogeneousInput c = make_homogeneous_input(EpiMode::kPerturbed, 0.05, 9, p, Point::Zero(2));
  CHECK((a.c.values() - c.c.values()).cwiseAbs().maxCoeff() == 0.0);
}
