#pragma once

#include "fblab/blowup.hpp"
#include "fblab/grid_field.hpp"
#include "fblab/params.hpp"
#include "fblab/solver.hpp"

#include <cstdint>
#include <string>

namespace fblab {

/// (a) the half-space trace, (b) the trace plus eps times a random
/// band-limited perturbation, (c) the trace scaled by 1 + eps.
enum class EpiMode { kHalfspace, kPerturbed, kScaled };

const char* to_string(EpiMode mode);
/// Accepts "a"/"halfspace", "b"/"perturbed", "c"/"scaled"; throws InputError.
EpiMode parse_epi_mode(const std::string& text);

struct HomogeneousOptions {
  int resolution = 65;
  /// Normal of the reference half-space solution; empty selects e_1.
  Point nu;
};

struct HomogeneousInput {
  EpiMode mode = EpiMode::kHalfspace;
  double eps = 0.0;
  std::uint64_t seed = 0;
  /// c on unit_ball_grid(n, resolution, m).
  Field c;
  /// The reference half-space solution sampled on the same grid.
  Field h;
  /// ||c - h||_{W^{1,2}(B_1)} against the reference h.
  double dist_w12 = 0.0;
  std::string description;
};

/// c(x) = |x|^kappa g(x/|x|), g the trace of the reference h on the unit
/// sphere, modified according to `mode`. The mode (b) perturbation is a
/// polynomial of degree <= 4 with standard normal coefficients (one set per
/// component, drawn from mt19937_64(seed)) restricted to the sphere and
/// rescaled to the RMS of the trace of h. Coefficients are frozen at x0.
HomogeneousInput make_homogeneous_input(EpiMode mode, double eps, std::uint64_t seed,
                                        const ProblemParams& params, const Point& x0,
                                        const HomogeneousOptions& opts = {});

/// Minimizer of the discrete energy on the nodes strictly inside B_1 with
/// v = c elsewhere, coefficients frozen at x0. Solver errors propagate.
Field epi_competitor(const Field& c, const Point& x0, const ProblemParams& params,
                     const SolveConfig& cfg, SolveStats* stats = nullptr);

struct EpiOptions {
  double eta_min = 0.01;
  /// delta_probe as a fraction of the half-space W^{1,2} norm.
  double delta_probe_fraction = 0.3;
};

struct EpiReport {
  std::string description;
  /// Distance from c to the nearest half-space solution (multistart fit).
  double dist_w12 = 0.0;
  HFit fit;
  /// M_{x0}(c) by ball and sphere quadrature (weiss_M).
  double M_c = 0.0;
  /// Drop of the solver's discrete energy from c to v*, and M_c minus it.
  double energy_drop = 0.0;
  double M_vstar = 0.0;
  /// weiss_M of v* directly; differs from M_vstar by discretization error.
  double M_vstar_quadrature = 0.0;
  /// Closed-form half-space level.
  double B = 0.0;
  /// weiss_M of the sampled reference h.
  double B_discrete = 0.0;
  /// Larger of |B_discrete - B| and the unit-ball calibration times |M|.
  double floor = 0.0;
  /// (M_c - M_vstar) / (M_c - B); zero when undefined.
  double eta_star = 0.0;
  bool eta_defined = false;
  double delta_probe = 0.0;
  /// "PASS", "FAIL", "DEGENERATE" (M_c - B <= floor) or "OUTSIDE-DELTA".
  std::string verdict;
  SolveStats solver;
  std::string note;
};

/// Solves for the competitor of c and assembles the report. `h` is the
/// reference half-space solution on the grid of c.
EpiReport epi_eta(const Field& c, const Field& h, const Point& x0, const ProblemParams& params,
                  const SolveConfig& cfg, const EpiOptions& opts = {});

/// make_homogeneous_input followed by epi_eta.
EpiReport epi_run(EpiMode mode, double eps, std::uint64_t seed, const ProblemParams& params,
                  const Point& x0, const SolveConfig& cfg, const EpiOptions& opts = {},
                  const HomogeneousOptions& hopts = {});

}  // namespace fblab
