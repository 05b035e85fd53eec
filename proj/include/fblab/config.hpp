#pragma once

#include "fblab/params.hpp"
#include "fblab/solver.hpp"
#include "fblab/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fblab {

/// Affine coefficient c + g.x; an empty gradient means the constant c.
struct CoefficientSpec {
  double value = 1.0;
  std::vector<double> gradient;
};

/// Everything an experiment needs, read from a flat `key = value` file
/// (`#` starts a comment; lists are whitespace separated).
struct ExperimentConfig {
  // Problem.
  int n = 2;
  int m = 1;
  double q = 0.5;
  double alpha = 1.0;
  double M = 2.5;
  double lambda0 = 1.0;
  double lambda1 = 1.0;
  CoefficientSpec lambda_plus;
  CoefficientSpec lambda_minus;

  // Grid on [domain_lo, domain_hi]^n.
  int resolution = 129;
  double domain_lo = -1.0;
  double domain_hi = 1.0;

  // Data for generate.
  std::string boundary = "halfspace";  // halfspace | constant | zero
  double boundary_value = 1e-3;
  std::vector<double> nu{1.0, 0.0};
  std::vector<double> e{1.0};
  std::vector<double> x0{0.0, 0.0};
  std::vector<double> drift_b{0.0, 0.0};
  double gauge_p = 10.0;

  SolveConfig solver;

  // Analysis.
  std::vector<double> center{0.0, 0.0};
  std::vector<double> weiss_radii{0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4};
  std::vector<double> blowup_radii{0.4, 0.2, 0.1, 0.0625};
  std::vector<double> fb_radii{0.25, 0.125, 0.0625};
  std::vector<double> gauge_radii{0.1, 0.15, 0.2, 0.3, 0.4};
  int fb_max_points = 24;
  double graph_window = 0.5;
  double tau_rel = 1e-10;
  double eps_reg = 0.1;
  double slope_band = 0.25;
  double eta_min = 0.01;
  double delta_probe = 0.3;
  std::vector<std::string> epi_modes{"b", "c"};
  std::vector<double> epi_eps{0.02, 0.05, 0.1, 0.2};
  int epi_resolution = 65;
  int blowup_resolution = 65;
  bool svg = true;

  std::uint64_t seed = 1;
  std::string out = "out";

  double spacing() const { return (domain_hi - domain_lo) / (resolution - 1); }
};

/// Parses the config text; unknown or repeated keys and malformed values
/// raise InputError naming the line. The result is validated.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Throws InputError on inconsistent settings: invalid problem parameters,
/// vector lengths not matching n or m, radii outside (4/resolution, 0.5),
/// and the resolution guard (see check_resolution).
void validate(const ExperimentConfig& cfg);

/// Rejects with "resolution insufficient" when the kappa-homogeneous profile
/// cannot be represented on the grid: fewer than kappa/2 cells across the
/// smallest analysis radius, or beta h^kappa below the normal double range.
void check_resolution(const ExperimentConfig& cfg);

ProblemParams problem_params(const ExperimentConfig& cfg);
Point to_point(const std::vector<double>& v);
Vector to_vector(const std::vector<double>& v);

/// Normalized key/value listing of every setting, in key order.
std::map<std::string, std::string> config_entries(const ExperimentConfig& cfg);

}  // namespace fblab
