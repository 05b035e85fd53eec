#pragma once

#include "fblab/config.hpp"

#include <string>
#include <vector>

namespace fblab {

/// Writes <out>/<kind>.fblab and <out>/<kind>.json for kind in
/// {halfspace, minimizer, drift}. Returns the exit code.
int cmd_generate(const std::string& kind, const ExperimentConfig& cfg);

/// Runs one analysis on a field file and writes <out>/<kind>.csv,
/// <out>/<kind>.json and, when enabled, <out>/<kind>.svg. `field_path` may
/// be empty for kind "epi", whose inputs are synthetic. Analysis
/// precondition failures still emit partial results and return 4.
int cmd_analyze(const std::string& kind, const std::string& field_path,
                const ExperimentConfig& cfg);

struct InvariantCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// The invariant suite at desk scale. Grid sizes are fixed; the problem
/// exponent q and the coefficients come from the config where a check is
/// meaningful for general q.
std::vector<InvariantCheck> run_invariant_suite(const ExperimentConfig& cfg);

/// Runs the suite, writes <out>/verify.json and prints one line per check.
/// Returns 0 when every check passes and 1 otherwise.
int cmd_verify(const ExperimentConfig& cfg);

}  // namespace fblab
