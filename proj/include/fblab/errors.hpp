#pragma once

#include <stdexcept>
#include <string>

namespace fblab {

// Process exit codes shared by the library and the command line tool.
enum class ExitCode : int {
  kOk = 0,
  kInvariantFailure = 1,
  kInputError = 2,
  kSolverFailure = 3,
  kAnalysisPrecondition = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Malformed configuration, invalid parameters, unreadable or corrupt field files.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ExitCode::kInputError, what) {}
};

// Non-convergence, divergence or NaN inside an iterative solve.
class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what) : Error(ExitCode::kSolverFailure, what) {}
};

// Violated analysis preconditions: balls leaving the grid, radii below the
// resolvable scale, too few points for a fit.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ExitCode::kAnalysisPrecondition, what) {}
};

}  // namespace fblab
