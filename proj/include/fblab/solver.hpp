#pragma once

#include "fblab/fit.hpp"
#include "fblab/grid_field.hpp"
#include "fblab/params.hpp"
#include "fblab/quadrature.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fblab {

struct SolveConfig {
  /// Relative energy slack treated as rounding noise in the sufficient
  /// decrease and restart tests.
  double tol_energy = 1e-13;
  /// Stationarity threshold on |Laplacian u - f(x,u)| (sup over free nodes).
  double tol_grad = 1e-9;
  int max_iters = 200000;
  /// Line-search factor: the step 1/L shrinks by this factor on rejection.
  double backtrack = 0.5;
  /// Picard damping theta for drift_solve.
  double damping = 0.7;
  int max_picard = 400;
  std::uint64_t seed = 1;
  /// Start from uniform noise instead of the harmonic extension.
  bool random_init = false;
};

/// Throws InputError on out-of-range settings.
void validate(const SolveConfig& cfg);

/// Where the unknowns live: the interior nodes of the grid box, or the
/// nodes strictly inside a ball. All other nodes carry boundary values.
struct Region {
  std::optional<BallSpec> ball;
};

struct SolveStats {
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
  /// Discrete energy J after each accepted iterate (nonincreasing).
  std::vector<double> energy_history;
  double energy = 0.0;
  /// sup |Laplacian u - f(x,u) - g| over free nodes.
  double residual = 0.0;
  /// Gradient-mapping norm at the last step, in the units of the residual.
  double grad_norm = 0.0;
  std::string message;
};

/// The discrete energy
///   J(u) = sum_edges h^{n-2} |u_i - u_j|^2 + sum_free h^n (2F(x_i,u_i) + 2 g_i.u_i)
/// over edges with at least one free endpoint. Its free-node gradient is
/// h^n (-2 Laplacian u + 2 f(x,u) + 2 g), Laplacian being the 2n+1 point
/// stencil. g is an optional source (zero unless set).
class EnergyProblem {
 public:
  EnergyProblem(const Field& boundary, const ProblemParams& params, const Region& region = {});

  const Field& boundary() const { return boundary_; }
  Index num_free() const { return static_cast<Index>(free_.size()); }
  bool is_free(Index node) const { return slot_[static_cast<std::size_t>(node)] >= 0; }
  const std::vector<Index>& free_nodes() const { return free_; }

  void set_source(const Field& g);

  double energy(const Field& u) const;
  /// dJ/du, zero at fixed nodes.
  Field gradient(const Field& u) const;
  /// sup over free nodes of |Laplacian u - f(x,u) - g|.
  double residual(const Field& u) const;

  /// Discrete harmonic extension of the boundary values (sparse Cholesky in
  /// 2D, conjugate gradients in 3D).
  Field harmonic_extension() const;

  /// Accelerated proximal gradient with backtracking and function-value
  /// restart, started from `init` (its fixed-node values are ignored).
  Field minimize(const Field& init, const SolveConfig& cfg, SolveStats* stats) const;

 private:
  using Block = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Block gather(const Field& u) const;
  Field scatter(const Block& x) const;
  // Smooth part (edges + source) divided by h^n, and its gradient.
  double smooth_value(const Block& x) const;
  void smooth_gradient(const Block& x, Block& grad) const;
  double potential_value(const Block& x) const;
  void prox(const Block& z, double sigma, Block& out) const;
  void laplacian(const Block& x, Block& out) const;

  Field boundary_;
  ProblemParams params_;
  int n_ = 2;
  int m_ = 1;
  double h_ = 1.0;
  std::vector<Index> free_;
  std::vector<int> slot_;
  // 2n neighbour slots per free node, -1 for a fixed neighbour.
  std::vector<int> nbr_;
  // Grid node behind each neighbour slot.
  std::vector<Index> nbr_node_;
  Block boundary_sum_;
  Block source_;
  std::vector<double> lambda_plus_;
  std::vector<double> lambda_minus_;
};

/// Minimizer of J with the boundary values of `boundary` on the fixed nodes.
/// Throws SolverError on non-convergence or NaN; `stats` is filled either way.
Field minimize_energy(const Field& boundary, const ProblemParams& params, const SolveConfig& cfg,
                      const Region& region = {}, SolveStats* stats = nullptr);

/// u outside the ball, discrete harmonic inside (nodes strictly inside the
/// ball are replaced; the others supply the boundary values).
Field harmonic_replacement(const Field& u, const BallSpec& ball);

/// sum over edges with an endpoint in the region of h^{n-2}|u_i - u_j|^2.
double discrete_dirichlet(const Field& u, const Region& region);

/// b . grad u with first-order upwinding (forward difference where b_d > 0).
Field upwind_advection(const Field& u, const Field& b);

struct DriftStats {
  int picard_iterations = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
  bool converged = false;
};

/// Solves Laplacian u + b.grad u = f(x,u) on the box interior by damped
/// Picard iteration on the lagged drift term; each step is a convex solve.
/// Throws SolverError when the residual grows for 10 consecutive steps or
/// max_picard is reached.
Field drift_solve(const Field& boundary, const Field& b, const ProblemParams& params,
                  const SolveConfig& cfg, DriftStats* stats = nullptr);

struct GaugeFit {
  std::vector<double> radii;
  std::vector<double> J_u;
  std::vector<double> J_vstar;
  std::vector<double> omega;
  /// Per ball: "ok", "skipped" (J(v*) below 1e-14) or an error message.
  std::vector<std::string> status;
  FitResult fit;
  /// Largest sampled radius up to which every sample stays within 0.5 of the
  /// log-log fit (0 when no fit).
  double r0_empirical = 0.0;
};

/// Measures omega(r) = J(u;B)/J(v*;B) - 1 against the discrete minimizer v*
/// with the same boundary values on each ball and fits omega ~ C r^p over
/// the balls with positive omega.
GaugeFit verify_almost_min(const Field& u, const std::vector<BallSpec>& balls,
                           const ProblemParams& params, const SolveConfig& cfg);

}  // namespace fblab
