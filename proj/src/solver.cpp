#include "fblab/solver.hpp"

#include "fblab/errors.hpp"
#include "fblab/nonlinearity.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace fblab {

void validate(const SolveConfig& cfg) {
  std::ostringstream err;
  if (!(cfg.tol_energy > 0.0)) err << "tol_energy must be positive; ";
  if (!(cfg.tol_grad > 0.0)) err << "tol_grad must be positive; ";
  if (cfg.max_iters < 1) err << "max_iters must be >= 1; ";
  if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0)) err << "backtrack must lie in (0,1); ";
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) err << "damping must lie in (0,1]; ";
  if (cfg.max_picard < 1) err << "max_picard must be >= 1; ";
  const std::string msg = err.str();
  if (!msg.empty()) throw InputError("invalid solver configuration: " + msg);
}

namespace {

// Root of rho + c rho^q = a on [0, a].
double shrink_radius(double a, double c, double q) {
  if (a <= 0.0) return 0.0;
  if (c <= 0.0) return a;
  if (q == 0.5) {
    const double t = 2.0 * a / (c + std::sqrt(c * c + 4.0 * a));
    return t * t;
  }
  // g(rho) = rho + c rho^q - a is increasing and concave, so Newton started
  // below the root climbs to it monotonically.
  double rho = std::min(0.5 * a, std::pow(0.5 * a / c, 1.0 / q));
  if (!(rho > 0.0)) return std::min(a, std::pow(a / c, 1.0 / q));
  for (int it = 0; it < 100; ++it) {
    const double rq = std::pow(rho, q);
    const double g = rho + c * rq - a;
    const double dg = 1.0 + c * q * rq / rho;
    const double step = g / dg;
    rho -= step;
    if (std::abs(step) <= 1e-16 * rho) break;
  }
  return std::clamp(rho, 0.0, a);
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

bool inside_region(const Field& grid, Index i, const Region& region) {
  if (grid.on_boundary(i)) return false;
  if (!region.ball) return true;
  const double r = region.ball->radius;
  return (grid.position(i) - region.ball->center).squaredNorm() < r * r * (1.0 - 1e-12);
}

}  // namespace

EnergyProblem::EnergyProblem(const Field& boundary, const ProblemParams& params,
                             const Region& region)
    : boundary_(boundary), params_(params) {
  if (!all_finite(boundary)) throw InputError("boundary values must be finite");
  if (region.ball) {
    QuadratureOptions opts;
    opts.min_cells = 1.0;
    check_ball(boundary, *region.ball, opts);
  }
  n_ = boundary.dim();
  m_ = boundary.components();
  h_ = boundary.spacing();
  const Index N = boundary.num_nodes();
  slot_.assign(static_cast<std::size_t>(N), -1);
  for (Index i = 0; i < N; ++i) {
    if (inside_region(boundary, i, region)) {
      slot_[static_cast<std::size_t>(i)] = static_cast<int>(free_.size());
      free_.push_back(i);
    }
  }
  const Index F = num_free();
  nbr_.assign(static_cast<std::size_t>(F * 2 * n_), -1);
  nbr_node_.assign(static_cast<std::size_t>(F * 2 * n_), -1);
  boundary_sum_ = Block::Zero(F, m_);
  source_ = Block::Zero(F, m_);
  lambda_plus_.resize(static_cast<std::size_t>(F));
  lambda_minus_.resize(static_cast<std::size_t>(F));
  for (Index k = 0; k < F; ++k) {
    const Index i = free_[static_cast<std::size_t>(k)];
    const Point x = boundary.position(i);
    lambda_plus_[static_cast<std::size_t>(k)] = params.lambda_plus(x);
    lambda_minus_[static_cast<std::size_t>(k)] = params.lambda_minus(x);
    for (int d = 0; d < n_; ++d) {
      const Index s = boundary.stride(d);
      const Index nb[2] = {i - s, i + s};
      for (int side = 0; side < 2; ++side) {
        nbr_node_[static_cast<std::size_t>(k * 2 * n_ + 2 * d + side)] = nb[side];
        const int j = slot_[static_cast<std::size_t>(nb[side])];
        if (j >= 0) {
          nbr_[static_cast<std::size_t>(k * 2 * n_ + 2 * d + side)] = j;
        } else {
          boundary_sum_.row(k) += boundary.values().row(nb[side]);
        }
      }
    }
  }
}

void EnergyProblem::set_source(const Field& g) {
  if (!g.same_geometry(boundary_) || g.components() != m_) {
    throw InputError("source field must match the boundary geometry");
  }
  source_ = gather(g);
}

EnergyProblem::Block EnergyProblem::gather(const Field& u) const {
  Block x(num_free(), m_);
  for (Index k = 0; k < num_free(); ++k) x.row(k) = u.values().row(free_[static_cast<std::size_t>(k)]);
  return x;
}

Field EnergyProblem::scatter(const Block& x) const {
  Field u = boundary_;
  for (Index k = 0; k < num_free(); ++k) u.values().row(free_[static_cast<std::size_t>(k)]) = x.row(k);
  return u;
}

// out = A x with A = 2n I - (free adjacency); -Laplacian u = (A x - B)/h^2.
void EnergyProblem::laplacian(const Block& x, Block& out) const {
  const Index F = num_free();
  out.resize(F, m_);
  const int deg = 2 * n_;
  for (Index k = 0; k < F; ++k) {
    auto row = out.row(k);
    row = static_cast<double>(deg) * x.row(k);
    const int* nb = &nbr_[static_cast<std::size_t>(k * deg)];
    for (int s = 0; s < deg; ++s) {
      if (nb[s] >= 0) row -= x.row(nb[s]);
    }
  }
}

// Summed edge by edge (not as x.Ax - 2x.B + C) to avoid cancellation.
double EnergyProblem::smooth_value(const Block& x) const {
  const int deg = 2 * n_;
  double edges = 0.0;
  for (Index k = 0; k < num_free(); ++k) {
    const int* nb = &nbr_[static_cast<std::size_t>(k * deg)];
    const Index* nodes = &nbr_node_[static_cast<std::size_t>(k * deg)];
    for (int s = 0; s < deg; ++s) {
      if (nb[s] >= 0) {
        if (nb[s] > k) edges += (x.row(k) - x.row(nb[s])).squaredNorm();
      } else {
        edges += (x.row(k) - boundary_.values().row(nodes[s])).squaredNorm();
      }
    }
  }
  return edges / (h_ * h_) + 2.0 * (x.cwiseProduct(source_)).sum();
}

void EnergyProblem::smooth_gradient(const Block& x, Block& grad) const {
  laplacian(x, grad);
  grad = (2.0 / (h_ * h_)) * (grad - boundary_sum_) + 2.0 * source_;
}

double EnergyProblem::potential_value(const Block& x) const {
  double total = 0.0;
  for (Index k = 0; k < num_free(); ++k) {
    total += sublinear_potential(x.row(k).transpose(), lambda_plus_[static_cast<std::size_t>(k)],
                                 lambda_minus_[static_cast<std::size_t>(k)], params_.q);
  }
  return 2.0 * total;
}

// Exact prox of sigma * 2F at every node: the positive and negative parts
// shrink radially, each by solving rho + 2 sigma lambda rho^q = |part|.
void EnergyProblem::prox(const Block& z, double sigma, Block& out) const {
  const double q = params_.q;
  out.resize(z.rows(), z.cols());
  for (Index k = 0; k < z.rows(); ++k) {
    const double cp = 2.0 * sigma * lambda_plus_[static_cast<std::size_t>(k)];
    const double cm = 2.0 * sigma * lambda_minus_[static_cast<std::size_t>(k)];
    if (m_ == 1) {
      const double v = z(k, 0);
      out(k, 0) = v > 0.0 ? shrink_radius(v, cp, q) : -shrink_radius(-v, cm, q);
      continue;
    }
    double pos = 0.0;
    double neg = 0.0;
    for (int c = 0; c < m_; ++c) {
      const double v = z(k, c);
      (v > 0.0 ? pos : neg) += v * v;
    }
    pos = std::sqrt(pos);
    neg = std::sqrt(neg);
    const double sp = pos > 0.0 ? shrink_radius(pos, cp, q) / pos : 0.0;
    const double sn = neg > 0.0 ? shrink_radius(neg, cm, q) / neg : 0.0;
    for (int c = 0; c < m_; ++c) {
      const double v = z(k, c);
      out(k, c) = v * (v > 0.0 ? sp : sn);
    }
  }
}

double EnergyProblem::energy(const Field& u) const {
  const Block x = gather(u);
  return std::pow(h_, n_) * (smooth_value(x) + potential_value(x));
}

Field EnergyProblem::gradient(const Field& u) const {
  const Block x = gather(u);
  Block g;
  smooth_gradient(x, g);
  for (Index k = 0; k < num_free(); ++k) {
    g.row(k) += 2.0 * sublinear_force(x.row(k).transpose(), lambda_plus_[static_cast<std::size_t>(k)],
                                      lambda_minus_[static_cast<std::size_t>(k)], params_.q)
                          .transpose();
  }
  g *= std::pow(h_, n_);
  Field out = boundary_.like(m_);
  for (Index k = 0; k < num_free(); ++k) out.values().row(free_[static_cast<std::size_t>(k)]) = g.row(k);
  return out;
}

double EnergyProblem::residual(const Field& u) const {
  const Block x = gather(u);
  Block g;
  smooth_gradient(x, g);
  double worst = 0.0;
  for (Index k = 0; k < num_free(); ++k) {
    const Vector f = sublinear_force(x.row(k).transpose(), lambda_plus_[static_cast<std::size_t>(k)],
                                     lambda_minus_[static_cast<std::size_t>(k)], params_.q);
    worst = std::max(worst, (0.5 * g.row(k).transpose() + f).norm());
  }
  return worst;
}

Field EnergyProblem::harmonic_extension() const {
  const Index F = num_free();
  if (F == 0) return boundary_;
  using Sparse = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(F * (2 * n_ + 1)));
  const int deg = 2 * n_;
  for (Index k = 0; k < F; ++k) {
    trip.emplace_back(k, k, static_cast<double>(deg));
    for (int s = 0; s < deg; ++s) {
      const int j = nbr_[static_cast<std::size_t>(k * deg + s)];
      if (j >= 0) trip.emplace_back(k, j, -1.0);
    }
  }
  Sparse A(F, F);
  A.setFromTriplets(trip.begin(), trip.end());
  Block x(F, m_);
  if (n_ <= 2) {
    Eigen::SimplicialLDLT<Sparse> solver(A);
    if (solver.info() != Eigen::Success) throw SolverError("harmonic extension: factorization failed");
    for (int c = 0; c < m_; ++c) x.col(c) = solver.solve(Eigen::VectorXd(boundary_sum_.col(c)));
  } else {
    Eigen::ConjugateGradient<Sparse, Eigen::Lower | Eigen::Upper> solver(A);
    solver.setTolerance(1e-14);
    solver.setMaxIterations(static_cast<int>(std::max<Index>(1000, 20 * F)));
    for (int c = 0; c < m_; ++c) {
      x.col(c) = solver.solve(Eigen::VectorXd(boundary_sum_.col(c)));
      if (solver.info() != Eigen::Success) throw SolverError("harmonic extension: CG did not converge");
    }
  }
  if (!x.allFinite()) throw SolverError("harmonic extension produced non-finite values");
  return scatter(x);
}

Field EnergyProblem::minimize(const Field& init, const SolveConfig& cfg, SolveStats* stats) const {
  validate(cfg);
  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  st = SolveStats{};
  const double scale = std::pow(h_, n_);
  if (num_free() == 0) {
    st.converged = true;
    st.energy = 0.0;
    return boundary_;
  }
  Block x = gather(init);
  if (!x.allFinite()) throw InputError("initial guess must be finite");
  auto total = [&](const Block& v) { return smooth_value(v) + potential_value(v); };

  const double lmax = 8.0 * n_ / (h_ * h_);
  double L = 0.5 * lmax;
  double phi = total(x);
  st.energy_history.push_back(scale * phi);
  Block x_prev = x;
  Block y = x;
  Block grad;
  Block z;
  Block xn;
  Block d;
  double t = 1.0;
  bool momentum = false;
  // Progress is judged on the gradient mapping: near the minimum the energy
  // gap drops below rounding long before the residual reaches tol_grad.
  double best_gm = std::numeric_limits<double>::infinity();
  double checkpoint_gm = best_gm;
  const int window = 2000;
  const double slack = cfg.tol_energy;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    st.iterations = it;
    smooth_gradient(y, grad);
    const double sy = smooth_value(y);
    double sn = 0.0;
    for (;;) {
      z = y - grad / L;
      prox(z, 1.0 / L, xn);
      d = xn - y;
      sn = smooth_value(xn);
      const double model = sy + grad.cwiseProduct(d).sum() + 0.5 * L * d.squaredNorm();
      if (sn <= model + slack * std::abs(sy) || L >= 64.0 * lmax) break;
      L /= cfg.backtrack;
    }
    const double phin = sn + potential_value(xn);
    if (!std::isfinite(phin)) {
      st.message = "non-finite energy at iteration " + std::to_string(it);
      throw SolverError("minimize_energy: " + st.message);
    }
    st.grad_norm = 0.5 * L * d.rowwise().norm().maxCoeff();
    const bool increased = phin > phi + slack * std::abs(phi);
    if (increased && momentum) {
      // Function-value restart: drop the momentum, redo from x.
      y = x;
      t = 1.0;
      momentum = false;
      ++st.restarts;
      continue;
    }
    if (!increased) {
      // Gradient restart when the step opposes the momentum direction.
      const bool turn = momentum && (y - xn).cwiseProduct(xn - x).sum() > 0.0;
      x_prev = x;
      x = xn;
      phi = phin;
      st.energy_history.push_back(scale * phi);
      if (turn) {
        x_prev = x;
        t = 1.0;
        ++st.restarts;
      }
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    momentum = t > 1.0;
    t = t_next;

    best_gm = std::min(best_gm, st.grad_norm);
    bool stalled = increased;
    if (it % window == 0) {
      stalled = stalled || best_gm > 0.9 * checkpoint_gm;
      checkpoint_gm = best_gm;
    }
    if (st.grad_norm <= 0.5 * cfg.tol_grad || stalled) {
      const Field u = scatter(x);
      st.residual = residual(u);
      if (st.residual <= cfg.tol_grad) {
        st.converged = true;
        st.energy = scale * phi;
        return u;
      }
      if (stalled) {
        st.energy = scale * phi;
        st.message = "no progress at iteration " + std::to_string(it) + ", residual " +
                     format_number(st.residual);
        throw SolverError("minimize_energy: " + st.message);
      }
    }
  }
  const Field u = scatter(x);
  st.residual = residual(u);
  st.energy = scale * phi;
  st.message = "no convergence after " + std::to_string(cfg.max_iters) + " iterations (residual " +
               format_number(st.residual) + ")";
  throw SolverError("minimize_energy: " + st.message);
}

Field minimize_energy(const Field& boundary, const ProblemParams& params, const SolveConfig& cfg,
                      const Region& region, SolveStats* stats) {
  const EnergyProblem problem(boundary, params, region);
  Field init;
  if (cfg.random_init) {
    std::mt19937_64 rng(cfg.seed);
    const double amp = std::max(max_norm(boundary), 1e-3);
    std::uniform_real_distribution<double> dist(-amp, amp);
    init = boundary;
    for (Index i : problem.free_nodes()) {
      for (int c = 0; c < boundary.components(); ++c) init.values()(i, c) = dist(rng);
    }
  } else {
    init = problem.harmonic_extension();
  }
  return problem.minimize(init, cfg, stats);
}

Field harmonic_replacement(const Field& u, const BallSpec& ball) {
  ProblemParams params;
  params.n = u.dim();
  params.m = u.components();
  const EnergyProblem problem(u, params, Region{ball});
  return problem.harmonic_extension();
}

double discrete_dirichlet(const Field& u, const Region& region) {
  const int n = u.dim();
  double total = 0.0;
  for (Index i = 0; i < u.num_nodes(); ++i) {
    const NodeIndex k = u.node(i);
    const bool in_i = inside_region(u, i, region);
    for (int d = 0; d < n; ++d) {
      if (k[d] + 1 >= u.dims()[d]) continue;
      const Index j = i + u.stride(d);
      if (!in_i && !inside_region(u, j, region)) continue;
      total += (u.values().row(j) - u.values().row(i)).squaredNorm();
    }
  }
  return total * std::pow(u.spacing(), n - 2);
}

Field upwind_advection(const Field& u, const Field& b) {
  const int n = u.dim();
  if (!b.same_geometry(u) || b.components() != n) {
    throw InputError("drift field must have n components on the solution grid");
  }
  Field out = u.like(u.components());
  const double h = u.spacing();
  for (Index i = 0; i < u.num_nodes(); ++i) {
    const NodeIndex k = u.node(i);
    for (int d = 0; d < n; ++d) {
      const double bd = b.values()(i, d);
      if (bd == 0.0) continue;
      const Index s = u.stride(d);
      const bool fwd_ok = k[d] + 1 < u.dims()[d];
      const bool bwd_ok = k[d] > 0;
      const bool forward = (bd > 0.0 && fwd_ok) || !bwd_ok;
      if (forward) {
        out.values().row(i) += bd * (u.values().row(i + s) - u.values().row(i)) / h;
      } else {
        out.values().row(i) += bd * (u.values().row(i) - u.values().row(i - s)) / h;
      }
    }
  }
  return out;
}

Field drift_solve(const Field& boundary, const Field& b, const ProblemParams& params,
                  const SolveConfig& cfg, DriftStats* stats) {
  validate(cfg);
  if (!all_finite(b)) throw InputError("drift field must be finite");
  DriftStats local;
  DriftStats& st = stats ? *stats : local;
  st = DriftStats{};
  EnergyProblem problem(boundary, params);
  const Field zero = boundary.like(boundary.components());

  auto drift_residual = [&](const Field& u) {
    Field g = upwind_advection(u, b);
    g.values() *= -1.0;
    problem.set_source(g);
    return problem.residual(u);
  };

  // Start from the drift-free minimizer.
  SolveConfig inner = cfg;
  inner.random_init = false;
  Field u = problem.minimize(problem.harmonic_extension(), inner, nullptr);
  double res = drift_residual(u);
  st.residual_history.push_back(res);
  int growth = 0;
  for (int k = 1; k <= cfg.max_picard; ++k) {
    if (res <= cfg.tol_grad) {
      st.converged = true;
      st.residual = res;
      st.picard_iterations = k - 1;
      return u;
    }
    // drift_residual left the lagged source -b.grad u_k in place.
    inner.tol_grad = std::max(0.1 * cfg.tol_grad, 0.01 * res);
    const Field w = problem.minimize(u, inner, nullptr);
    u.values() = (1.0 - cfg.damping) * u.values() + cfg.damping * w.values();
    const double next = drift_residual(u);
    st.residual_history.push_back(next);
    growth = next > res ? growth + 1 : 0;
    res = next;
    st.picard_iterations = k;
    st.residual = res;
    if (!std::isfinite(res)) throw SolverError("drift_solve: non-finite residual");
    if (growth >= 10) {
      throw SolverError("drift_solve: Picard residual grew for 10 consecutive iterations");
    }
  }
  if (res <= cfg.tol_grad) {
    st.converged = true;
    return u;
  }
  throw SolverError("drift_solve: no convergence after " + std::to_string(cfg.max_picard) +
                    " Picard iterations (residual " + format_number(res) + ")");
}

GaugeFit verify_almost_min(const Field& u, const std::vector<BallSpec>& balls,
                           const ProblemParams& params, const SolveConfig& cfg) {
  GaugeFit out;
  std::vector<BallSpec> sorted = balls;
  std::sort(sorted.begin(), sorted.end(),
            [](const BallSpec& a, const BallSpec& b) { return a.radius < b.radius; });
  std::vector<double> fr;
  std::vector<double> fo;
  for (const BallSpec& ball : sorted) {
    out.radii.push_back(ball.radius);
    double ju = 0.0;
    double jv = 0.0;
    double omega = 0.0;
    std::string status = "ok";
    try {
      const EnergyProblem problem(u, params, Region{ball});
      SolveConfig inner = cfg;
      inner.random_init = false;
      const Field v = problem.minimize(u, inner, nullptr);
      ju = problem.energy(u);
      jv = problem.energy(v);
      if (jv < 1e-14) {
        status = "skipped";
      } else {
        omega = ju / jv - 1.0;
      }
    } catch (const Error& e) {
      status = e.what();
    }
    out.J_u.push_back(ju);
    out.J_vstar.push_back(jv);
    out.omega.push_back(omega);
    out.status.push_back(status);
    if (status == "ok" && omega > 0.0) {
      fr.push_back(ball.radius);
      fo.push_back(omega);
    }
  }
  out.fit = fit_power_law(fr, fo);
  if (out.fit.ok) {
    for (std::size_t i = 0; i < fr.size(); ++i) {
      const double dev = std::abs(std::log(fo[i]) -
                                  std::log(out.fit.constant * std::pow(fr[i], out.fit.exponent)));
      if (dev > 0.5) break;
      out.r0_empirical = fr[i];
    }
  }
  return out;
}

}  // namespace fblab
