// Acceptance suite: one PASS/FAIL line per criterion. Usage:
//   fblab_acceptance <path-to-fblab> [criterion numbers...]

#include "fblab/blowup.hpp"
#include "fblab/epiperimetric.hpp"
#include "fblab/freeboundary.hpp"
#include "fblab/halfspace.hpp"
#include "fblab/nonlinearity.hpp"
#include "fblab/parallel.hpp"
#include "fblab/solver.hpp"
#include "fblab/weiss.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

using namespace fblab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g3(double v) { return fmt("%.3g", v); }

ProblemParams params_q(double q) {
  ProblemParams p;
  p.q = q;
  return p;
}

Point pt(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

Point unit(double angle) { return pt(std::cos(angle), std::sin(angle)); }

// Half-space solution planted through the origin with normal at `angle`.
HalfSpaceSolution planted(const ProblemParams& p, double angle) {
  return make_halfspace(p, Point::Zero(2), unit(angle), Vector::Ones(1));
}

constexpr double kAngle = 0.5;

Field planted_minimizer(const ProblemParams& p, int res) {
  const Field grid = box_grid(2, -1.0, 1.0, res, 1);
  return minimize_energy(sample_halfspace(grid, planted(p, kAngle)), p, SolveConfig{});
}

double angle_deg(const Point& a, const Point& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

const std::vector<double> kFbRadii{0.25, 0.125, 0.0625};

// Free-boundary points of u whose largest analysis ball fits in the grid,
// evenly thinned to at most `count`.
std::vector<Point> sample_gamma(const Field& u, const ProblemParams& p, std::size_t count) {
  const FreeBoundarySet g = extract_gamma(u, kDefaultTauRel, p);
  std::vector<Point> inside;
  for (const Point& x : g.points) {
    try {
      check_ball(u, BallSpec{x, kFbRadii.front()});
      inside.push_back(x);
    } catch (const PreconditionError&) {
    }
  }
  std::vector<Point> out;
  const std::size_t want = std::min(count, inside.size());
  for (std::size_t k = 0; k < want; ++k) out.push_back(inside[k * inside.size() / want]);
  return out;
}

std::vector<Classification> classify_all(const Field& u, const std::vector<Point>& pts, const ProblemParams& p) {
  std::vector<Classification> out(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    try {
      out[i] = classify_regular(u, pts[i], kFbRadii, p);
    } catch (const PreconditionError& e) {
      out[i].verdict = PointClass::kNotRegular;
      out[i].note = e.what();
    }
  });
  return out;
}

// 1.
Outcome gradient_oracle() {
  const ProblemParams p;
  Field u = box_grid(2, -1.0, 1.0, 33, 1);
  std::mt19937_64 rng(2024);
  // Magnitudes in [0.5, 1.5] * 1e-2 with random signs: the potential is
  // smooth away from u = 0, where central differences are meaningful.
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  std::bernoulli_distribution sign(0.5);
  for (Index i = 0; i < u.num_nodes(); ++i) u.values()(i, 0) = (sign(rng) ? 1e-2 : -1e-2) * mag(rng);
  const EnergyProblem prob(u, p);
  const Field grad = prob.gradient(u);
  std::uniform_int_distribution<std::size_t> pick(0, prob.free_nodes().size() - 1);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Index node = prob.free_nodes()[pick(rng)];
    const double step = 1e-4 * std::abs(u.values()(node, 0));
    Field a = u;
    Field b = u;
    a.values()(node, 0) += step;
    b.values()(node, 0) -= step;
    const double fd = (prob.energy(a) - prob.energy(b)) / (2.0 * step);
    const double an = grad.values()(node, 0);
    worst = std::max(worst, std::abs(fd - an) / std::abs(an));
  }
  return {worst <= 1e-6, "max relative error " + g3(worst) + " (tol 1e-6)"};
}

// 2.
Outcome uniqueness() {
  const ProblemParams p;
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  Field bd = grid.like(1);
  for (Index i = 0; i < bd.num_nodes(); ++i) {
    const Point x = bd.position(i);
    bd.values()(i, 0) = 1e-3 * (1.0 + 0.5 * std::sin(3.0 * x[0] + 1.0) * std::cos(2.0 * x[1]));
  }
  SolveConfig a;
  a.random_init = true;
  a.seed = 101;
  SolveConfig b = a;
  b.seed = 202;
  const Field ua = minimize_energy(bd, p, a);
  const Field ub = minimize_energy(bd, p, b);
  const double rel = (ua.values() - ub.values()).norm() / ua.values().norm();
  return {rel <= 1e-6, "relative L2 difference " + g3(rel) + " (tol 1e-6)"};
}

// 3.
Outcome halfspace_exactness() {
  const ProblemParams p;
  const double kappa = p.kappa();
  const double beta = halfspace_beta(p, Point::Zero(2));
  const double oracle = 1.0 / 144.0;
  std::vector<double> res;
  for (int n : {65, 129, 257}) {
    const Field grid = box_grid(2, -1.0, 1.0, n, 1);
    const HalfSpaceSolution hs = planted(p, kAngle);
    const Field h = sample_halfspace(grid, hs);
    const double band = 2.0 * grid.spacing();
    double worst = 0.0;
    for (Index i = 0; i < h.num_nodes(); ++i) {
      if (h.on_boundary(i)) continue;
      if (std::abs((h.position(i) - hs.x0).dot(hs.nu)) <= band) continue;
      const Vector r = node_laplacian(h, i) - eval_f(h.position(i), h.value(i), p);
      worst = std::max(worst, r.norm());
    }
    res.push_back(worst);
  }
  const double r1 = res[0] / res[1];
  const double r2 = res[1] / res[2];
  const bool ok = std::abs(beta - oracle) <= 1e-15 && std::abs(kappa - 4.0) < 1e-15 && r1 >= 2.0 && r2 >= 2.0;
  return {ok, "beta " + fmt("%.15g", beta) + "; residuals " + g3(res[0]) + ", " + g3(res[1]) + ", " +
                  g3(res[2]) + "; ratios " + g3(r1) + ", " + g3(r2) + " (need >= 2)"};
}

// 4. at exponent q.
Outcome dirichlet_recovery(double q, std::vector<int> grids = {65, 129, 257}) {
  const ProblemParams p = params_q(q);
  std::vector<double> err;
  for (int n : grids) {
    const Field u = planted_minimizer(p, n);
    const Field h = sample_halfspace(u, planted(p, kAngle));
    err.push_back((u.values() - h.values()).cwiseAbs().maxCoeff());
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < err.size(); ++k) decreasing = decreasing && err[k] < err[k - 1];
  const double at129 = err[1];
  std::string d = "Linf error";
  for (std::size_t k = 0; k < err.size(); ++k) d += " " + std::to_string(grids[k]) + ":" + g3(err[k]);
  return {at129 <= 5e-3 && decreasing, d + " (tol 5e-3 at 129, decreasing)"};
}

// 5. at exponent q.
Outcome weiss_monotonicity(double q) {
  const ProblemParams p = params_q(q);
  const Field u = planted_minimizer(p, 129);
  // Interface point nearest the planted base point.
  const FreeBoundarySet g = extract_gamma(u, kDefaultTauRel, p);
  if (g.points.empty()) return {false, "no interface extracted"};
  Point x0 = g.points.front();
  for (const Point& x : g.points) if (x.norm() < x0.norm()) x0 = x;
  const std::vector<double> radii{0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4};
  const WeissTrace tr = monotonicity_check(u, x0, x0, radii, p, WeissParams::from(p));
  double margin = 1e300;
  for (std::size_t k = 0; k < tr.quotient.size(); ++k) margin = std::min(margin, tr.quotient[k] + tr.eps_mono[k]);

  const Field exact = sample_halfspace(box_grid(2, -1.0, 1.0, 129, 1), planted(p, kAngle));
  const WeissEnergy we(exact, p);
  std::vector<double> w0;
  for (double t : {0.15, 0.3, 0.45}) w0.push_back(we.W0(Point::Zero(2), Point::Zero(2), t));
  const double mean = (w0[0] + w0[1] + w0[2]) / 3.0;
  double var = 0.0;
  for (double w : w0) var = std::max(var, std::abs(w - mean) / std::abs(mean));
  const bool ok = tr.pass && margin >= 0.0 && var <= 1e-3;
  return {ok, "x0 (" + g3(x0[0]) + ", " + g3(x0[1]) + "), min(quotient + eps_mono) " + g3(margin) +
                  "; W0 relative variation " + g3(var) + " (tol 1e-3)"};
}

struct RegularSet {
  Field u;
  std::vector<Point> points;
  std::vector<Classification> classes;
  int regular = 0;
};

RegularSet regular_points(double q) {
  const ProblemParams p = params_q(q);
  RegularSet s;
  s.u = planted_minimizer(p, 129);
  s.points = sample_gamma(s.u, p, 12);
  s.classes = classify_all(s.u, s.points, p);
  for (const auto& c : s.classes) s.regular += c.verdict == PointClass::kRegular;
  return s;
}

// 6.
Outcome optimal_growth(double q, const RegularSet& s) {
  const ProblemParams p = params_q(q);
  const double kappa = p.kappa();
  const double energy_target = 2.0 + 2.0 * kappa - 2.0;
  double sup_dev = 0.0;
  double energy_dev = 0.0;
  for (const auto& c : s.classes) {
    if (c.verdict != PointClass::kRegular) continue;
    sup_dev = std::max(sup_dev, std::abs(c.sup_slope - kappa));
    energy_dev = std::max(energy_dev, std::abs(c.energy_slope - energy_target));
  }
  const bool ok = s.regular > 0 && sup_dev <= 0.15 && energy_dev <= 0.3;
  return {ok, std::to_string(s.regular) + "/" + std::to_string(s.points.size()) +
                  " regular; max |sup slope - kappa| " + g3(sup_dev) + " (tol 0.15), max |energy slope - " +
                  g3(energy_target) + "| " + g3(energy_dev) + " (tol 0.3)"};
}

// 7.
Outcome nondegeneracy(double q, const RegularSet& s) {
  const ProblemParams p = params_q(q);
  const double beta = halfspace_beta(p, Point::Zero(2));
  double c0_ratio = 1e300;
  double eps_margin = 1e300;
  int checked = 0;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    if (s.classes[i].verdict != PointClass::kRegular) continue;
    const NondegeneracyResult nd = nondegeneracy_check(s.u, s.points[i], kFbRadii, p);
    c0_ratio = std::min(c0_ratio, nd.c0_hat / beta);
    eps_margin = std::min(eps_margin, nd.eps0_floor > 0.0 ? nd.eps0_hat / nd.eps0_floor : 1e300);
    ++checked;
  }
  const bool ok = checked > 0 && c0_ratio >= 0.5 && eps_margin >= 10.0;
  return {ok, std::to_string(checked) + " regular points; min c0/beta " + g3(c0_ratio) +
                  " (need >= 0.5); min eps0/floor " + g3(eps_margin) + " (need >= 10)"};
}

// 8.
Outcome blowup_regular_set() {
  const ProblemParams p;
  std::ostringstream d;
  // Planted normal.
  const Field planted_u = planted_minimizer(p, 129);
  const BlowupResult b = blowup_limit(planted_u, Point::Zero(2), {0.4, 0.2, 0.1, 0.0625}, p);
  const double err = angle_deg(b.fit.nu, unit(kAngle));
  d << "planted nu error " << g3(err) << " deg";

  // Curved interface: constant boundary data on the square.
  const Field grid = box_grid(2, -1.0, 1.0, 257, 1);
  Field bd = grid.like(1);
  bd.values().setConstant(9e-4);
  const Field u = minimize_energy(bd, p, SolveConfig{});
  const std::vector<Point> pts = sample_gamma(u, p, 24);
  const std::vector<Classification> cls = classify_all(u, pts, p);

  // Cauchy differences over a 4-term radius sequence at each regular point.
  // The test point is the regular one with the largest leading difference,
  // where the continuum convergence dominates the discretization floor.
  const std::vector<double> radii{0.4, 0.2, 0.1, 0.05};
  int regular = 0;
  int monotone = 0;
  double lead = -1.0;
  std::vector<double> best;
  Point best_x;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (cls[i].verdict != PointClass::kRegular) continue;
    ++regular;
    try {
      const BlowupResult r = blowup_limit(u, pts[i], radii, p);
      bool mono = true;
      for (std::size_t k = 1; k < r.cauchy.size(); ++k) mono = mono && r.cauchy[k] < r.cauchy[k - 1];
      monotone += mono;
      if (r.cauchy.front() > lead) {
        lead = r.cauchy.front();
        best = r.cauchy;
        best_x = pts[i];
      }
    } catch (const PreconditionError&) {
    }
  }
  bool cauchy_ok = best.size() == 3;
  for (std::size_t k = 1; k < best.size(); ++k) cauchy_ok = cauchy_ok && best[k] < best[k - 1];
  d << "; curved: " << regular << "/" << pts.size() << " regular, Cauchy monotone at " << monotone
    << "; at (" << g3(best_x.size() ? best_x[0] : 0) << ", " << g3(best_x.size() ? best_x[1] : 0) << ")";
  for (double c : best) d << " " << g3(c);

  bool normal_ok = false;
  try {
    const NormalFit nf = fit_normals(u, pts, cls);
    double lip = 0.0;
    for (std::size_t k = 0; k < nf.pair_distance.size(); ++k) {
      lip = std::max(lip, nf.pair_difference[k] / nf.pair_distance[k]);
    }
    normal_ok = std::isfinite(lip) && nf.fit.ok && nf.fit.exponent > 0.0;
    d << "; normal Lipschitz " << g3(lip) << ", Holder exponent " << g3(nf.fit.exponent);
  } catch (const Error& e) {
    d << "; normal fit failed: " << e.what();
  }

  bool graph_ok = false;
  int pick = -1;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (cls[i].verdict != PointClass::kRegular) continue;
    const double dy = std::abs(pts[i][1]);
    if (pick < 0 || dy < std::abs(pts[static_cast<std::size_t>(pick)][1])) pick = static_cast<int>(i);
  }
  if (pick >= 0) {
    try {
      GraphOptions go;
      go.radii = kFbRadii;
      const GraphFit gf = graph_fit(u, pts[static_cast<std::size_t>(pick)], 0.5, p, go);
      graph_ok = gf.lipschitz < 2.0;
      d << "; graph Lipschitz " << g3(gf.lipschitz) << " (need < 2)";
    } catch (const Error& e) {
      d << "; graph fit failed: " << e.what();
    }
  }
  return {err <= 2.0 && cauchy_ok && normal_ok && graph_ok, d.str()};
}

// 9.
Outcome epiperimetric() {
  const ProblemParams p;
  struct Job {
    EpiMode mode;
    double eps;
  };
  std::vector<Job> jobs;
  for (EpiMode m : {EpiMode::kPerturbed, EpiMode::kScaled}) {
    for (double e : {0.02, 0.05, 0.1, 0.2}) jobs.push_back({m, e});
  }
  std::vector<EpiReport> reps(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    reps[i] = epi_run(jobs[i].mode, jobs[i].eps, 1, p, Point::Zero(2), SolveConfig{});
  });
  bool ok = true;
  double eta_min = 1e300;
  int counted = 0;
  std::ostringstream d;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const EpiReport& r = reps[i];
    ok = ok && r.M_vstar <= r.M_c;
    if (r.verdict != "DEGENERATE") {
      ok = ok && r.eta_defined && r.eta_star >= 0.01;
      eta_min = std::min(eta_min, r.eta_star);
      ++counted;
    }
    d << to_string(jobs[i].mode) << "/" << jobs[i].eps << ":" << r.verdict;
    if (r.eta_defined) d << "(" << g3(r.eta_star) << ")";
    d << " ";
  }
  return {ok && counted > 0, d.str() + "; min eta* " + g3(eta_min) + " over " + std::to_string(counted) +
                                 " non-degenerate cases (need >= 0.01)"};
}

// 10.
Outcome gauge() {
  const ProblemParams p;
  const double exponent_nominal = 1.0 - 2.0 / 10.0;
  const Field grid = box_grid(2, -1.0, 1.0, 129, 1);
  Field bd = grid.like(1);
  bd.values().setConstant(9e-4);
  Field b = grid.like(2);
  for (Index i = 0; i < b.num_nodes(); ++i) b.set_value(i, pt(0.5, 0.3));
  const Field u = drift_solve(bd, b, p, SolveConfig{});
  std::vector<BallSpec> balls;
  for (double r : {0.05, 0.07, 0.1, 0.14, 0.2, 0.28, 0.4, 0.5}) balls.push_back({pt(0.45, 0.0), r});
  const GaugeFit gf = verify_almost_min(u, balls, p, SolveConfig{});
  // Monotone decrease toward r = 0, each step allowed the fit's rms log residual.
  bool mono = gf.fit.ok;
  for (std::size_t k = 1; k < gf.omega.size(); ++k) {
    mono = mono && gf.omega[k - 1] > 0.0 && std::log(gf.omega[k - 1]) <= std::log(gf.omega[k]) + gf.fit.residual;
  }
  const bool ok = gf.fit.ok && gf.fit.exponent >= 0.6 && mono;
  std::ostringstream d;
  d << "fitted exponent " << g3(gf.fit.exponent) << " (nominal " << exponent_nominal << ", need >= 0.6), omega";
  for (double w : gf.omega) d << " " << g3(w);
  return {ok, d.str()};
}

// 12.
Outcome determinism(const std::string& tool) {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / ("fblab_acceptance_" + std::to_string(::getpid()));
  std::string bytes[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path dir = base / std::to_string(k);
    const std::string cmd = "\"" + tool + "\" verify --seed 7 --threads 1 --out \"" + dir.string() + "\" > /dev/null";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) return {false, "fblab verify exited with status " + std::to_string(rc)};
    std::ifstream in(dir / "verify.json", std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    bytes[k] = ss.str();
  }
  fs::remove_all(base);
  const bool ok = !bytes[0].empty() && bytes[0] == bytes[1];
  return {ok, std::to_string(bytes[0].size()) + " bytes, " + (ok ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: fblab_acceptance <path-to-fblab> [criteria...]\n";
    return 2;
  }
  const std::string tool = argv[1];
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));
  if (const char* env = std::getenv("FBLAB_THREADS")) set_thread_count(std::max(1, std::atoi(env)));

  int failed = 0;
  auto run = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    if (!only.empty() && !only.count(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  run(1, "gradient oracle", gradient_oracle);
  run(2, "uniqueness", uniqueness);
  run(3, "half-space exactness", halfspace_exactness);
  run(4, "Dirichlet recovery", [] { return dirichlet_recovery(0.5); });
  run(5, "Weiss monotonicity", [] { return weiss_monotonicity(0.5); });
  if (only.empty() || only.count(6) || only.count(7)) {
    const RegularSet s = regular_points(0.5);
    run(6, "optimal growth", [&] { return optimal_growth(0.5, s); });
    run(7, "nondegeneracy", [&] { return nondegeneracy(0.5, s); });
  }
  run(8, "blowup and regular set", blowup_regular_set);
  run(9, "epiperimetric", epiperimetric);
  run(10, "gauge exponent", gauge);
  run(11, "non-integer kappa (q = 0.2)", [] {
    const double q = 0.2;
    const Outcome a = dirichlet_recovery(q);
    const Outcome b = weiss_monotonicity(q);
    const RegularSet s = regular_points(q);
    const Outcome c = optimal_growth(q, s);
    const Outcome d = nondegeneracy(q, s);
    return Outcome{a.pass && b.pass && c.pass && d.pass,
                   std::string("4:") + (a.pass ? "ok" : "FAIL") + " " + a.detail + " | 5:" + (b.pass ? "ok" : "FAIL") +
                       " " + b.detail + " | 6:" + (c.pass ? "ok" : "FAIL") + " " + c.detail + " | 7:" +
                       (d.pass ? "ok" : "FAIL") + " " + d.detail};
  });
  run(12, "determinism", [&] { return determinism(tool); });
  return failed == 0 ? 0 : 1;
}
