#include "fblab/commands.hpp"

#include "fblab/blowup.hpp"
#include "fblab/epiperimetric.hpp"
#include "fblab/errors.hpp"
#include "fblab/field_io.hpp"
#include "fblab/freeboundary.hpp"
#include "fblab/halfspace.hpp"
#include "fblab/parallel.hpp"
#include "fblab/report.hpp"
#include "fblab/solver.hpp"
#include "fblab/version.hpp"
#include "fblab/weiss.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>

namespace fblab {

using nlohmann::json;

namespace {

std::filesystem::path out_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + cfg.out + "': " + ec.message());
  return dir;
}

// JSON numbers must be finite; non-finite values become null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

json fit_json(const FitResult& f) {
  return json{{"exponent", num(f.exponent)}, {"constant", num(f.constant)},
              {"residual", num(f.residual)}, {"ok", f.ok},
              {"note", f.note},           {"samples", f.radii.size()}};
}

json versions() {
  return json{{"fblab", kVersion},
              {"format", kFieldFormat},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                            "." + std::to_string(EIGEN_MINOR_VERSION)}};
}

json config_json(const ExperimentConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : config_entries(cfg)) j[k] = v;
  // Reports do not record where they were written.
  j.erase("out");
  return j;
}

json grid_json(const Field& u) {
  json dims = json::array();
  for (int d = 0; d < u.dim(); ++d) dims.push_back(u.dims()[d]);
  return json{{"n", u.dim()},
              {"m", u.components()},
              {"dims", dims},
              {"origin", vec(Eigen::VectorXd(u.lower()))},
              {"spacing", num(u.spacing())}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_file_atomic(path.string(), j.dump(2) + "\n");
}

SolveConfig solver_config(const ExperimentConfig& cfg) {
  SolveConfig s = cfg.solver;
  s.seed = cfg.seed;
  return s;
}

Field boundary_data(const ExperimentConfig& cfg, const ProblemParams& params, const Field& grid) {
  if (cfg.boundary == "halfspace") {
    return sample_halfspace(grid, make_halfspace(params, to_point(cfg.x0), to_point(cfg.nu),
                                                 to_vector(cfg.e)));
  }
  Field out = grid.like(cfg.m);
  if (cfg.boundary == "constant") {
    const Vector value = cfg.boundary_value * to_vector(cfg.e).normalized();
    for (Index i = 0; i < out.num_nodes(); ++i) out.set_value(i, value);
  }
  return out;
}

json solve_stats_json(const SolveStats& s) {
  return json{{"iterations", s.iterations}, {"restarts", s.restarts},   {"converged", s.converged},
              {"energy", num(s.energy)},    {"residual", num(s.residual)}, {"message", s.message}};
}

// Exit code of the first recorded failure.
struct Outcome {
  int code = 0;
  std::vector<std::string> messages;
  void fail(const Error& e) {
    if (code == 0) code = static_cast<int>(e.code());
    messages.push_back(e.what());
  }
};

Field read_analysis_field(const std::string& path, const ExperimentConfig& cfg) {
  Field u = read_field_file(path);
  if (u.dim() != cfg.n || u.components() != cfg.m) {
    throw InputError("field '" + path + "' has n = " + std::to_string(u.dim()) + ", m = " +
                     std::to_string(u.components()) + " but the config says n = " +
                     std::to_string(cfg.n) + ", m = " + std::to_string(cfg.m));
  }
  return u;
}

std::string status_of(const std::exception& e) { return std::string("precondition: ") + e.what(); }

// Radii whose ball at x0 passes the quadrature preconditions; the others get
// a status message.
std::vector<double> admissible_radii(const Field& u, const Point& x0, const std::vector<double>& radii,
                                     std::map<double, std::string>& rejected) {
  std::vector<double> out;
  for (double r : radii) {
    try {
      check_ball(u, BallSpec{x0, r});
      out.push_back(r);
    } catch (const PreconditionError& e) {
      rejected[r] = status_of(e);
    }
  }
  return out;
}

void analyze_weiss(const Field& u, const ExperimentConfig& cfg, const ProblemParams& params,
                   const std::filesystem::path& dir, json& report, Outcome& outcome) {
  const Point c = to_point(cfg.center);
  std::vector<double> radii = cfg.weiss_radii;
  std::sort(radii.begin(), radii.end());
  std::map<double, std::string> rejected;
  const std::vector<double> ok = admissible_radii(u, c, radii, rejected);
  const WeissParams wp = WeissParams::from(params);
  WeissTrace trace;
  const WeissEnergy energy(u, params);
  CsvTable csv({"t", "W", "W0", "R_lower", "dW_dt_quotient", "eps_mono", "status"});
  if (ok.size() >= 2) {
    try {
      trace = monotonicity_check(u, c, c, ok, params, wp);
    } catch (const Error& e) {
      outcome.fail(e);
    }
  } else {
    outcome.fail(PreconditionError("weiss: fewer than two admissible radii"));
  }
  std::size_t k = 0;
  for (double t : radii) {
    if (rejected.count(t)) {
      csv.add_row({t, 0.0, 0.0, 0.0, 0.0, 0.0, rejected[t]});
      continue;
    }
    if (trace.t.empty()) {
      csv.add_row({t, 0.0, 0.0, 0.0, 0.0, 0.0, std::string("not evaluated")});
      continue;
    }
    const double w0 = energy.W0(c, c, t);
    const bool first = k == 0;
    csv.add_row({t, trace.W[k], w0, trace.R[k], first ? 0.0 : trace.quotient[k - 1],
                 first ? 0.0 : trace.eps_mono[k - 1],
                 std::string(first ? "no-interval"
                                   : (trace.quotient[k - 1] >= -trace.eps_mono[k - 1] ? "ok"
                                                                                       : "decrease"))});
    ++k;
  }
  if (!rejected.empty()) {
    for (const auto& [r, msg] : rejected) outcome.messages.push_back(msg);
    if (outcome.code == 0) outcome.code = static_cast<int>(ExitCode::kAnalysisPrecondition);
  }
  write_file_atomic((dir / "weiss.csv").string(), csv.str());
  report["monotone"] = trace.pass;
  report["dominates_R"] = trace.dominates_R;
  report["R_margin"] = num(trace.R_margin);
  report["empirical_t0"] = num(trace.empirical_t0);
  report["weiss_constants"] = json{{"a", num(wp.a)}, {"b", num(wp.b)}, {"t0", num(wp.t0)}};
  if (ok.size() >= 3) {
    try {
      const DecayFit decay = weiss_decay_fit(u, c, ok, params, wp);
      report["decay"] = json{{"fit", fit_json(decay.fit)},
                             {"W_limit", num(decay.W_limit)},
                             {"degenerate", decay.degenerate},
                             {"accepted", decay.accepted},
                             {"note", decay.note}};
    } catch (const Error& e) {
      outcome.fail(e);
    }
  }
  if (cfg.svg) {
    std::vector<double> w0;
    for (double t : trace.t) w0.push_back(energy.W0(c, c, t));
    write_file_atomic((dir / "weiss.svg").string(),
                      loglog_svg("Weiss energy", "t", "W", {{"W", trace.t, trace.W}, {"W0", trace.t, w0}}));
  }
}

void analyze_blowup(const Field& u, const ExperimentConfig& cfg, const ProblemParams& params,
                    const std::filesystem::path& dir, json& report, Outcome& outcome) {
  const Point c = to_point(cfg.center);
  std::vector<double> radii = cfg.blowup_radii;
  std::sort(radii.begin(), radii.end(), std::greater<>());
  std::map<double, std::string> rejected;
  const std::vector<double> ok = admissible_radii(u, c, radii, rejected);
  BlowupOptions opts;
  opts.out_resolution = cfg.blowup_resolution;
  opts.eps_reg_fraction = cfg.eps_reg;
  BlowupResult res;
  bool have = false;
  if (ok.size() >= 2) {
    try {
      res = blowup_limit(u, c, ok, params, opts);
      have = true;
    } catch (const Error& e) {
      outcome.fail(e);
    }
  } else {
    outcome.fail(PreconditionError("blowup: fewer than two admissible radii"));
  }
  std::vector<std::string> header{"r", "cauchy_diff", "dist_H"};
  for (int d = 0; d < cfg.n; ++d) header.push_back("nu" + std::to_string(d + 1));
  for (int j = 0; j < cfg.m; ++j) header.push_back("e" + std::to_string(j + 1));
  header.push_back("status");
  CsvTable csv(header);
  std::size_t k = 0;
  for (double r : radii) {
    std::vector<CsvCell> row{r};
    if (rejected.count(r) || !have) {
      row.push_back(0.0);
      row.push_back(0.0);
      for (int d = 0; d < cfg.n + cfg.m; ++d) row.push_back(0.0);
      row.push_back(rejected.count(r) ? rejected[r] : std::string("not evaluated"));
      csv.add_row(row);
      continue;
    }
    const HFit& f = res.fits[k];
    row.push_back(k == 0 ? 0.0 : res.cauchy[k - 1]);
    row.push_back(f.distance);
    for (int d = 0; d < cfg.n; ++d) row.push_back(f.nu[d]);
    for (int j = 0; j < cfg.m; ++j) row.push_back(f.e[j]);
    row.push_back(std::string(k == 0 ? "first" : "ok"));
    csv.add_row(row);
    ++k;
  }
  if (!rejected.empty() && outcome.code == 0) outcome.code = static_cast<int>(ExitCode::kAnalysisPrecondition);
  for (const auto& [r, msg] : rejected) outcome.messages.push_back(msg);
  write_file_atomic((dir / "blowup.csv").string(), csv.str());
  if (have) {
    report["verdict"] = to_string(res.verdict);
    report["eps_reg"] = num(res.eps_reg);
    report["distance"] = num(res.fit.distance);
    report["nu"] = vec(Eigen::VectorXd(res.fit.nu));
    report["e"] = vec(Eigen::VectorXd(res.fit.e));
    report["interp_error"] = num(res.interp_error);
    report["note"] = res.note;
  }
  report["observed_domain"] =
      "rescalings are compared on the closed unit ball only; convergence on compact subsets of "
      "R^n is not observed";
  if (cfg.svg && have) {
    std::vector<double> rr(res.radii.begin() + 1, res.radii.end());
    std::vector<double> dist;
    for (const HFit& f : res.fits) dist.push_back(f.distance);
    write_file_atomic((dir / "blowup.svg").string(),
                      loglog_svg("Blowup diagnostics", "r", "sup difference / distance",
                                 {{"cauchy_diff", rr, res.cauchy}, {"dist_H", res.radii, dist}}));
  }
}

void analyze_fb(const Field& u, const ExperimentConfig& cfg, const ProblemParams& params,
                const std::filesystem::path& dir, json& report, Outcome& outcome) {
  const FreeBoundarySet gamma = extract_gamma(u, cfg.tau_rel, params);
  report["tau"] = num(gamma.tau);
  report["extracted_points"] = gamma.points.size();
  report["components"] = gamma.components;
  report["gamma_note"] = gamma.note;
  // Points whose largest analysis ball fits in the grid.
  const double r_max = *std::max_element(cfg.fb_radii.begin(), cfg.fb_radii.end());
  std::vector<Point> candidates;
  for (const Point& p : gamma.points) {
    try {
      check_ball(u, BallSpec{p, r_max});
      candidates.push_back(p);
    } catch (const PreconditionError&) {
    }
  }
  std::vector<Point> points;
  const std::size_t want = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(cfg.fb_max_points));
  for (std::size_t k = 0; k < want; ++k) points.push_back(candidates[k * candidates.size() / want]);
  report["classified_points"] = points.size();

  ClassifyOptions copts;
  copts.blowup.out_resolution = cfg.blowup_resolution;
  copts.blowup.eps_reg_fraction = cfg.eps_reg;
  copts.slope_band = cfg.slope_band;
  std::vector<Classification> classes(points.size());
  std::vector<std::string> status(points.size(), "ok");
  parallel_for(points.size(), [&](std::size_t i) {
    try {
      classes[i] = classify_regular(u, points[i], cfg.fb_radii, params, copts);
      status[i] = to_string(classes[i].verdict);
    } catch (const PreconditionError& e) {
      classes[i].verdict = PointClass::kNotRegular;
      classes[i].note = e.what();
      status[i] = status_of(e);
    }
  });

  std::vector<std::string> header;
  for (int d = 0; d < cfg.n; ++d) header.push_back("x" + std::to_string(d + 1));
  header.push_back("regular");
  for (int d = 0; d < cfg.n; ++d) header.push_back("nu" + std::to_string(d + 1));
  for (int j = 0; j < cfg.m; ++j) header.push_back("e" + std::to_string(j + 1));
  header.insert(header.end(), {"c0_hat", "sup_slope", "status"});
  CsvTable csv(header);
  int regular = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Classification& c = classes[i];
    const bool reg = c.verdict == PointClass::kRegular;
    regular += reg;
    std::vector<CsvCell> row;
    for (int d = 0; d < cfg.n; ++d) row.push_back(points[i][d]);
    row.push_back(static_cast<long long>(reg));
    for (int d = 0; d < cfg.n; ++d) row.push_back(c.fit.nu.size() ? c.fit.nu[d] : 0.0);
    for (int j = 0; j < cfg.m; ++j) row.push_back(c.fit.e.size() ? c.fit.e[j] : 0.0);
    row.push_back(std::isfinite(c.c0_hat) ? c.c0_hat : 0.0);
    row.push_back(c.sup_slope);
    row.push_back(status[i]);
    csv.add_row(row);
  }
  write_file_atomic((dir / "fb.csv").string(), csv.str());
  report["regular_points"] = regular;
  report["gamma_kappa_proxy"] =
      "membership is tested by the fitted growth exponent within slope_band of kappa; the band "
      "cannot distinguish point-dependent constants from uniform ones";

  NormalFitOptions nopts;
  nopts.classify = copts;
  NormalFit normals;
  bool have_normals = false;
  try {
    normals = fit_normals(u, points, classes, nopts);
    have_normals = true;
    report["normal_fit"] = json{{"holder", fit_json(normals.fit)},
                                {"pairs", normals.pair_distance.size()},
                                {"band", vec(std::vector<double>{normals.band_min, normals.band_max})},
                                {"constant_normal", normals.constant_normal},
                                {"note", normals.note}};
  } catch (const Error& e) {
    outcome.fail(e);
    report["normal_fit"] = json{{"status", e.what()}};
  }

  // Graph of the interface around the regular point nearest the center.
  const Point center = to_point(cfg.center);
  int best = -1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (classes[i].verdict != PointClass::kRegular) continue;
    if (best < 0 || (points[i] - center).norm() < (points[static_cast<std::size_t>(best)] - center).norm()) {
      best = static_cast<int>(i);
    }
  }
  std::vector<std::string> gheader;
  for (int d = 0; d + 1 < cfg.n; ++d) gheader.push_back("xt" + std::to_string(d + 1));
  gheader.push_back("g");
  CsvTable gcsv(gheader);
  if (best >= 0) {
    GraphOptions gopts;
    gopts.tau_rel = cfg.tau_rel;
    gopts.classify = copts;
    gopts.radii = cfg.fb_radii;
    try {
      const GraphFit g = graph_fit(u, points[static_cast<std::size_t>(best)], cfg.graph_window, params, gopts);
      for (std::size_t i = 0; i < g.g.size(); ++i) {
        std::vector<CsvCell> row;
        for (int d = 0; d + 1 < cfg.n; ++d) row.push_back(g.x_tangent[i][d]);
        row.push_back(g.g[i]);
        gcsv.add_row(row);
      }
      report["graph"] = json{{"x0", vec(Eigen::VectorXd(g.x0))},
                             {"nu", vec(Eigen::VectorXd(g.nu))},
                             {"lipschitz", num(g.lipschitz)},
                             {"gradient_holder", fit_json(g.gradient_holder)},
                             {"constant_gradient", g.constant_gradient},
                             {"note", g.note}};
    } catch (const Error& e) {
      outcome.fail(e);
      report["graph"] = json{{"status", e.what()}};
    }
  } else {
    report["graph"] = json{{"status", "no regular point"}};
  }
  write_file_atomic((dir / "graph.csv").string(), gcsv.str());
  if (cfg.svg) {
    std::vector<Series> series;
    if (have_normals) series.push_back({"|nu_i - nu_j|", normals.pair_distance, normals.pair_difference});
    write_file_atomic((dir / "fb.svg").string(),
                      loglog_svg("Normal field regularity", "|x_i - x_j|", "|nu_i - nu_j|", series));
  }
}

void analyze_epi(const ExperimentConfig& cfg, const ProblemParams& params,
                 const std::filesystem::path& dir, json& report, Outcome& outcome) {
  struct Job {
    EpiMode mode;
    double eps;
  };
  std::vector<Job> jobs;
  for (const std::string& m : cfg.epi_modes) {
    for (double e : cfg.epi_eps) jobs.push_back({parse_epi_mode(m), e});
  }
  const Point x0 = to_point(cfg.center);
  EpiOptions eopts;
  eopts.eta_min = cfg.eta_min;
  eopts.delta_probe_fraction = cfg.delta_probe;
  HomogeneousOptions hopts;
  hopts.resolution = cfg.epi_resolution;
  hopts.nu = to_point(cfg.nu);
  std::vector<EpiReport> reps(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::vector<int> codes(jobs.size(), 0);
  parallel_for(jobs.size(), [&](std::size_t i) {
    try {
      reps[i] = epi_run(jobs[i].mode, jobs[i].eps, cfg.seed, params, x0, solver_config(cfg), eopts, hopts);
    } catch (const Error& e) {
      errors[i] = e.what();
      codes[i] = static_cast<int>(e.code());
    }
  });
  CsvTable csv({"mode", "eps", "dist_W12", "M_c", "M_vstar", "B", "eta_star", "verdict"});
  double eta_min = std::numeric_limits<double>::infinity();
  bool pass = true;
  json rows = json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const EpiReport& r = reps[i];
    if (codes[i]) {
      if (outcome.code == 0) outcome.code = codes[i];
      outcome.messages.push_back(errors[i]);
      csv.add_row({std::string(to_string(jobs[i].mode)), jobs[i].eps, 0.0, 0.0, 0.0, 0.0, 0.0,
                   "ERROR: " + errors[i]});
      pass = false;
      continue;
    }
    csv.add_row({std::string(to_string(jobs[i].mode)), jobs[i].eps, r.dist_w12, r.M_c, r.M_vstar, r.B,
                 r.eta_star, r.verdict});
    if (r.eta_defined && r.verdict != "OUTSIDE-DELTA") eta_min = std::min(eta_min, r.eta_star);
    if (r.verdict == "FAIL" || r.M_vstar > r.M_c + r.floor) pass = false;
    rows.push_back(json{{"mode", to_string(jobs[i].mode)},
                        {"eps", num(jobs[i].eps)},
                        {"M_vstar_quadrature", num(r.M_vstar_quadrature)},
                        {"floor", num(r.floor)},
                        {"B_discrete", num(r.B_discrete)},
                        {"solver_iterations", r.solver.iterations},
                        {"note", r.note}});
  }
  write_file_atomic((dir / "epi.csv").string(), csv.str());
  report["pass"] = pass;
  report["eta_empirical"] = std::isfinite(eta_min) ? json(eta_min) : json(nullptr);
  report["delta_probe"] = num(cfg.delta_probe * halfspace_w12_norm(x0, params));
  report["runs"] = rows;
  report["constants_note"] =
      "eta and delta are sampled empirically over the listed families and do not bound the true "
      "constants";
  if (cfg.svg) {
    std::vector<Series> series;
    for (const std::string& m : cfg.epi_modes) {
      Series s{"mode " + m, {}, {}};
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (to_string(jobs[i].mode) == m && reps[i].eta_defined) {
          s.x.push_back(jobs[i].eps);
          s.y.push_back(reps[i].eta_star);
        }
      }
      series.push_back(s);
    }
    write_file_atomic((dir / "epi.svg").string(), loglog_svg("Epiperimetric eta", "eps", "eta*", series));
  }
}

void analyze_gauge(const Field& u, const ExperimentConfig& cfg, const ProblemParams& params,
                   const std::filesystem::path& dir, json& report, Outcome& outcome) {
  const Point c = to_point(cfg.center);
  std::vector<double> radii = cfg.gauge_radii;
  std::sort(radii.begin(), radii.end());
  std::map<double, std::string> rejected;
  const std::vector<double> ok = admissible_radii(u, c, radii, rejected);
  std::vector<BallSpec> balls;
  for (double r : ok) balls.push_back(BallSpec{c, r});
  GaugeFit fit;
  try {
    fit = verify_almost_min(u, balls, params, solver_config(cfg));
  } catch (const Error& e) {
    outcome.fail(e);
  }
  CsvTable csv({"r", "J_u", "J_vstar", "omega_meas", "status"});
  std::size_t k = 0;
  for (double r : radii) {
    if (rejected.count(r)) {
      csv.add_row({r, 0.0, 0.0, 0.0, rejected[r]});
      continue;
    }
    if (k >= fit.radii.size()) {
      csv.add_row({r, 0.0, 0.0, 0.0, std::string("not evaluated")});
      continue;
    }
    csv.add_row({r, fit.J_u[k], fit.J_vstar[k], fit.omega[k], fit.status[k]});
    ++k;
  }
  if (!rejected.empty() && outcome.code == 0) outcome.code = static_cast<int>(ExitCode::kAnalysisPrecondition);
  for (const auto& [r, msg] : rejected) outcome.messages.push_back(msg);
  write_file_atomic((dir / "gauge.csv").string(), csv.str());
  report["fit"] = fit_json(fit.fit);
  report["predicted_exponent"] = num(1.0 - cfg.n / cfg.gauge_p);
  report["r0_empirical"] = num(fit.r0_empirical);
  if (cfg.svg) {
    write_file_atomic((dir / "gauge.svg").string(),
                      loglog_svg("Almost-minimality gauge", "r", "omega", {{"omega_meas", fit.radii, fit.omega}}));
  }
}

}  // namespace

int cmd_generate(const std::string& kind, const ExperimentConfig& cfg) {
  if (kind != "halfspace" && kind != "minimizer" && kind != "drift") {
    throw InputError("unknown generate kind '" + kind + "' (expected halfspace, minimizer or drift)");
  }
  const ProblemParams params = problem_params(cfg);
  const Field grid = box_grid(cfg.n, cfg.domain_lo, cfg.domain_hi, cfg.resolution, cfg.m);
  json meta;
  meta["command"] = "generate";
  meta["kind"] = kind;
  meta["config"] = config_json(cfg);
  meta["versions"] = versions();
  Field u;
  if (kind == "halfspace") {
    const HalfSpaceSolution hs = make_halfspace(params, to_point(cfg.x0), to_point(cfg.nu), to_vector(cfg.e));
    u = sample_halfspace(grid, hs);
    meta["beta"] = num(hs.beta);
    meta["provenance"] = "beta max((x - x0).nu, 0)^kappa e sampled at the nodes";
  } else if (kind == "minimizer") {
    SolveStats stats;
    u = minimize_energy(boundary_data(cfg, params, grid), params, solver_config(cfg), {}, &stats);
    meta["solver"] = solve_stats_json(stats);
    meta["provenance"] = "discrete energy minimizer with " + cfg.boundary + " boundary values";
  } else {
    Field b = grid.like(cfg.n);
    const Vector bv = to_vector(cfg.drift_b);
    for (Index i = 0; i < b.num_nodes(); ++i) b.set_value(i, bv);
    DriftStats stats;
    u = drift_solve(boundary_data(cfg, params, grid), b, params, solver_config(cfg), &stats);
    meta["solver"] = json{{"picard_iterations", stats.picard_iterations},
                          {"residual", num(stats.residual)},
                          {"converged", stats.converged}};
    meta["provenance"] = "drift equation solved by damped Picard iteration with " + cfg.boundary +
                         " boundary values";
  }
  const std::filesystem::path dir = out_dir(cfg);
  write_field_file((dir / (kind + ".fblab")).string(), u);
  meta["field"] = grid_json(u);
  meta["field"]["file"] = kind + ".fblab";
  meta["field"]["max_abs"] = num(max_norm(u));
  write_json(dir / (kind + ".json"), meta);
  return 0;
}

int cmd_analyze(const std::string& kind, const std::string& field_path, const ExperimentConfig& cfg) {
  static const std::vector<std::string> kinds{"weiss", "blowup", "fb", "epi", "gauge"};
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
    throw InputError("unknown analyze kind '" + kind + "' (expected weiss, blowup, fb, epi or gauge)");
  }
  if (field_path.empty() && kind != "epi") throw InputError("analyze " + kind + " needs a field file");
  const ProblemParams params = problem_params(cfg);
  Field u;
  if (!field_path.empty()) u = read_analysis_field(field_path, cfg);
  const std::filesystem::path dir = out_dir(cfg);
  json report;
  report["command"] = "analyze";
  report["kind"] = kind;
  report["config"] = config_json(cfg);
  report["versions"] = versions();
  if (!field_path.empty()) {
    report["field"] = grid_json(u);
    report["field"]["file"] = std::filesystem::path(field_path).filename().string();
  }
  Outcome outcome;
  try {
    if (kind == "weiss") analyze_weiss(u, cfg, params, dir, report, outcome);
    if (kind == "blowup") analyze_blowup(u, cfg, params, dir, report, outcome);
    if (kind == "fb") analyze_fb(u, cfg, params, dir, report, outcome);
    if (kind == "epi") analyze_epi(cfg, params, dir, report, outcome);
    if (kind == "gauge") analyze_gauge(u, cfg, params, dir, report, outcome);
  } catch (const Error& e) {
    outcome.fail(e);
  }
  report["status"] = outcome.code == 0 ? "ok" : "partial";
  report["exit_code"] = outcome.code;
  report["messages"] = outcome.messages;
  write_json(dir / (kind + ".json"), report);
  for (const std::string& m : outcome.messages) std::cerr << "fblab analyze " << kind << ": " << m << "\n";
  return outcome.code;
}

int cmd_verify(const ExperimentConfig& cfg) {
  const std::vector<InvariantCheck> checks = run_invariant_suite(cfg);
  json list = json::array();
  int failed = 0;
  for (const InvariantCheck& c : checks) {
    failed += !c.pass;
    list.push_back(json{{"name", c.name},
                        {"pass", c.pass},
                        {"value", num(c.value)},
                        {"tolerance", num(c.tolerance)},
                        {"detail", c.detail}});
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  value=" << format_number(c.value)
              << " tol=" << format_number(c.tolerance) << (c.detail.empty() ? "" : "  " + c.detail) << "\n";
  }
  json report;
  report["command"] = "verify";
  report["config"] = config_json(cfg);
  report["versions"] = versions();
  report["checks"] = list;
  report["failed"] = failed;
  report["pass"] = failed == 0;
  write_json(out_dir(cfg) / "verify.json", report);
  return failed == 0 ? 0 : static_cast<int>(ExitCode::kInvariantFailure);
}

}  // namespace fblab
