#include "fblab/config.hpp"

#include "fblab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace fblab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

double parse_double(const std::string& word) {
  double v = 0.0;
  const char* end = word.data() + word.size();
  const auto [ptr, ec] = std::from_chars(word.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw InputError("not a finite number: '" + word + "'");
  }
  return v;
}

long long parse_integer(const std::string& word) {
  long long v = 0;
  const char* end = word.data() + word.size();
  const auto [ptr, ec] = std::from_chars(word.data(), end, v);
  if (ec != std::errc() || ptr != end) throw InputError("not an integer: '" + word + "'");
  return v;
}

std::string single(const std::vector<std::string>& words) {
  if (words.size() != 1) throw InputError("expected a single value");
  return words[0];
}

std::vector<double> doubles(const std::vector<std::string>& words) {
  if (words.empty()) throw InputError("expected at least one number");
  std::vector<double> out;
  for (const std::string& w : words) out.push_back(parse_double(w));
  return out;
}

bool parse_bool(const std::string& word) {
  if (word == "true" || word == "1" || word == "yes") return true;
  if (word == "false" || word == "0" || word == "no") return false;
  throw InputError("not a boolean: '" + word + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_double(v[i]);
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::vector<std::string>&)>;

template <typename T>
Setter int_setter(T ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::vector<std::string>& w) {
    c.*field = static_cast<T>(parse_integer(single(w)));
  };
}

Setter double_setter(double ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::vector<std::string>& w) {
    c.*field = parse_double(single(w));
  };
}

Setter list_setter(std::vector<double> ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::vector<std::string>& w) { c.*field = doubles(w); };
}

Setter coefficient_setter(CoefficientSpec ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::vector<std::string>& w) {
    const std::vector<double> v = doubles(w);
    CoefficientSpec spec;
    spec.value = v[0];
    spec.gradient.assign(v.begin() + 1, v.end());
    c.*field = spec;
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"n", int_setter(&ExperimentConfig::n)},
      {"m", int_setter(&ExperimentConfig::m)},
      {"q", double_setter(&ExperimentConfig::q)},
      {"alpha", double_setter(&ExperimentConfig::alpha)},
      {"M", double_setter(&ExperimentConfig::M)},
      {"lambda0", double_setter(&ExperimentConfig::lambda0)},
      {"lambda1", double_setter(&ExperimentConfig::lambda1)},
      {"lambda_plus", coefficient_setter(&ExperimentConfig::lambda_plus)},
      {"lambda_minus", coefficient_setter(&ExperimentConfig::lambda_minus)},
      {"resolution", int_setter(&ExperimentConfig::resolution)},
      {"domain",
       [](ExperimentConfig& c, const std::vector<std::string>& w) {
         const std::vector<double> v = doubles(w);
         if (v.size() != 2) throw InputError("domain takes two numbers (lo hi)");
         c.domain_lo = v[0];
         c.domain_hi = v[1];
       }},
      {"boundary",
       [](ExperimentConfig& c, const std::vector<std::string>& w) { c.boundary = single(w); }},
      {"boundary_value", double_setter(&ExperimentConfig::boundary_value)},
      {"nu", list_setter(&ExperimentConfig::nu)},
      {"e", list_setter(&ExperimentConfig::e)},
      {"x0", list_setter(&ExperimentConfig::x0)},
      {"drift_b", list_setter(&ExperimentConfig::drift_b)},
      {"gauge_p", double_setter(&ExperimentConfig::gauge_p)},
      {"tol_energy",
       [](ExperimentConfig& c, const std::vector<std::string>& w) {
         c.solver.tol_energy = parse_double(single(w));
       }},
      {"tol_grad",
       [](ExperimentConfig& c, const std::vector<std::string>& w) {
         c.solver.tol_grad = parse_double(single(w));
       }},
      {"max_iters",
       [](ExperimentConfig& c, const std::vector<std::string>& w) {
         c.solver.max_iters = static_cast<int>(parse_integer(single(w)));
       }},
      {"backtrack",
       [](ExperimentConfig& c, const std::vector<std::string>& w) {
         c.solver.backtrack = parse_double(single(w));
       }},
      {"damping",
       [](ExperimentConfig& c, const std::vector<std::string>& w) {
         c.solver.damping = parse_double(single(w));
       }},
      {"max_picard",
       [](ExperimentConfig& c, const std::vector<std::string>& w) {
         c.solver.max_picard = static_cast<int>(parse_integer(single(w)));
       }},
      {"random_init",
       [](ExperimentConfig& c, const std::vector<std::string>& w) {
         c.solver.random_init = parse_bool(single(w));
       }},
      {"center", list_setter(&ExperimentConfig::center)},
      {"weiss_radii", list_setter(&ExperimentConfig::weiss_radii)},
      {"blowup_radii", list_setter(&ExperimentConfig::blowup_radii)},
      {"fb_radii", list_setter(&ExperimentConfig::fb_radii)},
      {"gauge_radii", list_setter(&ExperimentConfig::gauge_radii)},
      {"fb_max_points", int_setter(&ExperimentConfig::fb_max_points)},
      {"graph_window", double_setter(&ExperimentConfig::graph_window)},
      {"tau_rel", double_setter(&ExperimentConfig::tau_rel)},
      {"eps_reg", double_setter(&ExperimentConfig::eps_reg)},
      {"slope_band", double_setter(&ExperimentConfig::slope_band)},
      {"eta_min", double_setter(&ExperimentConfig::eta_min)},
      {"delta_probe", double_setter(&ExperimentConfig::delta_probe)},
      {"epi_modes",
       [](ExperimentConfig& c, const std::vector<std::string>& w) {
         if (w.empty()) throw InputError("expected at least one mode");
         c.epi_modes = w;
       }},
      {"epi_eps", list_setter(&ExperimentConfig::epi_eps)},
      {"epi_resolution", int_setter(&ExperimentConfig::epi_resolution)},
      {"blowup_resolution", int_setter(&ExperimentConfig::blowup_resolution)},
      {"svg",
       [](ExperimentConfig& c, const std::vector<std::string>& w) { c.svg = parse_bool(single(w)); }},
      {"seed",
       [](ExperimentConfig& c, const std::vector<std::string>& w) {
         const long long s = parse_integer(single(w));
         if (s < 0) throw InputError("seed must be nonnegative");
         c.seed = static_cast<std::uint64_t>(s);
       }},
      {"out", [](ExperimentConfig& c, const std::vector<std::string>& w) { c.out = single(w); }},
  };
  return table;
}

Coefficient make_coefficient(const CoefficientSpec& spec) {
  if (spec.gradient.empty()) return Coefficient(spec.value);
  std::ostringstream os;
  os << format_double(spec.value) << " + (" << join(spec.gradient) << ").x";
  const CoefficientSpec copy = spec;
  return Coefficient(
      [copy](const Point& x) {
        double v = copy.value;
        for (std::size_t d = 0; d < copy.gradient.size(); ++d) v += copy.gradient[d] * x[static_cast<Index>(d)];
        return v;
      },
      os.str());
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::map<std::string, int> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw InputError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const auto it = setters().find(key);
    if (it == setters().end()) throw InputError(where + "unknown key '" + key + "'");
    if (seen.count(key)) {
      throw InputError(where + "key '" + key + "' repeated (first on line " +
                       std::to_string(seen[key]) + ")");
    }
    seen[key] = line_no;
    try {
      it->second(cfg, split_words(line.substr(eq + 1)));
    } catch (const InputError& e) {
      throw InputError(where + key + ": " + e.what());
    }
  }
  // Vector defaults follow the dimension unless given explicitly.
  const auto fit_dim = [&](const char* key, std::vector<double>& v, int size, double first) {
    if (seen.count(key)) return;
    v.assign(static_cast<std::size_t>(size), 0.0);
    v[0] = first;
  };
  fit_dim("nu", cfg.nu, cfg.n, 1.0);
  fit_dim("x0", cfg.x0, cfg.n, 0.0);
  fit_dim("drift_b", cfg.drift_b, cfg.n, 0.0);
  fit_dim("e", cfg.e, cfg.m, 1.0);
  if (!seen.count("center")) cfg.center = cfg.x0;
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ProblemParams problem_params(const ExperimentConfig& cfg) {
  ProblemParams p;
  p.n = cfg.n;
  p.m = cfg.m;
  p.q = cfg.q;
  p.alpha = cfg.alpha;
  p.M = cfg.M;
  p.lambda0 = cfg.lambda0;
  p.lambda1 = cfg.lambda1;
  p.lambda_plus = make_coefficient(cfg.lambda_plus);
  p.lambda_minus = make_coefficient(cfg.lambda_minus);
  return p;
}

Point to_point(const std::vector<double>& v) {
  Point p(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<Index>(i)] = v[i];
  return p;
}

Vector to_vector(const std::vector<double>& v) { return to_point(v); }

void check_resolution(const ExperimentConfig& cfg) {
  const double kappa = 2.0 / (1.0 - cfg.q);
  const double h = cfg.spacing();
  double r_min = std::numeric_limits<double>::infinity();
  for (const auto* list : {&cfg.weiss_radii, &cfg.blowup_radii, &cfg.fb_radii, &cfg.gauge_radii}) {
    for (double r : *list) r_min = std::min(r_min, r);
  }
  const double cells = r_min / h;
  std::ostringstream os;
  if (cells < kappa / 2.0) {
    os << "resolution insufficient: kappa = " << kappa << " needs at least " << kappa / 2.0
       << " cells across the smallest radius " << r_min << ", the grid has " << cells
       << " (raise resolution or q-dependent radii)";
    throw InputError(os.str());
  }
  const double beta = std::pow(cfg.lambda_plus.value, kappa / 2.0) *
                      std::pow(kappa * (kappa - 1.0), -kappa / 2.0);
  if (!(beta * std::pow(h, kappa) > std::numeric_limits<double>::min())) {
    os << "resolution insufficient: beta h^kappa underflows for kappa = " << kappa;
    throw InputError(os.str());
  }
}

void validate(const ExperimentConfig& cfg) {
  validate(problem_params(cfg));
  validate(cfg.solver);
  std::ostringstream err;
  const auto need = [&](bool ok, const std::string& msg) {
    if (!ok) err << msg << "; ";
  };
  need(cfg.resolution >= 9 && cfg.resolution <= 4097, "resolution must lie in [9, 4097]");
  need(cfg.domain_lo < cfg.domain_hi, "domain needs lo < hi");
  need(cfg.boundary == "halfspace" || cfg.boundary == "constant" || cfg.boundary == "zero",
       "boundary must be halfspace, constant or zero");
  const auto n = static_cast<std::size_t>(cfg.n);
  need(cfg.nu.size() == n, "nu needs n components");
  need(cfg.x0.size() == n, "x0 needs n components");
  need(cfg.center.size() == n, "center needs n components");
  need(cfg.drift_b.size() == n, "drift_b needs n components");
  need(cfg.e.size() == static_cast<std::size_t>(cfg.m), "e needs m components");
  need(cfg.lambda_plus.gradient.empty() || cfg.lambda_plus.gradient.size() == n,
       "lambda_plus gradient needs n components");
  need(cfg.lambda_minus.gradient.empty() || cfg.lambda_minus.gradient.size() == n,
       "lambda_minus gradient needs n components");
  need(cfg.gauge_p > cfg.n, "gauge_p must exceed n");
  const double r_lo = 4.0 / cfg.resolution;
  for (const auto& [name, list] :
       std::vector<std::pair<std::string, const std::vector<double>*>>{
           {"weiss_radii", &cfg.weiss_radii},
           {"blowup_radii", &cfg.blowup_radii},
           {"fb_radii", &cfg.fb_radii},
           {"gauge_radii", &cfg.gauge_radii}}) {
    for (double r : *list) {
      if (!(r > r_lo && r < 0.5)) {
        err << name << " entry " << r << " outside (" << r_lo << ", 0.5); ";
      }
    }
  }
  need(cfg.fb_max_points >= 1, "fb_max_points must be positive");
  need(cfg.graph_window > 0.0, "graph_window must be positive");
  need(cfg.tau_rel >= 0.0 && cfg.tau_rel < 1.0, "tau_rel must lie in [0, 1)");
  need(cfg.eps_reg > 0.0, "eps_reg must be positive");
  need(cfg.slope_band > 0.0, "slope_band must be positive");
  need(cfg.eta_min > 0.0 && cfg.eta_min < 1.0, "eta_min must lie in (0, 1)");
  need(cfg.delta_probe > 0.0, "delta_probe must be positive");
  for (double e : cfg.epi_eps) need(e >= 0.0, "epi_eps entries must be nonnegative");
  for (const std::string& mode : cfg.epi_modes) {
    need(mode == "a" || mode == "b" || mode == "c", "epi_modes entries must be a, b or c");
  }
  need(cfg.epi_resolution >= 17 && cfg.epi_resolution <= 1025, "epi_resolution must lie in [17, 1025]");
  need(cfg.blowup_resolution >= 17 && cfg.blowup_resolution <= 1025,
       "blowup_resolution must lie in [17, 1025]");
  const std::string msg = err.str();
  if (!msg.empty()) throw InputError("invalid config: " + msg);
  check_resolution(cfg);
}

std::map<std::string, std::string> config_entries(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> out;
  const auto coef = [](const CoefficientSpec& s) {
    std::vector<double> v{s.value};
    v.insert(v.end(), s.gradient.begin(), s.gradient.end());
    return join(v);
  };
  std::string modes;
  for (const std::string& s : cfg.epi_modes) modes += (modes.empty() ? "" : " ") + s;
  out["n"] = std::to_string(cfg.n);
  out["m"] = std::to_string(cfg.m);
  out["q"] = format_double(cfg.q);
  out["alpha"] = format_double(cfg.alpha);
  out["M"] = format_double(cfg.M);
  out["lambda0"] = format_double(cfg.lambda0);
  out["lambda1"] = format_double(cfg.lambda1);
  out["lambda_plus"] = coef(cfg.lambda_plus);
  out["lambda_minus"] = coef(cfg.lambda_minus);
  out["resolution"] = std::to_string(cfg.resolution);
  out["domain"] = join({cfg.domain_lo, cfg.domain_hi});
  out["boundary"] = cfg.boundary;
  out["boundary_value"] = format_double(cfg.boundary_value);
  out["nu"] = join(cfg.nu);
  out["e"] = join(cfg.e);
  out["x0"] = join(cfg.x0);
  out["drift_b"] = join(cfg.drift_b);
  out["gauge_p"] = format_double(cfg.gauge_p);
  out["tol_energy"] = format_double(cfg.solver.tol_energy);
  out["tol_grad"] = format_double(cfg.solver.tol_grad);
  out["max_iters"] = std::to_string(cfg.solver.max_iters);
  out["backtrack"] = format_double(cfg.solver.backtrack);
  out["damping"] = format_double(cfg.solver.damping);
  out["max_picard"] = std::to_string(cfg.solver.max_picard);
  out["random_init"] = cfg.solver.random_init ? "true" : "false";
  out["center"] = join(cfg.center);
  out["weiss_radii"] = join(cfg.weiss_radii);
  out["blowup_radii"] = join(cfg.blowup_radii);
  out["fb_radii"] = join(cfg.fb_radii);
  out["gauge_radii"] = join(cfg.gauge_radii);
  out["fb_max_points"] = std::to_string(cfg.fb_max_points);
  out["graph_window"] = format_double(cfg.graph_window);
  out["tau_rel"] = format_double(cfg.tau_rel);
  out["eps_reg"] = format_double(cfg.eps_reg);
  out["slope_band"] = format_double(cfg.slope_band);
  out["eta_min"] = format_double(cfg.eta_min);
  out["delta_probe"] = format_double(cfg.delta_probe);
  out["epi_modes"] = modes;
  out["epi_eps"] = join(cfg.epi_eps);
  out["epi_resolution"] = std::to_string(cfg.epi_resolution);
  out["blowup_resolution"] = std::to_string(cfg.blowup_resolution);
  out["svg"] = cfg.svg ? "true" : "false";
  out["seed"] = std::to_string(cfg.seed);
  out["out"] = cfg.out;
  return out;
}

}  // namespace fblab
