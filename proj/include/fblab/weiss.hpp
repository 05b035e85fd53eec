#pragma once

#include "fblab/fit.hpp"
#include "fblab/grid_field.hpp"
#include "fblab/params.hpp"
#include "fblab/quadrature.hpp"

#include <string>
#include <vector>

namespace fblab {

/// Radius-indexed energies of one field. Holds a sampler of u and grad u, so
/// repeated evaluations at many radii share the gradient computation.
class WeissEnergy {
 public:
  WeissEnergy(const Field& u, const ProblemParams& params, const QuadratureOptions& opts = {});

  /// int_{B_t(x0)} |grad u|^2 + 2F(x1, u).
  double bulk(const Point& x0, const Point& x1, double t) const;
  /// int_{dB_t(x0)} |u|^2.
  double sphere_l2(const Point& x0, double t) const;
  /// W(u, x0, x1, t) with the given constants a, b.
  double W(const Point& x0, const Point& x1, double t, const WeissParams& wp) const;
  /// Standard Weiss energy (a = b = 0).
  double W0(const Point& z, const Point& y, double s) const;
  /// (e^{a t^alpha} / t^{n+2kappa-2}) int_{dB_t} |d_nu u - kappa (1 - b t^alpha) u / t|^2.
  double R(const Point& x0, double t, const WeissParams& wp) const;

  /// Relative quadrature error of the constant field on B_t(x0) and its
  /// sphere; the calibration behind the monotonicity tolerance.
  double calibration(const Point& x0, double t) const;

  const Field& field() const { return sampler_.field(); }
  const ProblemParams& params() const { return params_; }
  const QuadratureOptions& options() const { return opts_; }

 private:
  void check(const Point& x0, double t) const;
  int sphere_points() const;

  FieldSampler sampler_;
  ProblemParams params_;
  QuadratureOptions opts_;
};

double weiss_W(const Field& u, const Point& x0, const Point& x1, double t,
               const ProblemParams& params, const WeissParams& wp);
double weiss_W0(const Field& u, const Point& z, const Point& y, double s,
                const ProblemParams& params);

/// M_{x0}(v) = int_{B_1} |grad v|^2 + 2F(x0, v) - kappa int_{dB_1} |v|^2 for v
/// sampled on a grid covering the unit ball about the origin.
double weiss_M(const Field& v, const Point& x0, const ProblemParams& params,
               const QuadratureOptions& opts = {});

/// c_k = int_{dB_1} max(x.nu, 0)^k dS in R^n, by composite Gauss-Legendre
/// quadrature of |S^{n-2}| int_0^{pi/2} cos^k(phi) sin^{n-2}(phi) dphi.
double sphere_cap_moment(int n, double k);

/// The two forms of the half-space energy level, kept apart for testing.
struct BReduction {
  /// beta^2 [(kappa^2 + 2kappa(kappa-1)/(1+q)) c_{2kappa-2}/(n+2kappa-2) - kappa c_{2kappa}]:
  /// gradient, potential and boundary terms integrated separately.
  double assembled = 0.0;
  /// kappa beta^2 c_{2kappa-2}/(n+2kappa-2), after c_{2kappa} = (2kappa-1)/(2kappa+n-2) c_{2kappa-2}.
  double closed = 0.0;
  double beta = 0.0;
};

BReduction B_reduction(const Point& x0, const ProblemParams& params);

/// M_{x0}(h) for the half-space solutions at x0 (with e >= 0). Every term of
/// M(h) is a multiple of a moment c_k: for a function homogeneous of degree
/// d, int_{B_1} g = (n+d)^{-1} int_{dB_1} g; |grad h|^2 = beta^2 kappa^2
/// (x.nu)_+^{2kappa-2}; 2F(x0,h) = 2 beta^2 kappa(kappa-1)/(1+q) (x.nu)_+^{2kappa-2}
/// since beta^{q-1} = kappa(kappa-1)/lambda_+ and kappa(1+q) = 2kappa-2; and
/// |h|^2 = beta^2 (x.nu)_+^{2kappa}. Returns the assembled form.
double B_value(const Point& x0, const ProblemParams& params);

struct WeissTrace {
  Point x0;
  Point x1;
  std::vector<double> t;
  std::vector<double> W;
  std::vector<double> R;
  /// Difference quotients (W_{i+1} - W_i)/(t_{i+1} - t_i), one per interval.
  std::vector<double> quotient;
  /// Tolerance per interval.
  std::vector<double> eps_mono;
  bool pass = false;
  /// Whether every quotient is at least the trapezoid average of R minus
  /// eps_mono, and the smallest such margin.
  bool dominates_R = false;
  double R_margin = 0.0;
  /// Largest sampled radius up to which the trace is monotone.
  double empirical_t0 = 0.0;
};

/// Samples W at increasing radii and checks the difference quotients
/// against -eps_mono, eps_mono = 5 * (calibration error at the radius) *
/// (magnitude of the W terms), per unit radius.
WeissTrace monotonicity_check(const Field& u, const Point& x0, const Point& x1,
                              const std::vector<double>& radii, const ProblemParams& params,
                              const WeissParams& wp, const QuadratureOptions& opts = {});

struct DecayFit {
  FitResult fit;
  /// Extrapolated W(0+).
  double W_limit = 0.0;
  std::vector<double> t;
  std::vector<double> W;
  /// True when W is constant within tolerance ("already at limit").
  bool degenerate = false;
  /// False when the fit was rejected (non-monotone W - W(0+)).
  bool accepted = false;
  std::string note;
};

/// W(0+) from the three smallest radii under the model W0 + C t^delta, then
/// a log-log fit of W(t) - W(0+).
DecayFit weiss_decay_fit(const Field& u, const Point& x0, const std::vector<double>& radii,
                         const ProblemParams& params, const WeissParams& wp,
                         const QuadratureOptions& opts = {});

}  // namespace fblab
