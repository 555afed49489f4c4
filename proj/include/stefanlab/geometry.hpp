#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stefanlab/stefan.hpp"

namespace stefanlab {

/// Flatness measurement: one direction nu for the whole window, a per-time
/// strip of half-width w(t) around the front's own projection interval. The
/// reported epsilon is max_t w(t) / ball_radius for the minimizing direction.
struct FlatnessReport {
  double epsilon = 0.0;
  Vec nu;
  Vec ball_center;
  double ball_radius = 1.0;
  std::vector<double> times;
  std::vector<double> half_widths;  // per time, for nu
  std::vector<double> offsets;      // strip center along nu, per time
  bool sign_conditions_ok = false;
  int directions_checked = 0;
};

/// Scans sampled unit directions (full circle in n = 2, a sphere grid in
/// n = 3, +-e1 in n = 1) plus one local refinement pass; directions whose
/// one-sided sign conditions fail on the mask are discarded. Throws when the
/// front misses the ball at some time or no direction is admissible.
FlatnessReport measure_flatness(const FrontGraph& front, const SpaceTimeField& field,
                                const Vec& ball_center, double ball_radius,
                                int direction_samples = 720);

struct NondegSpec {
  double p0 = 0.5;
  double K = 2.0;
  double C_H = 0.0;       // measured weak-Harnack constant, when available
  double f_neg_norm = 0.0;  // sup f^-
  double f_norm = 0.0;      // sup |f|

  void validate() const;
  double threshold_integral(double lambda) const {
    return (1.0 + f_neg_norm) * lambda / K;
  }
  double threshold_pointwise(double lambda, bool full_norm) const {
    return (1.0 + (full_norm ? f_norm : f_neg_norm)) * lambda / K;
  }
};

struct NondegValue {
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  long cells = 0;
};

/// Midpoint-rule p0-mean of u over B_r(x0) x (t0, t0 + K^{-1} r^2], raised to
/// 1/p0; cells are clipped to the ball by node membership. Throws when the
/// cylinder leaves the field domain.
NondegValue nondeg_integral(const SpaceTimeField& field, const Vec& x0, double t0,
                            double r, const NondegSpec& spec, double lambda);

/// Pointwise form u(x0, t0) >= K^{-1}(1 + norm) lambda at the nearest node;
/// the comparison is inclusive.
enum class NondegMode { FullNorm, NegativePart };
NondegValue nondeg_pointwise(const SpaceTimeField& field, const Vec& x0, double t0,
                             const NondegSpec& spec, double lambda, NondegMode mode);

double g_nondeg(double y, double p0);  // 1 - y^{p0} - (1-y)^{p0}

struct LipschitzEquivalenceReport {
  bool applicable = false;
  std::string reason;
  double lipschitz_estimate = 0.0;
  double pointwise_value = 0.0;
  double integral_value = 0.0;
  double bound = 0.0;  // (K^{-1}/2)(1 + sup f^-) lambda
  bool pass = false;
  double slack = 0.0;  // integral_value / bound
  bool g_convex = false;
  double g_min_second_difference = 0.0;
};

/// Checks that the pointwise nondegeneracy of a Lipschitz field implies the
/// integral one with an extra factor 1/2, and that g(y) = 1-y^p0-(1-y)^p0 is
/// convex on (0,1). Precondition violations are reported as inapplicable.
LipschitzEquivalenceReport lipschitz_equivalence_check(
    const SpaceTimeField& field, double L, const NondegSpec& spec, double lambda,
    const Vec& x0, double t0, double r);

struct WeakHarnackResult {
  double ratio = 0.0;  // +inf flags a Harnack violation
  double numerator = 0.0;
  double denominator = 0.0;
  bool finite = true;
};

/// Empirical weak-Harnack constant: p0-mean of u over B_r x (r^2, 2r^2]
/// divided by inf over B_r x (3r^2, 4r^2] of u plus r^2 f_bound. The field
/// must be a nonnegative supersolution on the unit cylinder (caller's
/// responsibility).
WeakHarnackResult weak_harnack_check(const SpaceTimeField& field, double f_bound,
                                     double r, double p0);

/// mu = min over B_1 x [T1, T] of u / dist(x, boundary), nodes closer than 2h
/// to the boundary excluded. mu = 0 is a valid failing outcome.
double hopf_lower_bound(const SpaceTimeField& field, double T1);
/// Same measurement over an explicit sub-ball of the field domain.
double hopf_lower_bound(const SpaceTimeField& field, double T1, const Vec& center,
                        double radius);

struct MollifyResult {
  std::vector<double> values;
  int edge_samples = 0;  // one-sided reflection acts within this margin
  double kernel_peak_over_mass = 0.0;  // c1/2 for the step-response bound
};

/// Convolution with the standard compactly supported bump scaled to width
/// eta^2 (radius eta^2/2). Samples must be uniform with spacing at most
/// eta^2/8; edge windows use one-sided reflection.
MollifyResult mollify_coefficient(const std::vector<double>& samples,
                                  double sample_dt, double eta);

struct TrappingFit {
  double eta = 0.0;
  double alpha0 = 1.0;
  double gamma = 0.0;  // alpha0 / (2 + alpha0)
  double beta = 0.0;   // gamma / 4
  std::vector<double> times;     // sample grid (window plus mollifier margin)
  std::vector<double> a_raw;     // least-squares slab slope per sample
  std::vector<double> a_smooth;  // mollified
  std::vector<double> b;         // measured front intercept s(0, t)
  std::vector<double> b_tilde;   // d/dt b_tilde = -lambda a_smooth, 0 at t_end
  double residual = 0.0;         // trapping defect in eta^{1+beta} units
  double a_min = 0.0, a_max = 0.0;
  double window_start = 0.0;  // [window_start, t_end] used for the residual
  int mollify_edge_samples = 0;
};

/// Fits the moving-plane coefficients on the slab {0 < x_n - b(t) < eta},
/// mollifies them over eta^2 windows, integrates the front ODE with RK4 and
/// measures the worst two-sided trapping defect on B_eta over the last
/// lambda^{-1} eta of the run.
TrappingFit fit_trapping(const SpaceTimeSolution& solution, double eta,
                         double alpha0);

}  // namespace stefanlab
