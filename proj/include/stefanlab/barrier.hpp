#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stefanlab/elliptic.hpp"
#include "stefanlab/grid.hpp"

namespace stefanlab {

enum class BarrierKind { Subsolution, Supersolution };

/// Closed-form comparison candidate with analytic derivatives. The analytic
/// closures must match finite differences of the value closure (self-test in
/// certify). front_point samples the free-boundary description; candidates
/// without a free boundary leave it empty.
struct ClosedFormCandidate {
  std::string id;
  BarrierKind kind = BarrierKind::Supersolution;
  std::function<double(const Vec&, double)> value;
  std::function<Vec(const Vec&, double)> gradient;
  std::function<Mat(const Vec&, double)> hessian;
  std::function<double(const Vec&, double)> dudt;
  std::function<bool(const Vec&, double)> positive;
  std::function<Vec(double, std::uint64_t)> front_point;  // (t, counter) -> x
};

/// Sampling region: a ball of fixed radius whose center may move in time.
struct Region {
  double t_start = 0.0;
  double t_end = 1.0;
  double radius = 1.0;
  Vec center;                          // used when moving_center is empty
  std::function<Vec(double)> moving_center;

  Vec center_at(double t) const { return moving_center ? moving_center(t) : center; }
};

struct BarrierCertificate {
  std::string candidate_id;
  std::string operator_name;
  BarrierKind kind = BarrierKind::Supersolution;
  double source_bound = 0.0;
  double lambda = 1.0;
  long interior_samples = 0;
  long front_samples = 0;
  std::uint64_t seed = 0;
  // signed defects: interior d_t phi - F(D^2 phi) -+ lambda*source_bound,
  // front d_t phi - lambda |grad phi|^2. "worst" is the value closest to the
  // wrong side. Supersolutions need both > 0, subsolutions both < 0.
  double interior_worst_margin = 0.0;
  double front_worst_margin = 0.0;
  bool has_front = false;
  bool derivative_selftest_pass = false;
  double selftest_worst_relerr = 0.0;
  bool verdict = false;
  std::string note;
};

/// Samples the strict interior and free-boundary inequalities on quasi-random
/// points (Halton sequence offset by the seed; reproducible bit-exactly).
/// Sample prefixes are nested, so enlarging the count never improves margins.
BarrierCertificate certify(const ClosedFormCandidate& candidate,
                           const EllipticOperatorSpec& op, double source_bound,
                           double lambda, const Region& region, int samples,
                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Hopf barrier h = (E - F)/D

struct HopfBarrierParams {
  int n = 2;
  double K = 2.0;
  double delta = 0.5;
  double T = 0.05;
  // derived
  double a = 0.0;        // T delta^2 / (8 - delta^2)
  double b_exp = 0.0;    // K / ((T+a) log(1 + T/a))
  double log_D = 0.0;    // log(a^{-b} - F_const), F_const = (T+a)^{-b} e^{-K/(T+a)}
  double log_F = 0.0;
  double kappa = 0.0;    // certified margin, scaled units (see certify_hopf)
  double mu = 0.0;       // slope from a companion numerical solve, when run

  void validate() const;
};

/// Solves the barrier parameters from (n, K, delta, T) and checks the closed
/// identities (T+a)/(4a) = 2/delta^2 and b(T+a) < K. Throws when the
/// monotonicity condition fails (T too large for one step).
HopfBarrierParams hopf_params(int n, double K, double delta, double T);

/// h as a closed-form candidate. Exponentials are evaluated in log space so
/// the corner |x| -> 1, t -> 0 (values below the double underflow threshold)
/// stays finite.
ClosedFormCandidate hopf_candidate(const HopfBarrierParams& p);
double hopf_value(const HopfBarrierParams& p, const Vec& x, double t);

/// Largest T with 2nK^2 - b_exp(T) < 0, found by bisection.
double hopf_critical_T(int n, double K, double delta);

struct HopfCertificate {
  HopfBarrierParams params;
  // margins of (t+a)^2 (D/E) [d_t h - M^-_K(D^2 h)]: the positive prefactor
  // E/D is divided out, so the sign test survives in double precision at the
  // corner where E underflows
  double worst_scaled_margin = 0.0;
  double kappa = 0.0;  // -worst_scaled_margin
  bool pass = false;   // all sampled margins strictly negative
  long samples = 0;
  bool time_monotone_on_sides = false;  // d_t h > 0 sampled on |x| = 1
};

/// Certifies d_t h - M^-_K(D^2 h) < 0 on a samples_per_axis^{n+1} grid of
/// B_1 x (0, T], in prefactor-scaled units.
HopfCertificate certify_hopf(const HopfBarrierParams& p, int samples_per_axis);

// ---------------------------------------------------------------------------
// Lemma barrier w = C0 g(|x| - r(t)), g(s) = (1 - e^{-2ns})/(2n)

double lemma31_g(double s, int n);
double lemma31_g_prime(double s, int n);

/// speed_factor >= 1 speeds the front up: r(t) = 1 - C0 lambda speed_factor t.
/// The original construction is speed_factor = 1, which meets the front
/// condition with equality; any factor > 1 makes it strict.
ClosedFormCandidate lemma31_w(double C0, double lambda, int n,
                              double speed_factor = 1.0);

struct Lemma31SearchRow {
  double C0 = 0.0;
  double lambda = 0.0;
  double speed_factor = 1.0;
  bool certified = false;
  double interior_margin = 0.0;
  double front_margin = 0.0;
  // the strict constant chain C0 g'(C0 lambda - 4nK) > f requires C0 lambda > 4nK
  bool strict_chain_holds = false;
  double strict_chain_value = 0.0;
};

struct Lemma31Search {
  std::vector<Lemma31SearchRow> rows;
  int first_certified = -1;  // index into rows
  bool strict_chain_satisfiable = false;
};

/// Grid search for a certified supersolution; also evaluates the strict
/// constant chain for each tuple and reports whether it is satisfiable as
/// written for the given source level.
Lemma31Search lemma31_search(int n, const EllipticOperatorSpec& op, double f_sup,
                             const std::vector<double>& C0_list,
                             const std::vector<double>& lambda_list,
                             const std::vector<double>& speed_factors,
                             int samples, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Perturbed plane subsolution v

struct TimeCoefficient {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

struct Section3Params {
  int n = 2;
  double eta = 0.1;
  double gamma = 1.0 / 3.0;
  double lambda = 0.5;
  double K = 2.0;  // ellipticity constant of the comparison operator
  double C1 = 4.0, C2 = 6.0, C3 = 2.0;
  TimeCoefficient a_bar;    // trapped-plane slope
  TimeCoefficient b_tilde;  // front ODE solution; derivative = -lambda a_bar
};

/// v(x,t) = (1 - C2 eta^{gamma/2}) a(t) (h(x - d(t) e_n))^+ with
/// h(x) = x_n - eta^{gamma/2-1}(|x'|^2 - C3 x_n^2) and
/// d(t) = b_tilde(t) + C1 eta^{gamma/2} lambda t.
ClosedFormCandidate section3_v(const Section3Params& p);
/// d(t) of the candidate, exposed for region construction.
double section3_d(const Section3Params& p, double t);
/// Height of the free boundary of v above d(t) at offset x' from the axis.
double section3_front_height(const Section3Params& p, const Vec& xprime);

struct Section3Checks {
  bool ordering_ok = false;    // v <= a(t)(x_n - d(t))^+ on samples
  double separation_min = 0.0; // min over boundary samples of the plane-v gap
  bool separation_ok = false;  // >= eta^{1+gamma/2}
};

/// Sampled verification that v sits below the moving plane, coincides with it
/// on the axis, and separates from it by eta^{1+gamma/2} on the lateral
/// boundary of the comparison ball B_{2 eta}(d(t) e_n).
Section3Checks section3_checks(const Section3Params& p, double t_start,
                               double t_end, int samples, std::uint64_t seed);

struct Section3Search {
  Section3Params params;
  bool found = false;
  BarrierCertificate certificate;
  Section3Checks checks;
  std::string box;  // searched constants, logged
};

Section3Search section3_search(const Section3Params& base,
                               const std::vector<double>& C3_list, double f_neg_sup,
                               double t_start, double t_end, int samples,
                               std::uint64_t seed);

// ---------------------------------------------------------------------------

struct ContactPoint {
  int node = 0;
  int level = 0;
  double difference = 0.0;
  bool on_front = false;  // else in {phi > 0}
};

struct TouchingReport {
  bool one_sided = false;
  double min_difference = 0.0;
  double max_difference = 0.0;
  std::vector<ContactPoint> contacts;
};

/// Grid points where |field - candidate| <= tolerance, provided the signed
/// difference does not change sign over the region (one-sided contact).
TouchingReport detect_touching(const SpaceTimeField& field,
                               const ClosedFormCandidate& candidate,
                               const Region& region, double tolerance);

/// Shared self-test: analytic derivatives against centered differences of the
/// value closure at quasi-random interior points.
bool derivative_selftest(const ClosedFormCandidate& candidate, const Region& region,
                         int points, std::uint64_t seed, double* worst_relerr);

}  // namespace stefanlab
