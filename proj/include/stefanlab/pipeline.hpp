#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stefanlab/barrier.hpp"
#include "stefanlab/config.hpp"
#include "stefanlab/geometry.hpp"
#include "stefanlab/io.hpp"

namespace stefanlab {

struct AnalysisOptions {
  double p0 = 0.5;
  double alpha0 = 1.0;
  std::vector<double> eta_sweep = {0.2, 0.1, 0.05};
  double ball_radius = 0.5;
  double eps0_coeff = 0.1;  // hypothesis threshold eps0 <= coeff * eta^2
  int direction_samples = 720;
  int nondeg_t0_count = 6;

  static AnalysisOptions from_config(const ScenarioConfig& cfg);
};

struct NondegScanEntry {
  double t0 = 0.0;
  bool pass = false;
  double best_value = 0.0;
  double threshold = 0.0;
  std::vector<double> best_x0;
};

struct EtaEntry {
  double eta = 0.0;
  double residual = 0.0;
  double eps0_threshold = 0.0;
  bool flat_enough = false;
  double a_min = 0.0, a_max = 0.0;
};

struct FrontSlice {
  double t = 0.0;
  std::vector<double> x;  // x' coordinate (first axis)
  std::vector<double> s;  // front height
};

/// Hypothesis-to-conclusion record of the trapping experiment: never asserts
/// the universal constants, only measured values.
struct TheoremReport {
  std::string scenario_name;
  double lambda = 0.0;
  double K = 0.0;
  double epsilon0 = 0.0;
  std::vector<double> nu;
  bool bounds_ok = false;  // 0 <= u <= K over the run
  std::vector<NondegScanEntry> nondeg;
  bool nondeg_all_pass = false;
  std::vector<EtaEntry> sweep;
  double hopf_mu = 0.0;      // measured on a sub-ball in the positive phase
  double abar_min = 0.0;     // measured, reported against hopf_mu
  bool hypothesis_pass = false;
  bool conclusion_pass = false;
  bool conclusion_tested = false;
  std::string failure_stage;  // empty when every stage completed
  std::string failure_detail;

  // per-eta trapping fits and the flatness table, kept for the report and
  // the dashboard overlay
  std::vector<TrappingFit> fits;
  // certification of the perturbed-plane subsolution assembled from the
  // largest-eta fit (recorded, not gating)
  bool section3_attempted = false;
  Section3Search section3;
  std::vector<double> flat_times, flat_half_widths, flat_offsets;
  std::vector<FrontSlice> slices;  // first/middle/last front profiles (n >= 2)
  double ball_radius = 0.0;
};

/// Runs measure_flatness, the nondegeneracy scan over the sphere of radius
/// 3/4 ball_radius, the trapping fit per eta, and the supporting Hopf bound
/// on an existing solution. Component failures produce a partial report with
/// the failing stage recorded, never an exception.
TheoremReport analyze_solution(const SpaceTimeSolution& solution,
                               const AnalysisOptions& options);

/// simulate + analyze_solution.
TheoremReport run_theorem_experiment(const StefanScenario& scenario,
                                     const AnalysisOptions& options);

std::string theorem_report_json(const TheoremReport& report,
                                const std::string& config_hash);
void write_theorem_dashboard(const TheoremReport& report, const std::string& path);

struct Lemma31Run {
  double lambda = 0.0;
  double depth = 0.0;  // front penetration past the initial front at t_end
};

struct Lemma31Report {
  std::vector<Lemma31Run> runs;
  std::vector<double> adjacent_ratios;  // depth(lambda) / depth(lambda/2)
  bool linear_in_lambda = false;        // ratios within 2 +- 20%
  Lemma31Search search;                 // certified barrier search
  double barrier_rate = 0.0;            // certified C0 * speed_factor
  bool depths_below_barrier = false;    // depth <= barrier_rate * lambda * T
  std::string failure_stage;
  std::string failure_detail;
};

/// Melting-into-the-ball experiment: zero initial temperature inside the unit
/// ball, bounded ramp data outside, one run per lambda; fits the linear law
/// and compares against the certified barrier.
Lemma31Report lemma31_experiment(const std::vector<double>& lambdas, double h,
                                 int samples, std::uint64_t seed);

std::string lemma31_report_json(const Lemma31Report& report);

std::string certificate_json(const BarrierCertificate& cert);
std::string hopf_certificate_json(const HopfCertificate& cert);

}  // namespace stefanlab
