#pragma once

#include <string>
#include <vector>

#include "stefanlab/stefan.hpp"

namespace stefanlab {

/// Scenario + analysis configuration. The file format is a flat key-value
/// text with [scenario], [operator], [analysis] and [output] sections; a
/// .json file with the same keys nested per section is accepted as an
/// alternative encoding. Unknown keys are rejected.
struct ScenarioConfig {
  // [scenario]
  std::string name = "scenario";
  int n = 1;
  double lambda = 0.5;
  double K = 2.0;
  std::vector<double> box_center = {0.0};
  double box_radius = 1.0;
  double t_start = -1.0;
  double h = 1.0 / 64;
  int store_stride = 64;
  int front_stride = 16;
  std::string initial = "traveling_wave";  // traveling_wave | plane | ramp
  double c = 0.5;          // traveling_wave speed
  double abar = 1.0;       // plane slope
  double b0 = 0.0;         // plane initial intercept
  double front0 = 1.0;     // ramp initial front
  double ramp_slope = 1.0; // ramp amplitude
  std::string source = "zero";  // zero | const
  double f_value = 0.0;
  std::string boundary = "exact";  // exact | frozen
  double scale = 1.0;  // multiplies the initial and boundary data
  std::uint64_t seed = 0;

  // [operator]
  std::string operator_kind = "trace";
  double operator_K = 1.0;
  std::vector<Mat> bellman_matrices;

  // [analysis]
  double p0 = 0.5;
  double alpha0 = 1.0;
  std::vector<double> eta_sweep = {0.2, 0.1, 0.05};
  double ball_radius = 0.5;
  double eps0_coeff = 0.1;  // flatness threshold eps0 <= coeff * eta^2
  int direction_samples = 720;
  int nondeg_t0_count = 6;
  std::vector<double> lambda_list = {0.1, 0.05};  // lemma31 experiment

  // [output]
  std::string out_dir = "runs/out";
  int field_dump_levels = 0;  // 0: dump all stored levels

  void validate() const;
};

/// Parses a config file; the format is chosen by content (a leading '{'
/// selects JSON). Throws with the offending key or line on schema errors.
ScenarioConfig parse_config_file(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text);

/// Canonical echo with every key present (defaults made explicit); parsing
/// the echo reproduces the config.
std::string config_echo(const ScenarioConfig& cfg);

/// Instantiates the closures for the configured initial condition, source and
/// boundary policy.
StefanScenario build_scenario(const ScenarioConfig& cfg);

}  // namespace stefanlab
