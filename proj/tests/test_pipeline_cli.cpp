#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "stefanlab/pipeline.hpp"

using namespace stefanlab;
namespace fs = std::filesystem;

namespace {

const char* kPlaneConfig = R"(
# exact moving plane: the interior equation needs f = abar^2
[scenario]
name = plane_check
n = 1
lambda = 0.5
K = 2
box_center = 0
box_radius = 0.6
t_start = -0.1
h = 0.015625
store_stride = 32
front_stride = 8
initial = plane
abar = 1
b0 = 0
source = const
f_value = 1
boundary = exact

[operator]
kind = trace
K = 1

[analysis]
p0 = 0.5
alpha0 = 1
eta_sweep = 0.2 0.15
ball_radius = 0.4
eps0_coeff = 0.1
direction_samples = 64
nondeg_t0_count = 4

[output]
dir = RUNDIR
)";

ScenarioConfig plane_config(const std::string& out_dir) {
  std::string text = kPlaneConfig;
  text.replace(text.find("RUNDIR"), 6, out_dir);
  return parse_config_text(text);
}

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(STEFANLAB_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe)) out += buf;
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stefanlab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("theorem pipeline: exact moving plane passes with zero residual") {
  const auto cfg = plane_config("unused");
  const TheoremReport rep = run_theorem_experiment(
      build_scenario(cfg), AnalysisOptions::from_config(cfg));
  CHECK(rep.failure_stage.empty());
  CHECK(rep.bounds_ok);
  CHECK(rep.epsilon0 <= 1e-10);
  CHECK(rep.nondeg_all_pass);
  CHECK(rep.hypothesis_pass);
  REQUIRE(rep.conclusion_tested);
  CHECK(rep.conclusion_pass);
  for (const auto& e : rep.sweep) CHECK(e.residual <= 1e-6);
  CHECK(rep.hopf_mu > 0.0);
  CHECK(rep.abar_min > 0.9);
  // the subsolution assembled from the fitted coefficients certifies
  REQUIRE(rep.section3_attempted);
  CHECK(rep.section3.found);
  CHECK(rep.section3.certificate.verdict);
}

TEST_CASE("theorem pipeline: degenerate scale fails hypotheses, not the run") {
  auto cfg = plane_config("unused");
  cfg.scale = 1e-3;
  cfg.f_value = 1e-3;  // the scaled plane solves the equation with scaled f
  const TheoremReport rep = run_theorem_experiment(
      build_scenario(cfg), AnalysisOptions::from_config(cfg));
  CHECK(rep.failure_stage.empty());
  CHECK_FALSE(rep.nondeg_all_pass);
  CHECK_FALSE(rep.hypothesis_pass);
  CHECK_FALSE(rep.conclusion_tested);
}

TEST_CASE("theorem pipeline: stage isolation on a failing simulation") {
  auto cfg = plane_config("unused");
  StefanScenario sc = build_scenario(cfg);
  sc.initial_front = [&sc](const Vec&) { return -sc.box_radius + sc.h; };
  const TheoremReport rep =
      run_theorem_experiment(sc, AnalysisOptions::from_config(cfg));
  CHECK(rep.failure_stage == "simulate");
  CHECK(!rep.failure_detail.empty());
}

TEST_CASE("lemma31 experiment: frozen front at lambda zero, halving ratios") {
  const auto rep = lemma31_experiment({0.1, 0.05, 0.0}, 1.0 / 64, 800, 5);
  REQUIRE(rep.failure_stage.empty());
  REQUIRE(rep.runs.size() == 3);
  CHECK(rep.runs[2].depth == 0.0);
  CHECK(rep.runs[0].depth > 0.0);
  REQUIRE(!rep.adjacent_ratios.empty());
  CHECK(rep.adjacent_ratios[0] == doctest::Approx(2.0).epsilon(0.2));
  CHECK(rep.search.first_certified >= 0);
  CHECK(rep.depths_below_barrier);
}

TEST_CASE("persistence round-trips and reproduces the analysis bit-exactly") {
  const fs::path dir = fresh_dir("roundtrip");
  auto cfg = plane_config(dir.string());
  const auto options = AnalysisOptions::from_config(cfg);
  const SpaceTimeSolution sol = simulate(build_scenario(cfg));
  const TheoremReport in_memory = analyze_solution(sol, options);

  RunPaths paths{dir.string()};
  write_text_file(paths.config_echo(), config_echo(cfg));
  save_run(sol, paths, 0.0);
  const SpaceTimeSolution loaded = load_run(paths);
  CHECK(loaded.field.raw_values() == sol.field.raw_values());
  CHECK(loaded.field.raw_mask() == sol.field.raw_mask());
  CHECK(loaded.front.heights == sol.front.heights);
  CHECK(loaded.front.times == sol.front.times);

  const TheoremReport reloaded = analyze_solution(loaded, options);
  CHECK(theorem_report_json(reloaded, "x") == theorem_report_json(in_memory, "x"));
}

TEST_CASE("binary field dump round-trips bit-exactly") {
  const fs::path dir = fresh_dir("binary");
  auto cfg = plane_config(dir.string());
  const SpaceTimeSolution sol = simulate(build_scenario(cfg));
  const std::string path = (dir / "field.bin").string();
  write_field_binary(sol.field, path);
  const SpaceTimeField back = read_field_binary(path);
  CHECK(back.raw_values() == sol.field.raw_values());
  CHECK(back.raw_mask() == sol.field.raw_mask());
}

TEST_CASE("truncated CSV reports the offending line") {
  const fs::path dir = fresh_dir("truncate");
  auto cfg = plane_config(dir.string());
  const SpaceTimeSolution sol = simulate(build_scenario(cfg));
  RunPaths paths{dir.string()};
  save_run(sol, paths, 0.0);

  // drop the last line of field.csv
  std::string text = read_text_file(paths.field_csv());
  text.erase(text.find_last_of('\n', text.size() - 2) + 1);
  write_text_file(paths.field_csv(), text);
  try {
    load_run(paths);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
    CHECK(e.line() > 1);
  }
}

TEST_CASE("schema version bump refuses the load with an upgrade hint") {
  const fs::path dir = fresh_dir("version");
  auto cfg = plane_config(dir.string());
  const SpaceTimeSolution sol = simulate(build_scenario(cfg));
  RunPaths paths{dir.string()};
  save_run(sol, paths, 0.0);
  std::string meta = read_text_file(paths.meta_json());
  const auto pos = meta.find("\"schema_version\": 1");
  REQUIRE(pos != std::string::npos);
  meta.replace(pos, std::string("\"schema_version\": 1").size(),
               "\"schema_version\": 2");
  write_text_file(paths.meta_json(), meta);
  try {
    load_run(paths);
    FAIL("expected a refusal");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("re-run") != std::string::npos);
  }
}

TEST_CASE("config parsing") {
  SUBCASE("unknown keys are rejected with their location") {
    try {
      parse_config_text("[scenario]\nn = 1\nbogus = 3\n");
      FAIL("expected rejection");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("bogus") != std::string::npos);
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("echo reparses to the same config") {
    const auto cfg = plane_config("runs/echo");
    const auto again = parse_config_text(config_echo(cfg));
    CHECK(config_echo(again) == config_echo(cfg));
  }
  SUBCASE("json encoding is accepted") {
    const auto cfg = parse_config_text(R"({
      "scenario": {"n": 1, "lambda": 0.5, "initial": "plane", "t_start": -0.1},
      "analysis": {"eta_sweep": [0.2, 0.1]}
    })");
    CHECK(cfg.n == 1);
    CHECK(cfg.eta_sweep.size() == 2);
  }
  SUBCASE("schema violations carry the config: prefix") {
    CHECK_THROWS_WITH_AS(parse_config_text("[scenario]\nn = 7\n"),
                         doctest::Contains("config:"), std::invalid_argument);
  }
}

TEST_CASE("cli: certify hopf prints kappa and exits zero") {
  const auto res = run_cli("certify hopf --n 2 --K 2 --delta 0.5 --T 0.01");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("kappa=") != std::string::npos);
  CHECK(res.output.find("PASS") != std::string::npos);
}

TEST_CASE("cli: missing config file is a usage error naming the file") {
  const auto res = run_cli("simulate missing_scenario.cfg");
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("missing_scenario.cfg") != std::string::npos);
}

TEST_CASE("cli: theorem writes the report and dashboard and exits zero") {
  const fs::path dir = fresh_dir("cli_theorem");
  const fs::path cfg_path = dir / "plane.cfg";
  {
    std::string text = kPlaneConfig;
    text.replace(text.find("RUNDIR"), 6, (dir / "run").string());
    write_text_file(cfg_path.string(), text);
  }
  const auto res = run_cli("theorem " + cfg_path.string() + " --quiet");
  CHECK(res.exit_code == 0);
  CHECK(fs::exists(dir / "run" / "report.json"));
  CHECK(fs::exists(dir / "run" / "dashboard.svg"));
  CHECK(fs::exists(dir / "run" / "config.echo"));
  CHECK(fs::exists(dir / "run" / "inputs.hash"));
  CHECK(fs::exists(dir / "run" / "field.csv"));
  CHECK(fs::exists(dir / "run" / "front.csv"));

  SUBCASE("identical config and seed give a bit-identical report") {
    const std::string first = read_text_file((dir / "run" / "report.json").string());
    const auto res2 = run_cli("theorem " + cfg_path.string() + " --quiet");
    CHECK(res2.exit_code == 0);
    CHECK(read_text_file((dir / "run" / "report.json").string()) == first);
  }

  SUBCASE("analyze on the dumped run reproduces the report bit-exactly") {
    const std::string report = read_text_file((dir / "run" / "report.json").string());
    const auto res2 = run_cli("analyze " + (dir / "run").string() + " --quiet");
    CHECK(res2.exit_code == 0);
    CHECK(read_text_file((dir / "run" / "report.json").string()) == report);
  }
}

TEST_CASE("cli: unknown config key is a usage error") {
  const fs::path dir = fresh_dir("cli_badkey");
  const fs::path cfg = dir / "bad.cfg";
  write_text_file(cfg.string(), "[scenario]\nwhatever = 1\n");
  const auto res = run_cli("simulate " + cfg.string());
  CHECK(res.exit_code == 2);
}

TEST_CASE("cli: thinned field dump stays analyzable") {
  const fs::path dir = fresh_dir("cli_dump");
  const fs::path cfg_path = dir / "plane.cfg";
  std::string text = kPlaneConfig;
  text.replace(text.find("RUNDIR"), 6, (dir / "run").string());
  text += "field_dump_levels = 7\n";  // does not divide the stored step count
  write_text_file(cfg_path.string(), text);
  const auto res = run_cli("simulate " + cfg_path.string() + " --quiet");
  CHECK(res.exit_code == 0);
  const auto res2 = run_cli("analyze " + (dir / "run").string() + " --quiet");
  CHECK(res2.exit_code == 0);
}
