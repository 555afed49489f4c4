#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "stefanlab/pipeline.hpp"

using namespace stefanlab;

namespace {

struct CommonFlags {
  std::string out;
  double resolution = 0.0;
  long long seed = -1;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--out", flags.out, "output directory (overrides the config)");
  cmd->add_option("--resolution", flags.resolution, "grid spacing h override");
  cmd->add_option("--seed", flags.seed, "seed override");
  cmd->add_flag("--quiet", flags.quiet, "suppress progress output");
}

ScenarioConfig load_config(const std::string& path, const CommonFlags& flags) {
  ScenarioConfig cfg = parse_config_file(path);
  if (flags.resolution > 0.0) cfg.h = flags.resolution;
  if (flags.seed >= 0) cfg.seed = static_cast<std::uint64_t>(flags.seed);
  if (!flags.out.empty()) cfg.out_dir = flags.out;
  cfg.validate();
  return cfg;
}

void write_run_preamble(const RunPaths& paths, const ScenarioConfig& cfg) {
  std::filesystem::create_directories(paths.dir);
  const std::string echo = config_echo(cfg);
  write_text_file(paths.config_echo(), echo);
  write_text_file(paths.inputs_hash(), fnv1a_hex(echo) + "\n");
}

SpaceTimeSolution dump_strided(const SpaceTimeSolution& sol, int dump_levels) {
  if (dump_levels <= 0 || dump_levels >= sol.field.levels()) return sol;
  // thin the stored field for the dump; analyses on the dumped run see the
  // thinned level set. The stride must divide the stored step count, or the
  // rebuilt uniform times would drift off the copied values.
  SpaceTimeSolution out = sol;
  const int L = sol.field.levels();
  int stride = std::max(1, (L - 1) / std::max(1, dump_levels - 1));
  while (stride > 1 && (L - 1) % stride != 0) --stride;
  ParabolicCylinder box = sol.field.domain();
  out.field = SpaceTimeField::create(box, sol.field.h(),
                                     sol.field.dt() * stride, DomainShape::Box);
  for (int l = 0; l < out.field.levels(); ++l) {
    const int src = std::min(l * stride, L - 1);
    for (int node = 0; node < sol.field.nodes(); ++node) {
      out.field.value(node, l) = sol.field.value(node, src);
      out.field.set_active(node, l, sol.field.active(node, src));
    }
  }
  return out;
}

int exit_code_for(const TheoremReport& rep) {
  if (!rep.failure_stage.empty()) return 1;
  if (!rep.hypothesis_pass) return 1;
  if (rep.conclusion_tested && !rep.conclusion_pass) return 1;
  return 0;
}

void print_report(const TheoremReport& rep, bool quiet) {
  if (quiet) return;
  std::printf("scenario          %s\n", rep.scenario_name.c_str());
  std::printf("epsilon0          %.6g\n", rep.epsilon0);
  std::printf("bounds 0<=u<=K    %s\n", rep.bounds_ok ? "ok" : "violated");
  std::printf("nondegeneracy     %s (%zu slices)\n",
              rep.nondeg_all_pass ? "pass" : "fail", rep.nondeg.size());
  for (const auto& e : rep.sweep)
    std::printf("  eta %-6g residual %-10.4g (flat threshold %.3g)\n", e.eta,
                e.residual, e.eps0_threshold);
  std::printf("hopf mu           %.6g   abar min %.6g\n", rep.hopf_mu, rep.abar_min);
  std::printf("hypothesis        %s\n", rep.hypothesis_pass ? "PASS" : "FAIL");
  if (rep.conclusion_tested)
    std::printf("conclusion        %s\n", rep.conclusion_pass ? "PASS" : "FAIL");
  else
    std::printf("conclusion        untested\n");
  if (!rep.failure_stage.empty())
    std::printf("failed stage      %s: %s\n", rep.failure_stage.c_str(),
                rep.failure_detail.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stefanlab: one-phase Stefan free-boundary laboratory"};
  app.require_subcommand(1);

  CommonFlags sim_flags, th_flags, lm_flags, an_flags;
  std::string sim_config, th_config, lm_config, analyze_dir;

  auto* sim = app.add_subcommand("simulate", "run a scenario and dump artifacts");
  sim->add_option("config", sim_config, "scenario config file")->required();
  add_common(sim, sim_flags);

  auto* an = app.add_subcommand("analyze", "re-run the analyses on a dumped run");
  an->add_option("run_dir", analyze_dir, "run directory")->required();
  an->add_flag("--quiet", an_flags.quiet, "suppress output");

  auto* th = app.add_subcommand("theorem", "simulate and verify the trapping bounds");
  th->add_option("config", th_config, "scenario config file")->required();
  add_common(th, th_flags);

  auto* lm = app.add_subcommand("lemma31", "front-penetration experiment per lambda");
  lm->add_option("config", lm_config, "scenario config file")->required();
  add_common(lm, lm_flags);

  auto* ce = app.add_subcommand("certify", "certify a closed-form barrier");
  std::string barrier;
  ce->add_option("barrier", barrier, "hopf | lemma31w | section3v")->required();
  int ce_n = 2;
  double ce_K = 2.0, ce_delta = 0.5, ce_T = 0.0, ce_C0 = 2.5, ce_lambda = 0.5;
  double ce_eta = 0.1, ce_fsup = 0.0, ce_speed = 1.05, ce_alpha0 = 1.0;
  int ce_samples = 4000;
  long long ce_seed = 2026;
  std::string ce_out;
  ce->add_option("--n", ce_n, "space dimension");
  ce->add_option("--K", ce_K, "ellipticity constant");
  ce->add_option("--delta", ce_delta, "initial plateau radius (hopf)");
  ce->add_option("--T", ce_T, "time horizon (hopf; 0 = half the bisected limit)");
  ce->add_option("--C0", ce_C0, "profile amplitude (lemma31w)");
  ce->add_option("--lambda", ce_lambda, "front-law coefficient");
  ce->add_option("--eta", ce_eta, "slab scale (section3v)");
  ce->add_option("--f-sup", ce_fsup, "source bound");
  ce->add_option("--speed", ce_speed, "front speed factor (lemma31w)");
  ce->add_option("--alpha0", ce_alpha0, "boundary regularity exponent (section3v)");
  ce->add_option("--samples", ce_samples, "certification samples");
  ce->add_option("--seed", ce_seed, "sample seed");
  ce->add_option("--out", ce_out, "directory for certificates/*.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) {
      const ScenarioConfig cfg = load_config(sim_config, sim_flags);
      RunPaths paths{cfg.out_dir};
      write_run_preamble(paths, cfg);
      const auto t0 = std::chrono::steady_clock::now();
      const SpaceTimeSolution sol = simulate(build_scenario(cfg));
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      save_run(dump_strided(sol, cfg.field_dump_levels), paths, wall);
      if (!sim_flags.quiet)
        std::printf("run written to %s (%.2f s, %d stored levels)\n",
                    paths.dir.c_str(), wall, sol.field.levels());
      return 0;
    }

    if (an->parsed()) {
      RunPaths paths{analyze_dir};
      const ScenarioConfig cfg = parse_config_text(read_text_file(paths.config_echo()));
      const SpaceTimeSolution sol = load_run(paths);
      const TheoremReport rep = analyze_solution(sol, AnalysisOptions::from_config(cfg));
      write_text_file(paths.report_json(),
                      theorem_report_json(rep, fnv1a_hex(config_echo(cfg))));
      write_theorem_dashboard(rep, paths.dashboard_svg());
      print_report(rep, an_flags.quiet);
      return exit_code_for(rep);
    }

    if (th->parsed()) {
      const ScenarioConfig cfg = load_config(th_config, th_flags);
      RunPaths paths{cfg.out_dir};
      write_run_preamble(paths, cfg);
      const auto t0 = std::chrono::steady_clock::now();
      const SpaceTimeSolution sol = simulate(build_scenario(cfg));
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      save_run(dump_strided(sol, cfg.field_dump_levels), paths, wall);
      const TheoremReport rep = analyze_solution(sol, AnalysisOptions::from_config(cfg));
      write_text_file(paths.report_json(),
                      theorem_report_json(rep, fnv1a_hex(config_echo(cfg))));
      write_theorem_dashboard(rep, paths.dashboard_svg());
      if (rep.section3_attempted) {
        std::filesystem::create_directories(paths.certificates_dir());
        write_text_file(paths.certificates_dir() + "/section3_v.json",
                        certificate_json(rep.section3.certificate));
      }
      print_report(rep, th_flags.quiet);
      return exit_code_for(rep);
    }

    if (lm->parsed()) {
      const ScenarioConfig cfg = load_config(lm_config, lm_flags);
      RunPaths paths{cfg.out_dir};
      write_run_preamble(paths, cfg);
      const Lemma31Report rep =
          lemma31_experiment(cfg.lambda_list, cfg.h, 1500, cfg.seed + 17);
      write_text_file(paths.report_json(), lemma31_report_json(rep));
      if (!lm_flags.quiet) {
        for (const auto& r : rep.runs)
          std::printf("lambda %-8g depth %.6g\n", r.lambda, r.depth);
        for (double r : rep.adjacent_ratios) std::printf("halving ratio %.4g\n", r);
        std::printf("linear in lambda: %s\n", rep.linear_in_lambda ? "yes" : "no");
        std::printf("barrier certified: %s (rate %.4g), depths below: %s\n",
                    rep.search.first_certified >= 0 ? "yes" : "no", rep.barrier_rate,
                    rep.depths_below_barrier ? "yes" : "no");
        std::printf("strict constant chain satisfiable: %s\n",
                    rep.search.strict_chain_satisfiable ? "yes" : "no");
      }
      const bool ok = rep.failure_stage.empty() && rep.linear_in_lambda &&
                      rep.search.first_certified >= 0 && rep.depths_below_barrier;
      return ok ? 0 : 1;
    }

    if (ce->parsed()) {
      std::string cert_text;
      bool pass = false;
      if (barrier == "hopf") {
        const double Tc = hopf_critical_T(ce_n, ce_K, ce_delta);
        const double T = ce_T > 0.0 ? ce_T : Tc / 2.0;
        const auto p = hopf_params(ce_n, ce_K, ce_delta, T);
        const int spa = std::max(8, static_cast<int>(std::cbrt(double(ce_samples))));
        const auto cert = certify_hopf(p, spa);
        std::printf("hopf barrier  n=%d K=%g delta=%g T=%g (critical T %g)\n", ce_n,
                    ce_K, ce_delta, T, Tc);
        std::printf("  a=%.6g  b_exp=%.6g  samples=%ld\n", p.a, p.b_exp, cert.samples);
        std::printf("  kappa=%.6g  worst scaled margin=%.6g  sides monotone=%s\n",
                    cert.kappa, cert.worst_scaled_margin,
                    cert.time_monotone_on_sides ? "yes" : "no");
        std::printf("  verdict: %s\n", cert.pass ? "PASS" : "FAIL");
        cert_text = hopf_certificate_json(cert);
        pass = cert.pass;
      } else if (barrier == "lemma31w") {
        const auto w = lemma31_w(ce_C0, ce_lambda, ce_n, ce_speed);
        Region region;
        region.center = Vec::Zero(ce_n);
        region.radius = 2.0;
        region.t_start = 0.0;
        const double rate = ce_C0 * ce_lambda * ce_speed;
        region.t_end = rate > 0.0 ? std::min(1.0, 0.5 / rate) : 1.0;
        EllipticOperatorSpec op{OperatorKind::PucciMinus, ce_K, {}};
        const auto cert = certify(w, op, ce_fsup, ce_lambda, region, ce_samples,
                                  static_cast<std::uint64_t>(ce_seed));
        std::printf("lemma31 barrier  C0=%g lambda=%g speed=%g\n", ce_C0, ce_lambda,
                    ce_speed);
        std::printf("  interior margin %.6g  front margin %.6g\n",
                    cert.interior_worst_margin, cert.front_worst_margin);
        std::printf("  verdict: %s\n", cert.verdict ? "PASS" : "FAIL");
        cert_text = certificate_json(cert);
        pass = cert.verdict;
      } else if (barrier == "section3v") {
        Section3Params base;
        base.n = ce_n;
        base.eta = ce_eta;
        base.gamma = ce_alpha0 / (2.0 + ce_alpha0);
        base.lambda = ce_lambda;
        base.K = ce_K;
        base.a_bar.value = [](double) { return 1.0; };
        base.a_bar.derivative = [](double) { return 0.0; };
        base.b_tilde.value = [l = ce_lambda](double t) { return -l * t; };
        base.b_tilde.derivative = [l = ce_lambda](double) { return -l; };
        const auto out = section3_search(base, {0.3, 0.35, 0.4, 0.45}, ce_fsup,
                                         -2.0 * ce_eta, 0.0, ce_samples,
                                         static_cast<std::uint64_t>(ce_seed));
        std::printf("section3 subsolution  eta=%g gamma=%g (searched %s)\n", ce_eta,
                    base.gamma, out.box.c_str());
        std::printf("  found=%s C1=%g C2=%g C3=%g\n", out.found ? "yes" : "no",
                    out.params.C1, out.params.C2, out.params.C3);
        std::printf("  interior margin %.6g  front margin %.6g  ordering=%s  "
                    "separation=%.4g\n",
                    out.certificate.interior_worst_margin,
                    out.certificate.front_worst_margin,
                    out.checks.ordering_ok ? "ok" : "violated",
                    out.checks.separation_min);
        std::printf("  verdict: %s\n", out.found ? "PASS" : "FAIL");
        cert_text = certificate_json(out.certificate);
        pass = out.found;
      } else {
        std::fprintf(stderr, "unknown barrier '%s' (hopf | lemma31w | section3v)\n",
                     barrier.c_str());
        return 2;
      }
      if (!ce_out.empty()) {
        std::filesystem::create_directories(ce_out + "/certificates");
        write_text_file(ce_out + "/certificates/" + barrier + ".json", cert_text);
      }
      return pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    const std::string what = e.what();
    // missing or malformed inputs are usage errors
    if (what.find("not found") != std::string::npos ||
        what.find("unknown key") != std::string::npos ||
        what.find("unknown section") != std::string::npos ||
        what.find("config:") != std::string::npos)
      return 2;
    return 1;
  }
  return 2;
}
