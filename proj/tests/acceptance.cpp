// Acceptance suite: one self-contained check per criterion, each printing a
// single PASS/FAIL line. The process exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "stefanlab/pipeline.hpp"

using namespace stefanlab;

namespace {

int g_failures = 0;

void run_criterion(const std::string& name,
                   const std::function<bool(std::string&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%-5s %s  [%.1f s]  %s\n", name.c_str(), ok ? "PASS" : "FAIL", secs,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

// ---------------------------------------------------------------------------

bool ac1_pucci_oracle(std::string& detail) {
  const std::vector<double> Ks = {1.5, 2.0, 5.0};
  double worst_gap = 0.0, worst_inv = 0.0;
  for (double K : Ks) {
    // one admissible sample set per K, shared across all test matrices;
    // rotated vertex draws carry the extrema, interior draws add coverage
    std::vector<Mat> As;
    As.reserve(100000);
    std::mt19937_64 rng(0xac1 + static_cast<std::uint64_t>(10 * K));
    std::uniform_real_distribution<double> U(1.0 / K, K);
    std::bernoulli_distribution coin(0.5);
    for (int k = 0; k < 100000; ++k) {
      Mat D = Mat::Zero(3, 3);
      const bool vertex = k % 2 == 0;
      for (int i = 0; i < 3; ++i) D(i, i) = vertex ? (coin(rng) ? K : 1.0 / K) : U(rng);
      const Mat Q = random_orthogonal(3, rng());
      As.push_back(Q * D * Q.transpose());
    }
    for (int m = 0; m < 100; ++m) {
      const Mat M = random_symmetric(3, 0xbeef + 101 * m, 0.6);
      const double plus = pucci_eval(PucciSign::Plus, M, K);
      const double minus = pucci_eval(PucciSign::Minus, M, K);
      double sup = -1e300, inf = 1e300;
      for (const Mat& A : As) {
        const double v = (A.transpose() * M).trace();
        sup = std::max(sup, v);
        inf = std::min(inf, v);
      }
      if (plus < sup - 1e-12 || minus > inf + 1e-12) {
        detail = "formula failed to bound the sampled sup/inf";
        return false;
      }
      worst_gap = std::max(worst_gap, std::max(plus - sup, inf - minus));

      // algebraic invariants at 1e-9
      const Mat Q = random_orthogonal(3, 0x51 + m);
      const Mat N = random_symmetric(3, 0x52 + m);
      worst_inv = std::max(worst_inv, std::abs(minus + pucci_eval(PucciSign::Plus, -M, K)));
      worst_inv = std::max(
          worst_inv, std::abs(pucci_eval(PucciSign::Plus, 3.0 * M, K) - 3.0 * plus));
      worst_inv = std::max(worst_inv,
                           std::abs(pucci_eval(PucciSign::Plus, Q.transpose() * M * Q, K) - plus));
      worst_inv = std::max(worst_inv,
                           std::max(0.0, pucci_eval(PucciSign::Plus, M + N, K) - plus -
                                             pucci_eval(PucciSign::Plus, N, K)));
      worst_inv = std::max(worst_inv,
                           std::max(0.0, minus + pucci_eval(PucciSign::Minus, N, K) -
                                             pucci_eval(PucciSign::Minus, M + N, K)));
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "worst oracle gap %.2e (<= 1e-2), invariants %.2e",
                worst_gap, worst_inv);
  detail = buf;
  return worst_gap <= 1e-2 && worst_inv <= 1e-9;
}

// ---------------------------------------------------------------------------

double solve_error(const EllipticOperatorSpec& op, const ScalarFn& exact, double h) {
  DirichletProblem p;
  p.op = op;
  p.domain.center = Vec::Zero(2);
  p.domain.radius = 1.0;
  p.domain.t_start = 0.0;
  p.domain.t_end = 0.1;
  p.shape = DomainShape::Ball;
  p.h = h;
  p.boundary_data = exact;
  const SpaceTimeField u = solve_dirichlet(p);
  double worst = 0.0;
  for (int l = 0; l < u.levels(); ++l)
    for (int node = 0; node < u.nodes(); ++node)
      if (u.active(node, l))
        worst = std::max(worst, std::abs(u.value(node, l) -
                                         exact(u.position(node), u.level_time(l))));
  return worst;
}

bool ac2_solver_convergence(std::string& detail) {
  const int n = 2;
  const double K = 2.0;
  EllipticOperatorSpec tr{OperatorKind::Trace, 1.0, {}};
  EllipticOperatorSpec pm{OperatorKind::PucciMinus, K, {}};
  auto heat = [n](const Vec& x, double t) { return x.squaredNorm() + 2.0 * n * t; };
  auto pucci = [n, K](const Vec& x, double t) {
    return x.squaredNorm() + (2.0 * n / K) * t;
  };
  const double e32t = solve_error(tr, heat, 1.0 / 32);
  const double e64t = solve_error(tr, heat, 1.0 / 64);
  const double e32p = solve_error(pm, pucci, 1.0 / 32);
  const double e64p = solve_error(pm, pucci, 1.0 / 64);

  // quadratic data with node-imposed boundary values is reproduced exactly,
  // so the refinement ratio sits on the roundoff floor; the ratio criterion
  // is meaningful only above it
  const double floor_ = 1e-10;
  const bool trace_ok = (e32t <= floor_ && e64t <= floor_) || e32t / e64t >= 3.0;
  const bool pucci_ok = (e32p <= floor_ && e64p <= floor_) || e32p / e64p >= 3.0;

  // supporting evidence on a manufactured smooth solution with a genuine
  // truncation error
  auto smooth = [](const Vec& x, double t) {
    return std::sin(x[0]) * std::cos(x[1]) * std::exp(-t);
  };
  auto src = [smooth](const Vec& x, double t) { return smooth(x, t); };
  auto run_smooth = [&](double h) {
    DirichletProblem p;
    p.op = {OperatorKind::Trace, 1.0, {}};
    p.domain.center = Vec::Zero(2);
    p.domain.radius = 1.0;
    p.domain.t_start = 0.0;
    p.domain.t_end = 0.1;
    p.h = h;
    p.boundary_data = smooth;
    p.source = src;
    const SpaceTimeField u = solve_dirichlet(p);
    double worst = 0.0;
    for (int l = 0; l < u.levels(); ++l)
      for (int node = 0; node < u.nodes(); ++node)
        if (u.active(node, l))
          worst = std::max(worst, std::abs(u.value(node, l) -
                                           smooth(u.position(node), u.level_time(l))));
    return worst;
  };
  const double s32 = run_smooth(1.0 / 32);
  const double s64 = run_smooth(1.0 / 64);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "trace %.1e/%.1e pucci %.1e/%.1e (exact on quadratics; floor 1e-10); "
                "smooth-solution ratio %.2f (>= 3)",
                e32t, e64t, e32p, e64p, s32 / s64);
  detail = buf;
  return trace_ok && pucci_ok && e32t < 1e-3 && e64t < 1e-3 && e32p < 1e-3 &&
         e64p < 1e-3 && s32 / s64 >= 3.0;
}

// ---------------------------------------------------------------------------

bool ac3_comparison_suite(std::string& detail) {
  const int n = 2;
  std::vector<EllipticOperatorSpec> specs(4);
  specs[0] = {OperatorKind::Trace, 1.0, {}};
  specs[1] = {OperatorKind::PucciPlus, 2.0, {}};
  specs[2] = {OperatorKind::PucciMinus, 2.0, {}};
  specs[3].kind = OperatorKind::BellmanMin;
  specs[3].K = 2.0;
  {
    Mat R(2, 2);
    const double th = 0.6;
    R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    Mat D = Mat::Zero(2, 2);
    D(0, 0) = 0.5;
    D(1, 1) = 2.0;
    specs[3].bellman_matrices = {Mat::Identity(n, n), R * D * R.transpose()};
  }

  std::mt19937_64 rng(0xac3);
  std::uniform_real_distribution<double> U(0.1, 1.0);
  double worst = 1e300;
  for (const auto& spec : specs)
    for (int k = 0; k < 50; ++k) {
      const double a = U(rng), w = 1.0 + 4.0 * U(rng), gap = U(rng), src = U(rng);
      DirichletProblem p1;
      p1.op = spec;
      p1.domain.center = Vec::Zero(n);
      p1.domain.radius = 1.0;
      p1.domain.t_start = 0.0;
      p1.domain.t_end = 0.05;
      p1.h = 1.0 / 12;
      p1.boundary_data = [a, w](const Vec& x, double t) {
        return a * std::sin(w * x[0]) * x[1] + 0.5 * a * t;
      };
      p1.source = [src](const Vec& x, double) { return src * x[0]; };
      auto p2 = p1;
      p2.boundary_data = [p1, gap](const Vec& x, double t) {
        return p1.boundary_data(x, t) + gap * (1.0 + 0.2 * std::cos(3 * x[0]));
      };
      p2.source = [p1, gap](const Vec& x, double t) {
        return p1.source(x, t) + 0.5 * gap;
      };
      const auto rep = comparison_check(p1, p2);
      worst = std::min(worst, rep.min_difference);
      if (!rep.pass) {
        detail = "violation " + std::to_string(rep.min_difference) + " for " +
                 spec.name();
        return false;
      }
    }
  detail = "200 ordered pairs, min(u2-u1) >= " + format_double(worst);
  return worst >= -1e-8;
}

// ---------------------------------------------------------------------------

bool ac4_hopf(std::string& detail) {
  const int n = 2;
  const double K = 2.0, delta = 0.5;
  const double Tc = hopf_critical_T(n, K, delta);
  if (!(Tc > 0.0)) {
    detail = "bisection failed";
    return false;
  }
  const double T = Tc / 2.0;
  const auto params = hopf_params(n, K, delta, T);
  if (!(2.0 * n * K * K - params.b_exp < 0.0)) {
    detail = "sign condition 2nK^2 - b < 0 fails at the bisected T";
    return false;
  }
  const auto cert = certify_hopf(params, 64);
  if (!cert.pass || !(cert.kappa > 0.0)) {
    detail = "barrier margins not strictly negative";
    return false;
  }

  // companion solve under the hypothesis (source 0 >= -kappa), tent data
  DirichletProblem p;
  p.op = {OperatorKind::PucciMinus, K, {}};
  p.domain.center = Vec::Zero(n);
  p.domain.radius = 1.0;
  p.domain.t_start = 0.0;
  p.domain.t_end = T;
  p.h = 1.0 / 64;
  p.boundary_data = [delta](const Vec& x, double t) {
    if (t > 0.0) return 0.0;  // lateral data
    return std::clamp((1.0 - x.norm()) / (1.0 - delta), 0.0, 1.0);
  };
  const SpaceTimeField u = solve_dirichlet(p);
  const double mu = hopf_lower_bound(u, T / 2.0);

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "T~=%.4g kappa=%.4g (scaled, %ld samples), mu=%.4g at T1=T~/2", Tc,
                cert.kappa, cert.samples, mu);
  detail = buf;
  return mu > 0.0;
}

// ---------------------------------------------------------------------------

bool ac5_theorem_pipeline(std::string& detail) {
  StefanScenario sc = traveling_wave_scenario(2, 0.5, 0.5, 0.75, -0.5, 1.0 / 128);
  sc.K = 2.5;  // universal constant of the hypothesis set
  sc.store_stride = 256;
  sc.front_stride = 64;
  sc.slope_etas = {0.2, 0.1, 0.05};

  AnalysisOptions opt;
  opt.p0 = 0.5;
  opt.alpha0 = 1.0;
  opt.eta_sweep = {0.2, 0.1, 0.05};
  opt.ball_radius = 0.5;
  opt.eps0_coeff = 0.1;
  opt.direction_samples = 720;
  opt.nondeg_t0_count = 6;

  const SpaceTimeSolution sol = simulate(sc);
  const TheoremReport rep = analyze_solution(sol, opt);
  if (!rep.failure_stage.empty()) {
    detail = rep.failure_stage + ": " + rep.failure_detail;
    return false;
  }
  if (rep.epsilon0 > 0.02) {
    detail = "epsilon0 " + format_double(rep.epsilon0) + " above 0.02";
    return false;
  }
  if (!rep.hypothesis_pass) {
    detail = "hypotheses fail";
    return false;
  }
  double worst_res = 0.0;
  for (const auto& e : rep.sweep) worst_res = std::max(worst_res, e.residual);

  // front ODE contract: b_tilde must equal an independent re-integration of
  // -lambda a_eta. The right-hand side between samples is the piecewise cubic
  // through the four neighboring values; two-point Gauss integrates each
  // cubic piece exactly, with arithmetic unrelated to the integrator's
  // Simpson form, so any disagreement is a defect of b_tilde itself.
  double worst_ode = 0.0;
  const double gauss_off = 0.5 / std::sqrt(3.0);
  for (const auto& fit : rep.fits) {
    const int m = static_cast<int>(fit.times.size());
    const double dt = fit.times[1] - fit.times[0];
    const auto& v = fit.a_smooth;
    auto cubic_at = [&](int i, double s) {
      // value of the interpolant at relative position s in [0,1] on [i, i+1]
      int base = i - 1;
      double x = s + 1.0;  // position on nodes {0,1,2,3}
      if (i == 0) {
        base = 0;
        x = s;
      } else if (i + 2 >= m) {
        base = m - 4;
        x = s + 2.0;
      }
      const double l0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
      const double l1 = x * (x - 2.0) * (x - 3.0) / 2.0;
      const double l2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
      const double l3 = x * (x - 1.0) * (x - 2.0) / 6.0;
      return l0 * v[base] + l1 * v[base + 1] + l2 * v[base + 2] + l3 * v[base + 3];
    };
    double integral = 0.0;  // int_t^0 a_eta, accumulated backward
    for (int i = m - 2; i >= 0; --i) {
      integral += 0.5 * dt *
                  (cubic_at(i, 0.5 - gauss_off) + cubic_at(i, 0.5 + gauss_off));
      worst_ode =
          std::max(worst_ode, std::abs(fit.b_tilde[i] - sc.lambda * integral));
    }
  }

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "eps0=%.2e, worst residual %.3f (<= 1), ODE contract %.2e (<= 1e-8)",
                rep.epsilon0, worst_res, worst_ode);
  detail = buf;
  return rep.conclusion_pass && worst_res <= 1.0 && worst_ode <= 1e-8;
}

// ---------------------------------------------------------------------------

bool ac6_sink_competition(std::string& detail) {
  auto make = [](double fval) {
    StefanScenario sc = traveling_wave_scenario(1, 0.5, 0.5, 0.8, -1.0, 1.0 / 128);
    sc.store_stride = 512;
    sc.front_stride = 128;
    if (fval != 0.0) {
      sc.source = [fval](const Vec&, double) { return fval; };
      sc.f_sup = std::abs(fval);
      sc.f_neg_sup = std::max(0.0, -fval);
    }
    return simulate(sc);
  };
  const auto zero = make(0.0);
  const auto sink = make(-0.05);
  const auto bz = zero.front_intercept();
  const auto bs = sink.front_intercept();
  if (bz.size() != bs.size()) {
    detail = "front series length mismatch";
    return false;
  }
  const double tol = 2.0 * zero.field.h();
  double worst = 1e300;
  for (std::size_t i = 0; i < bz.size(); ++i) worst = std::min(worst, bs[i] - bz[i]);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "min(front_sink - front_zero) = %.4g (>= -%.4g)",
                worst, tol);
  detail = buf;
  return worst >= -tol;
}

// ---------------------------------------------------------------------------

bool ac7_lemma31(std::string& detail) {
  const auto rep = lemma31_experiment({0.1, 0.05}, 1.0 / 128, 1500, 0xac7);
  if (!rep.failure_stage.empty()) {
    detail = rep.failure_stage + ": " + rep.failure_detail;
    return false;
  }
  const bool certified = rep.search.first_certified >= 0;
  const bool reported = rep.search.strict_chain_satisfiable;
  char buf[220];
  std::snprintf(buf, sizeof(buf),
                "depths %.4g/%.4g ratio %.3f, certified w: %s (rate %.3g), "
                "depths below barrier: %s, strict constant chain satisfiable: %s",
                rep.runs[0].depth, rep.runs[1].depth,
                rep.adjacent_ratios.empty() ? 0.0 : rep.adjacent_ratios[0],
                certified ? "yes" : "no", rep.barrier_rate,
                rep.depths_below_barrier ? "yes" : "no", reported ? "yes" : "no");
  detail = buf;
  return (certified || reported) && rep.linear_in_lambda && rep.depths_below_barrier;
}

// ---------------------------------------------------------------------------

bool ac8_equivalence(std::string& detail) {
  NondegSpec spec;
  spec.K = 2.0;
  spec.f_neg_norm = 0.3;
  const double lambda = 1.0;
  const double A = (1.0 + spec.f_neg_norm) / spec.K;
  ParabolicCylinder box;
  box.center = Vec::Zero(2);
  box.radius = 1.0;
  box.t_start = 0.0;
  box.t_end = 0.3;
  const Vec x0 = Vec::Zero(2);
  const double t0 = 0.1;

  std::mt19937_64 rng(0xac8);
  std::uniform_real_distribution<double> UL(0.2, 1.0);
  std::uniform_real_distribution<double> Ur(0.08, 0.245);
  double worst_slack = 1e300;
  for (int k = 0; k < 20; ++k) {
    const double L = 2.0 * A * UL(rng);
    const double r = Ur(rng);
    const double P = A * lambda * (k % 4 == 0 ? 1.0 : 1.0 + 0.3 * UL(rng));
    SpaceTimeField f = SpaceTimeField::create(box, 1.0 / 32, 0.0005, DomainShape::Box);
    SpaceTimePoint anchor{x0, t0};
    f.fill([&](const Vec& x, double t) {
      SpaceTimePoint p{x, t};
      return std::max(0.0, P - L * parabolic_distance(p, anchor));
    });
    const double p0 = k % 3 == 0 ? 0.3 : (k % 3 == 1 ? 0.5 : 0.7);
    spec.p0 = p0;
    const auto repL = lipschitz_equivalence_check(f, L, spec, lambda, x0, t0, r);
    if (!repL.applicable) {
      detail = "draw " + std::to_string(k) + " inapplicable: " + repL.reason;
      return false;
    }
    if (!repL.pass || !repL.g_convex) {
      detail = "bound or convexity failed at draw " + std::to_string(k);
      return false;
    }
    worst_slack = std::min(worst_slack, repL.slack);

    // independent brute-force quadrature of the same p0-mean
    std::mt19937_64 mc(0xbc + k);
    std::uniform_real_distribution<double> Uu(-1.0, 1.0);
    std::uniform_real_distribution<double> Ut(t0, t0 + r * r / spec.K);
    double sum = 0.0;
    long count = 0;
    while (count < 200000) {
      const double a = Uu(mc), b = Uu(mc);
      if (a * a + b * b > 1.0) continue;
      Vec x(2);
      x << x0[0] + r * a, x0[1] + r * b;
      SpaceTimePoint p{x, Ut(mc)};
      sum += std::pow(std::max(0.0, P - L * parabolic_distance(p, anchor)), p0);
      ++count;
    }
    const double oracle = std::pow(sum / count, 1.0 / p0);
    if (oracle < 0.5 * A * lambda) {
      detail = "brute-force quadrature contradicts the bound at draw " +
               std::to_string(k);
      return false;
    }
    if (std::abs(oracle - repL.integral_value) > 0.02 * oracle) {
      detail = "midpoint rule and quadrature oracle disagree";
      return false;
    }
  }

  // g-convexity across the stated exponents
  for (double p0 : {0.3, 0.5, 0.7})
    for (double y = 0.05; y <= 0.951; y += 0.025) {
      const double d2 =
          g_nondeg(y - 0.02, p0) - 2.0 * g_nondeg(y, p0) + g_nondeg(y + 0.02, p0);
      if (d2 < 0.0) {
        detail = "g convexity violated";
        return false;
      }
    }
  detail = "20 cones pass with worst slack " + format_double(worst_slack) +
           " (>= 1); quadrature oracle agrees";
  return worst_slack >= 1.0;
}

// ---------------------------------------------------------------------------

bool ac9_scale_invariance(std::string& detail) {
  StefanScenario sc = traveling_wave_scenario(2, 0.5, 0.5, 0.75, -0.5, 1.0 / 64);
  sc.K = 2.5;
  sc.store_stride = 64;
  sc.front_stride = 16;
  const SpaceTimeSolution sol = simulate(sc);
  const double tau = 0.5;
  const SpaceTimeSolution res = rescale_parabolic(sol, tau);

  const double lam = 0.5;
  const auto flat0 =
      measure_flatness(sol.front, sol.field, Vec::Zero(2), lam, 360);
  const auto flat1 =
      measure_flatness(res.front, res.field, Vec::Zero(2), lam / tau, 360);
  const double flat_tol = 2.0 * res.field.h() / (lam / tau);
  const bool flat_ok = std::abs(flat0.epsilon - flat1.epsilon) <= flat_tol;

  NondegSpec spec;
  spec.p0 = 0.5;
  spec.K = sc.K;
  Vec x0(2);
  x0 << 0.0, 0.35;
  const double t0 = -0.1, r = 0.05;
  const auto v0 = nondeg_integral(sol.field, x0, t0, r, spec, lam);
  const auto v1 =
      nondeg_integral(res.field, x0 / tau, t0 / (tau * tau), r / tau, spec, lam / tau);
  const bool value_ok = std::abs(v1.value - v0.value / tau) <= 0.02 * v0.value / tau;
  const bool verdicts_ok = v0.pass == v1.pass;

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "eps %0.2e vs %0.2e (tol %.2e); p0-mean %.4f vs %.4f (= %.4f/tau), "
                "verdicts %s",
                flat0.epsilon, flat1.epsilon, flat_tol, v0.value, v1.value, v0.value,
                verdicts_ok ? "agree" : "differ");
  detail = buf;
  return flat_ok && value_ok && verdicts_ok;
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  run_criterion("AC-1", ac1_pucci_oracle);
  run_criterion("AC-2", ac2_solver_convergence);
  run_criterion("AC-3", ac3_comparison_suite);
  run_criterion("AC-4", ac4_hopf);
  run_criterion("AC-5", ac5_theorem_pipeline);
  run_criterion("AC-6", ac6_sink_competition);
  run_criterion("AC-7", ac7_lemma31);
  run_criterion("AC-8", ac8_equivalence);
  run_criterion("AC-9", ac9_scale_invariance);
  std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures;
}
