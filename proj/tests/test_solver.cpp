#include <doctest.h>

#include <cmath>
#include <random>

#include "stefanlab/solver.hpp"

using namespace stefanlab;

namespace {

DirichletProblem ball_problem(int n, double radius, double T, double h) {
  DirichletProblem p;
  p.domain.center = Vec::Zero(n);
  p.domain.radius = radius;
  p.domain.t_start = 0.0;
  p.domain.t_end = T;
  p.shape = DomainShape::Ball;
  p.h = h;
  return p;
}

double linf_error(const SpaceTimeField& u, const ScalarFn& exact) {
  double worst = 0.0;
  for (int l = 0; l < u.levels(); ++l)
    for (int node = 0; node < u.nodes(); ++node)
      if (u.active(node, l))
        worst = std::max(worst, std::abs(u.value(node, l) -
                                         exact(u.position(node), u.level_time(l))));
  return worst;
}

}  // namespace

TEST_CASE("solve_dirichlet: stationary linear data is a fixed point") {
  auto p = ball_problem(2, 1.0, 0.05, 1.0 / 16);
  p.op = {OperatorKind::Trace, 1.0, {}};
  p.boundary_data = [](const Vec& x, double) { return x[0]; };
  const SpaceTimeField u = solve_dirichlet(p);
  CHECK(linf_error(u, p.boundary_data) < 1e-10);
}

TEST_CASE("solve_dirichlet: |x|^2 + 2nt for the trace operator") {
  const int n = 2;
  auto p = ball_problem(n, 1.0, 0.1, 1.0 / 64);
  p.op = {OperatorKind::Trace, 1.0, {}};
  auto exact = [n](const Vec& x, double t) { return x.squaredNorm() + 2.0 * n * t; };
  p.boundary_data = exact;
  const SpaceTimeField u = solve_dirichlet(p);
  CHECK(linf_error(u, exact) < 1e-3);
}

TEST_CASE("solve_dirichlet: convex |x|^2 + (2n/K)t for pucci minus") {
  const int n = 2;
  const double K = 2.0;
  auto p = ball_problem(n, 1.0, 0.1, 1.0 / 64);
  p.op = {OperatorKind::PucciMinus, K, {}};
  auto exact = [n, K](const Vec& x, double t) {
    return x.squaredNorm() + (2.0 * n / K) * t;
  };
  p.boundary_data = exact;
  const SpaceTimeField u = solve_dirichlet(p);
  CHECK(linf_error(u, exact) < 1e-3);
}

TEST_CASE("solve_dirichlet: CFL violation is rejected") {
  auto p = ball_problem(2, 1.0, 0.1, 1.0 / 16);
  p.op = {OperatorKind::Trace, 1.0, {}};
  p.boundary_data = [](const Vec&, double) { return 0.0; };
  p.dt = 1.0;  // far above h^2/(4nK)
  CHECK_THROWS(solve_dirichlet(p));
}

TEST_CASE("solve_dirichlet: refinement on a manufactured smooth solution") {
  // exact u = sin(x1) cos(x2) e^{-t}; source chosen so the trace equation holds
  const int n = 2;
  auto exact = [](const Vec& x, double t) {
    return std::sin(x[0]) * std::cos(x[1]) * std::exp(-t);
  };
  auto source = [exact](const Vec& x, double t) {
    return std::sin(x[0]) * std::cos(x[1]) * std::exp(-t);  // u_t - lap u = u
  };
  auto run = [&](double h) {
    auto p = ball_problem(n, 1.0, 0.1, h);
    p.op = {OperatorKind::Trace, 1.0, {}};
    p.boundary_data = exact;
    p.source = source;
    return linf_error(solve_dirichlet(p), exact);
  };
  const double e1 = run(1.0 / 32);
  const double e2 = run(1.0 / 64);
  CHECK(e1 / e2 >= 3.0);
}

TEST_CASE("comparison_check") {
  const int n = 2;
  auto base = ball_problem(n, 1.0, 0.05, 1.0 / 16);
  base.op = {OperatorKind::Trace, 1.0, {}};
  base.boundary_data = [](const Vec& x, double t) {
    return std::cos(2.0 * x[0]) + 0.5 * x[1] + 0.1 * t;
  };

  SUBCASE("identical problems") {
    const auto rep = comparison_check(base, base);
    CHECK(rep.min_difference == 0.0);
    CHECK(rep.pass);
  }
  SUBCASE("constant shift moves the solution by the same constant") {
    auto p2 = base;
    p2.boundary_data = [&](const Vec& x, double t) {
      return base.boundary_data(x, t) + 1.0;
    };
    const auto rep = comparison_check(base, p2);
    CHECK(rep.min_difference >= 1.0 - 1e-8);
  }
  SUBCASE("mismatched discretizations are rejected") {
    auto p2 = base;
    p2.h = 1.0 / 24;
    CHECK_THROWS(comparison_check(base, p2));
  }
  SUBCASE("random ordered pairs for every operator kind") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.1, 1.0);
    std::vector<EllipticOperatorSpec> specs(4);
    specs[0] = {OperatorKind::Trace, 1.0, {}};
    specs[1] = {OperatorKind::PucciPlus, 2.0, {}};
    specs[2] = {OperatorKind::PucciMinus, 2.0, {}};
    specs[3].kind = OperatorKind::BellmanMin;
    specs[3].K = 2.0;
    specs[3].bellman_matrices = {Mat::Identity(n, n), Mat::Identity(n, n) / 2.0,
                                 2.0 * Mat::Identity(n, n)};
    for (const auto& spec : specs) {
      for (int k = 0; k < 5; ++k) {
        const double a = U(rng), b = U(rng), gap = U(rng), src = U(rng);
        auto p1 = ball_problem(n, 1.0, 0.05, 1.0 / 12);
        p1.op = spec;
        p1.boundary_data = [a, b](const Vec& x, double t) {
          return a * std::sin(3 * x[0]) * x[1] + b * t;
        };
        p1.source = [src](const Vec& x, double) { return src * x[0]; };
        auto p2 = p1;
        p2.boundary_data = [&, gap](const Vec& x, double t) {
          return p1.boundary_data(x, t) + gap * (1.0 + 0.2 * std::cos(x[0]));
        };
        p2.source = [&, gap](const Vec& x, double t) {
          return p1.source(x, t) + 0.5 * gap;
        };
        const auto rep = comparison_check(p1, p2);
        CHECK(rep.pass);
      }
    }
  }
}

TEST_CASE("est22 surrogate: constant source gap accumulates at most linearly") {
  const int n = 2;
  auto p1 = ball_problem(n, 1.0, 0.2, 1.0 / 16);
  p1.op = {OperatorKind::PucciPlus, 2.0, {}};
  p1.boundary_data = [](const Vec& x, double) { return std::cos(x[0]) + x[1] * x[1]; };
  auto p2 = p1;
  const double s = 0.7;
  p2.source = [s](const Vec&, double) { return s; };
  const SpaceTimeField u1 = solve_dirichlet(p1);
  const SpaceTimeField u2 = solve_dirichlet(p2);
  double worst = 0.0;
  for (int l = 0; l < u1.levels(); ++l)
    for (int node = 0; node < u1.nodes(); ++node)
      if (u1.active(node, l))
        worst = std::max(worst, std::abs(u2.value(node, l) - u1.value(node, l)));
  CHECK(worst <= s * 0.2 + 1e-8);
}

TEST_CASE("growth_bound_certify") {
  EllipticOperatorSpec tr{OperatorKind::Trace, 1.0, {}};
  SUBCASE("1-D steady state is linear; finite-time slope slightly above 1") {
    const auto gb = growth_bound_certify(1, tr, 1.0, 1.0, 0.0, 1.0 / 128);
    CHECK(gb.C >= 1.0 - 1e-9);
    CHECK(gb.C <= 1.2);
    CHECK(gb.certified);
  }
  SUBCASE("zero data gives zero") {
    const auto gb = growth_bound_certify(1, tr, 0.0, 1.0, 0.0, 1.0 / 64);
    CHECK(gb.C == 0.0);
    CHECK(gb.certified);
  }
  SUBCASE("a sink cannot increase the bound") {
    const auto gb0 = growth_bound_certify(1, tr, 1.0, 1.0, 0.0, 1.0 / 64);
    const auto gbs = growth_bound_certify(1, tr, 1.0, 1.0, -0.1, 1.0 / 64);
    CHECK(gbs.C <= gb0.C + 1e-12);
  }
}

TEST_CASE("solve_dirichlet: non-finite data aborts with a diagnostic") {
  auto p = ball_problem(2, 1.0, 0.05, 1.0 / 16);
  p.op = {OperatorKind::Trace, 1.0, {}};
  p.boundary_data = [](const Vec& x, double t) {
    return t > 0.01 ? std::nan("") : x[0];
  };
  CHECK_THROWS_WITH_AS(solve_dirichlet(p), doctest::Contains("non-finite"),
                       std::runtime_error);
}
