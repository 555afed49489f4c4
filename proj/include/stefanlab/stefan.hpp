#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stefanlab/elliptic.hpp"
#include "stefanlab/grid.hpp"
#include "stefanlab/solver.hpp"

namespace stefanlab {

/// Exact planar solution of the one-phase problem with the trace operator and
/// zero source: u(x,t) = (1/lambda) (e^{c (x_n + c t)} - 1)^+, front at
/// x_n = -c t moving with speed c toward -e_n.
struct TravelingWave {
  double c = 0.5;
  double lambda = 0.5;

  double value(const Vec& x, double t) const;
  Vec gradient(const Vec& x, double t) const;
  double dudt(const Vec& x, double t) const;
  double front_height(double t) const { return -c * t; }
};

/// Free boundary as a graph x_n = s(x', t), u > 0 on the +e_n side. Heights
/// are stored per time level on the x' grid of the companion field; they are
/// nonincreasing in time at every column (the positivity set only grows).
struct FrontGraph {
  int dim = 1;  // ambient spatial dimension n
  std::array<int, 2> xp_npts{1, 1};
  std::array<double, 2> xp_origin{0.0, 0.0};
  double h = 0.0;
  int columns = 1;
  std::vector<double> times;
  std::vector<double> heights;  // times.size() * columns

  int levels() const { return static_cast<int>(times.size()); }
  double height(int level, int col) const {
    return heights[static_cast<std::size_t>(level) * columns + col];
  }
  Vec xprime(int col) const;
  int column_of(const Vec& xprime) const;
  int center_column() const;
  int nearest_level(double t) const;
  void validate_monotone(double tol = 1e-12) const;
};

struct StefanScenario {
  int n = 1;
  EllipticOperatorSpec op;
  ScalarFn source;  // f(x,t); interior equation is d_t u - F(D^2 u) = lambda f
  double f_sup = 0.0;      // sup |f|, recorded
  double f_neg_sup = 0.0;  // sup f^-, recorded
  double lambda = 0.5;     // in [0,1]; 0 freezes the front
  double K = 2.0;          // solution bound 0 <= u <= K
  Vec box_center;          // spatial box [center - radius, center + radius]^n
  double box_radius = 1.0;
  double t_start = -1.0;  // window (t_start, 0]
  std::function<double(const Vec&)> initial_front;  // s0(x')
  ScalarFn initial_temperature;                     // u0 >= 0, 0 on/below s0
  ScalarFn boundary_data;  // empty: initial data held fixed on the lateral boundary
  double h = 1.0 / 64;
  int store_stride = 16;  // field snapshot stride, in time steps
  int front_stride = 4;   // front/slope series stride, in time steps
  std::vector<double> slope_etas;  // slabs for dense slope-fit series
  std::uint64_t seed = 0;
  std::string name = "scenario";

  void validate() const;
};

struct SlopeSeries {
  double eta = 0.0;
  std::vector<double> times;
  std::vector<double> abar;  // least-squares slope over the slab, per sample
};

struct SpaceTimeSolution {
  SpaceTimeField field;  // snapshots every store_stride steps
  FrontGraph front;      // every front_stride steps
  StefanScenario scenario;
  std::vector<SlopeSeries> slopes;
  double min_pre_clip = 0.0;  // most negative value seen before clipping
  double sim_dt = 0.0;
  double front_cfl_max = 0.0;  // max over steps of |sdot| dt / h
  std::string boundary_policy;

  const SlopeSeries* slope_series(double eta) const;
  /// b(t) = s(0, t): front intercept at the column nearest x' = 0.
  std::vector<double> front_intercept() const;
  void validate() const;
};

/// Graph-form front speed sdot(x') = -lambda * u_n * (1 + |grad' s|^2),
/// with u_n extracted by one-sided quadratic extrapolation from the two
/// nearest usable interior nodes above the front. Always <= 0; a negative
/// extracted u_n beyond tolerance signals a corrupted state.
std::vector<double> front_velocity(const SpaceTimeField& field, int level,
                                   const std::vector<double>& heights,
                                   double lambda);

/// Explicit front-tracking simulation: one PDE step in the current positivity
/// set (zero data on the front, scenario data on the fixed lateral boundary),
/// then one front advance. Undershoot below zero is clipped at 1e-12.
SpaceTimeSolution simulate(const StefanScenario& scenario);

/// u_tau(x,t) = u(tau x, tau^2 t)/tau on the rescaled grid (spacing h/tau,
/// node-aligned with the source grid, so no interpolation error enters).
/// The rescaled solution solves the problem with lambda replaced by
/// tau * lambda; the scenario echo records that.
SpaceTimeSolution rescale_parabolic(const SpaceTimeSolution& solution, double tau);

/// Scenario seeded exactly from a traveling wave (initial data, front and
/// time-dependent boundary data from the closed form), trace operator, f = 0.
StefanScenario traveling_wave_scenario(int n, double c, double lambda,
                                       double box_radius, double t_start,
                                       double h);

}  // namespace stefanlab
