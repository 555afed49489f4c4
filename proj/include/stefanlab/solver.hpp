#pragma once

#include <functional>
#include <optional>

#include "stefanlab/elliptic.hpp"
#include "stefanlab/grid.hpp"

namespace stefanlab {

using ScalarFn = std::function<double(const Vec&, double)>;

/// Dirichlet problem for d_t u - F(D^2 u) = source on a parabolic cylinder
/// (ball, annulus or box realized by masking), with data prescribed on the
/// parabolic boundary. boundary_data(x, t) is evaluated at the masked node
/// layer nearest the boundary and at the initial level.
struct DirichletProblem {
  EllipticOperatorSpec op;
  ScalarFn source;         // null means zero
  ParabolicCylinder domain;
  DomainShape shape = DomainShape::Ball;
  double inner_radius = 0.0;  // annulus only
  ScalarFn boundary_data;
  double h = 1.0 / 32;
  double dt = 0.0;  // 0: largest dt satisfying the CFL bound

  /// CFL bound dt <= h^2 / (4 n K) for the explicit scheme.
  double cfl_dt(double h_eff) const;
  void validate() const;
};

/// Explicit forward-Euler marching; boundary nodes carry prescribed data at
/// every level; the discrete equation residual vanishes at interior nodes by
/// construction. Throws on CFL violation or NaN blow-up.
SpaceTimeField solve_dirichlet(const DirichletProblem& problem);

struct ComparisonReport {
  double min_difference = 0.0;  // min over grid of u2 - u1
  bool pass = false;            // min_difference >= -tol
  double tol = 1e-8;
};

/// Solves both problems on a common discretization and reports the minimum of
/// u2 - u1. Caller guarantees data1 <= data2 and source1 <= source2.
ComparisonReport comparison_check(const DirichletProblem& p1,
                                  const DirichletProblem& p2, double tol = 1e-8);

struct GrowthBound {
  double C = 0.0;       // maximal radial slope of the solution at the inner boundary
  bool certified = false;  // u <= C(|x|-1)^+ on the computed field (late window)
  double max_violation = 0.0;
};

/// Annulus problem on B_2 \ B_1 with zero data on the inner sphere and
/// constant K_data on the outer parabolic boundary, RHS lambda * f_value.
/// The slope is measured over the second half of the time window, past the
/// initial-layer transient, and the bound is certified on the same window.
GrowthBound growth_bound_certify(int n, const EllipticOperatorSpec& op,
                                 double K_data, double lambda, double f_value,
                                 double h);

}  // namespace stefanlab
