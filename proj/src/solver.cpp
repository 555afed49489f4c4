#include "stefanlab/solver.hpp"

#include <cmath>

namespace stefanlab {

double DirichletProblem::cfl_dt(double h_eff) const {
  const int n = static_cast<int>(domain.center.size());
  return h_eff * h_eff / (4.0 * n * op.K);
}

void DirichletProblem::validate() const {
  op.validate();
  domain.validate();
  if (!boundary_data) throw std::invalid_argument("problem: boundary data required");
  if (!(h > 0.0)) throw std::invalid_argument("problem: h must be positive");
}

namespace {

struct Stepper {
  const SpaceTimeField& layout;
  const EllipticOperatorSpec& op;
  int n;
  double h2;

  // Hessian from centered differences into a row-major buffer; neighbors are
  // read at the previous level. Caller guarantees the stencil stays in the box.
  double eval(const std::vector<double>& u, const std::array<int, 3>& mi) const {
    double H[9];
    std::array<int, 3> nb;
    const int node = layout.flat_index(mi);
    const double u0 = u[node];
    if (op.kind == OperatorKind::Trace) {
      double lap = 0.0;
      for (int d = 0; d < n; ++d) {
        nb = mi;
        nb[d] += 1;
        const double up = u[layout.flat_index(nb)];
        nb[d] -= 2;
        const double um = u[layout.flat_index(nb)];
        lap += (up - 2.0 * u0 + um) / h2;
      }
      return lap;
    }
    for (int d = 0; d < n; ++d) {
      nb = mi;
      nb[d] += 1;
      const double up = u[layout.flat_index(nb)];
      nb[d] -= 2;
      const double um = u[layout.flat_index(nb)];
      H[n * d + d] = (up - 2.0 * u0 + um) / h2;
      for (int e = d + 1; e < n; ++e) {
        double s = 0.0;
        for (int sd = -1; sd <= 1; sd += 2)
          for (int se = -1; se <= 1; se += 2) {
            nb = mi;
            nb[d] += sd;
            nb[e] += se;
            s += sd * se * u[layout.flat_index(nb)];
          }
        H[n * d + e] = H[n * e + d] = s / (4.0 * h2);
      }
    }
    return operator_eval_raw(op, H, n);
  }
};

}  // namespace

SpaceTimeField solve_dirichlet(const DirichletProblem& problem) {
  problem.validate();
  SpaceTimeField field = SpaceTimeField::create(problem.domain, problem.h, 1.0,
                                                problem.shape, problem.inner_radius);
  const double cfl = problem.cfl_dt(field.h());
  double dt = problem.dt > 0.0 ? problem.dt : cfl;
  if (dt > cfl * (1.0 + 1e-12))
    throw std::invalid_argument("solve_dirichlet: dt violates the CFL bound h^2/(4nK)");
  field = SpaceTimeField::create(problem.domain, problem.h, dt, problem.shape,
                                 problem.inner_radius);

  const int nodes = field.nodes();
  const int levels = field.levels();
  const int n = field.dim();

  // interior = active nodes with the whole stencil inside the box; masked
  // neighbors carry boundary data and are read as values
  std::vector<std::uint8_t> interior(nodes, 0);
  {
    std::array<int, 3> mi;
    for (int node = 0; node < nodes; ++node) {
      if (!field.active(node, 0)) continue;
      field.multi_index(node, mi);
      bool in_box = true;
      for (int d = 0; d < n; ++d)
        if (mi[d] < 1 || mi[d] > field.points_per_axis(d) - 2) in_box = false;
      interior[node] = in_box ? 1 : 0;
    }
  }

  std::vector<Vec> pos(nodes);
  for (int node = 0; node < nodes; ++node) pos[node] = field.position(node);

  // initial level and boundary values from the data closure
  for (int node = 0; node < nodes; ++node)
    field.value(node, 0) = problem.boundary_data(pos[node], field.level_time(0));
  for (int l = 1; l < levels; ++l)
    for (int node = 0; node < nodes; ++node)
      if (!interior[node])
        field.value(node, l) = problem.boundary_data(pos[node], field.level_time(l));

  Stepper stepper{field, problem.op, n, field.h() * field.h()};
  std::vector<double> prev(nodes), next(nodes);
  for (int node = 0; node < nodes; ++node) prev[node] = field.value(node, 0);

  std::array<int, 3> mi;
  for (int l = 1; l < levels; ++l) {
    const double t_prev = field.level_time(l - 1);
    const double step = field.level_time(l) - t_prev;
    for (int node = 0; node < nodes; ++node) {
      if (!interior[node]) {
        next[node] = field.value(node, l);
        continue;
      }
      field.multi_index(node, mi);
      double rhs = stepper.eval(prev, mi);
      if (problem.source) rhs += problem.source(pos[node], t_prev);
      next[node] = prev[node] + step * rhs;
      if (!std::isfinite(next[node]))
        throw std::runtime_error("solve_dirichlet: non-finite value at t=" +
                                 std::to_string(field.level_time(l)));
    }
    for (int node = 0; node < nodes; ++node) field.value(node, l) = next[node];
    prev.swap(next);
  }
  return field;
}

ComparisonReport comparison_check(const DirichletProblem& p1,
                                  const DirichletProblem& p2, double tol) {
  if (p1.op.kind != p2.op.kind || std::abs(p1.op.K - p2.op.K) > 1e-15)
    throw std::invalid_argument("comparison_check: operators differ");
  if (p1.shape != p2.shape || std::abs(p1.h - p2.h) > 1e-15 ||
      std::abs(p1.dt - p2.dt) > 1e-15 ||
      std::abs(p1.domain.radius - p2.domain.radius) > 1e-15 ||
      std::abs(p1.domain.t_start - p2.domain.t_start) > 1e-15 ||
      std::abs(p1.domain.t_end - p2.domain.t_end) > 1e-15)
    throw std::invalid_argument("comparison_check: mismatched discretizations");

  const SpaceTimeField u1 = solve_dirichlet(p1);
  const SpaceTimeField u2 = solve_dirichlet(p2);
  ComparisonReport rep;
  rep.tol = tol;
  rep.min_difference = std::numeric_limits<double>::infinity();
  for (int l = 0; l < u1.levels(); ++l)
    for (int node = 0; node < u1.nodes(); ++node)
      if (u1.active(node, l))
        rep.min_difference = std::min(rep.min_difference,
                                      u2.value(node, l) - u1.value(node, l));
  rep.pass = rep.min_difference >= -tol;
  return rep;
}

GrowthBound growth_bound_certify(int n, const EllipticOperatorSpec& op,
                                 double K_data, double lambda, double f_value,
                                 double h) {
  DirichletProblem prob;
  prob.op = op;
  prob.domain.center = Vec::Zero(n);
  prob.domain.radius = 2.0;
  const double window = 1.0 / std::max(1.0, K_data);
  prob.domain.t_start = -window;
  prob.domain.t_end = 0.0;
  prob.shape = DomainShape::Annulus;
  prob.inner_radius = 1.0;
  prob.h = h;
  prob.source = [lambda, f_value](const Vec&, double) { return lambda * f_value; };
  // zero on the inner sphere, K_data on the outer boundary and initially
  prob.boundary_data = [K_data](const Vec& x, double) {
    return x.norm() <= 1.0 + 1e-9 ? 0.0 : K_data;
  };

  const SpaceTimeField u = solve_dirichlet(prob);

  GrowthBound out;
  const double t_half = -window / 2.0;
  double C = 0.0;
  for (int l = 0; l < u.levels(); ++l) {
    if (u.level_time(l) < t_half) continue;
    for (int node = 0; node < u.nodes(); ++node) {
      if (!u.active(node, l)) continue;
      const double r = u.position(node).norm();
      if (r <= 1.0 + 0.5 * u.h()) continue;
      C = std::max(C, u.value(node, l) / (r - 1.0));
    }
  }
  out.C = C;
  double viol = 0.0;
  for (int l = 0; l < u.levels(); ++l) {
    if (u.level_time(l) < t_half) continue;
    for (int node = 0; node < u.nodes(); ++node) {
      if (!u.active(node, l)) continue;
      const double r = u.position(node).norm();
      const double bound = C * std::max(0.0, r - 1.0);
      viol = std::max(viol, u.value(node, l) - bound);
    }
  }
  out.max_violation = viol;
  out.certified = viol <= 1e-9 * (1.0 + std::abs(K_data));
  return out;
}

}  // namespace stefanlab
