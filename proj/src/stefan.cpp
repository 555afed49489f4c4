#include "stefanlab/stefan.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace stefanlab {

double TravelingWave::value(const Vec& x, double t) const {
  const double z = c * (x[x.size() - 1] + c * t);
  return z > 0.0 ? (std::exp(z) - 1.0) / lambda : 0.0;
}

Vec TravelingWave::gradient(const Vec& x, double t) const {
  Vec g = Vec::Zero(x.size());
  const double z = c * (x[x.size() - 1] + c * t);
  if (z > 0.0) g[x.size() - 1] = c * std::exp(z) / lambda;
  return g;
}

double TravelingWave::dudt(const Vec& x, double t) const {
  const double z = c * (x[x.size() - 1] + c * t);
  return z > 0.0 ? c * c * std::exp(z) / lambda : 0.0;
}

Vec FrontGraph::xprime(int col) const {
  Vec xp(std::max(1, dim - 1));
  if (dim == 1) {
    xp[0] = 0.0;
    return xp;
  }
  int c = col;
  for (int a = 0; a < dim - 1; ++a) {
    xp[a] = xp_origin[a] + h * (c % xp_npts[a]);
    c /= xp_npts[a];
  }
  return xp;
}

int FrontGraph::column_of(const Vec& xprime) const {
  if (dim == 1) return 0;
  int col = 0, stride = 1;
  for (int a = 0; a < dim - 1; ++a) {
    int i = static_cast<int>(std::lround((xprime[a] - xp_origin[a]) / h));
    i = std::clamp(i, 0, xp_npts[a] - 1);
    col += stride * i;
    stride *= xp_npts[a];
  }
  return col;
}

int FrontGraph::center_column() const {
  Vec zero = Vec::Zero(std::max(1, dim - 1));
  return column_of(zero);
}

int FrontGraph::nearest_level(double t) const {
  if (times.empty()) return 0;
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  if (it == times.end()) return levels() - 1;
  const int hi = static_cast<int>(it - times.begin());
  return (t - times[hi - 1] < times[hi] - t) ? hi - 1 : hi;
}

void FrontGraph::validate_monotone(double tol) const {
  for (int l = 1; l < levels(); ++l)
    for (int c = 0; c < columns; ++c)
      if (height(l, c) > height(l - 1, c) + tol)
        throw std::runtime_error("front: support monotonicity violated");
}

void StefanScenario::validate() const {
  if (n < 1 || n > 3) throw std::invalid_argument("scenario: n must be 1, 2 or 3");
  op.validate();
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("scenario: lambda must be in [0,1]");
  if (!(K > 0.0)) throw std::invalid_argument("scenario: K must be positive");
  if (box_center.size() != n) throw std::invalid_argument("scenario: box center dimension");
  if (!(box_radius > 0.0)) throw std::invalid_argument("scenario: box radius");
  if (!(t_start < 0.0)) throw std::invalid_argument("scenario: time window must end at 0");
  if (!initial_front || !initial_temperature)
    throw std::invalid_argument("scenario: initial front and temperature required");
  if (!(h > 0.0)) throw std::invalid_argument("scenario: h");
  if (store_stride < 1 || front_stride < 1 || store_stride % front_stride != 0)
    throw std::invalid_argument("scenario: store_stride must be a multiple of front_stride");
  for (double e : slope_etas)
    if (!(e > 0.0)) throw std::invalid_argument("scenario: slope etas must be positive");
}

const SlopeSeries* SpaceTimeSolution::slope_series(double eta) const {
  for (const auto& s : slopes)
    if (std::abs(s.eta - eta) <= 1e-12 * (1.0 + eta)) return &s;
  return nullptr;
}

std::vector<double> SpaceTimeSolution::front_intercept() const {
  const int c = front.center_column();
  std::vector<double> b(front.levels());
  for (int l = 0; l < front.levels(); ++l) b[l] = front.height(l, c);
  return b;
}

void SpaceTimeSolution::validate() const {
  front.validate_monotone();
  for (int l = 0; l < field.levels(); ++l)
    for (int node = 0; node < field.nodes(); ++node) {
      const double v = field.value(node, l);
      if (!std::isfinite(v)) throw std::runtime_error("solution: non-finite value");
      if (!field.active(node, l) && std::abs(v) > 1e-12)
        throw std::runtime_error("solution: nonzero value below the front");
      if (field.active(node, l) && v < 0.0)
        throw std::runtime_error("solution: negative value in the positivity set");
    }
}

namespace {

struct ColumnGrid {
  int n = 1;
  int columns = 1;
  int kn = 1;            // nodes along x_n
  double origin_n = 0.0;
  double h = 0.0;
  std::array<int, 2> xp_npts{1, 1};
  std::array<int, 2> xp_strides{1, 1};

  double coord_n(int k) const { return origin_n + h * k; }
};

ColumnGrid column_grid(const SpaceTimeField& f) {
  ColumnGrid g;
  g.n = f.dim();
  g.h = f.h();
  g.kn = f.points_per_axis(g.n - 1);
  g.origin_n = f.coordinate(g.n - 1, 0);
  g.columns = 1;
  for (int a = 0; a < g.n - 1; ++a) {
    g.xp_npts[a] = f.points_per_axis(a);
    g.xp_strides[a] = g.columns;
    g.columns *= g.xp_npts[a];
  }
  return g;
}

// u_n at the front by a quadratic through the front (value zero) and the two
// nearest usable nodes above it. Nodes closer than 0.25 h to the front are
// skipped: their values carry no extra information and the division is
// ill-conditioned there.
double extract_un(const ColumnGrid& g, const double* u, int col, double s,
                  double scale) {
  const double gap = 0.25 * g.h;
  int k1 = static_cast<int>(std::ceil((s + 1e-14 - g.origin_n) / g.h));
  k1 = std::max(k1, 0);
  if (g.coord_n(k1) - s < gap) ++k1;
  const int k2 = k1 + 1;
  if (k2 > g.kn - 1)
    throw std::runtime_error("front_velocity: front too close to the domain top");
  const double d1 = g.coord_n(k1) - s;
  const double d2 = g.coord_n(k2) - s;
  const double u1 = u[col + static_cast<std::size_t>(k1) * g.columns];
  const double u2 = u[col + static_cast<std::size_t>(k2) * g.columns];
  double un = (u1 * d2 * d2 - u2 * d1 * d1) / (d1 * d2 * (d2 - d1));
  const double tol = 1e-8 * (1.0 + scale);
  if (un < -tol)
    throw std::runtime_error("front_velocity: negative heat flux u_n = " +
                             std::to_string(un));
  return std::max(un, 0.0);
}

double front_slope_sq(const ColumnGrid& g, const double* s, int col) {
  if (g.n == 1) return 0.0;
  double sum = 0.0;
  int c = col;
  for (int a = 0; a < g.n - 1; ++a) {
    const int i = c % g.xp_npts[a];
    c /= g.xp_npts[a];
    const int str = g.xp_strides[a];
    double ds;
    if (i == 0)
      ds = (-3.0 * s[col] + 4.0 * s[col + str] - s[col + 2 * str]) / (2.0 * g.h);
    else if (i == g.xp_npts[a] - 1)
      ds = (3.0 * s[col] - 4.0 * s[col - str] + s[col - 2 * str]) / (2.0 * g.h);
    else
      ds = (s[col + str] - s[col - str]) / (2.0 * g.h);
    sum += ds * ds;
  }
  return sum;
}

std::vector<double> velocity_core(const ColumnGrid& g, const double* u,
                                  const double* s, double lambda, double scale) {
  std::vector<double> sdot(g.columns);
  for (int col = 0; col < g.columns; ++col) {
    const double un = extract_un(g, u, col, s[col], scale);
    sdot[col] = -lambda * un * (1.0 + front_slope_sq(g, s, col));
  }
  return sdot;
}

double quad_through_origin(double z1, double u1, double z2, double u2, double z) {
  // p(z) = a z + b z^2 through (z1,u1), (z2,u2)
  const double det = z1 * z2 * (z2 - z1);
  const double a = (u1 * z2 * z2 - u2 * z1 * z1) / det;
  const double b = (u2 * z1 - u1 * z2) / det;
  return a * z + b * z * z;
}

}  // namespace

std::vector<double> front_velocity(const SpaceTimeField& field, int level,
                                   const std::vector<double>& heights,
                                   double lambda) {
  const ColumnGrid g = column_grid(field);
  if (static_cast<int>(heights.size()) != g.columns)
    throw std::invalid_argument("front_velocity: heights size mismatch");
  const double* u = field.raw_values().data() +
                    static_cast<std::size_t>(level) * field.nodes();
  double scale = 0.0;
  for (int node = 0; node < field.nodes(); ++node)
    scale = std::max(scale, std::abs(u[node]));
  return velocity_core(g, u, heights.data(), lambda, scale);
}

SpaceTimeSolution simulate(const StefanScenario& sc) {
  sc.validate();
  ParabolicCylinder box;
  box.center = sc.box_center;
  box.radius = sc.box_radius;
  box.t_start = sc.t_start;
  box.t_end = 0.0;

  SpaceTimeField layout = SpaceTimeField::create(box, sc.h, 1.0, DomainShape::Box);
  const ColumnGrid g = column_grid(layout);
  const double h = layout.h();
  const double T = -sc.t_start;

  // CFL: h^2/(4nK) for the plain scheme, halved again for the shortened
  // stencil arm next to the front.
  const double dt_cfl = h * h / (8.0 * sc.n * sc.op.K);
  long long steps = static_cast<long long>(std::ceil(T / dt_cfl - 1e-12));
  steps = ((steps + sc.store_stride - 1) / sc.store_stride) * sc.store_stride;
  const double dt = T / static_cast<double>(steps);

  SpaceTimeSolution sol;
  sol.scenario = sc;
  sol.sim_dt = dt;
  sol.boundary_policy = sc.boundary_data ? "declared" : "frozen_initial";
  sol.field = SpaceTimeField::create(box, sc.h, dt * sc.store_stride, DomainShape::Box);
  if (sol.field.levels() != static_cast<int>(steps / sc.store_stride) + 1)
    throw std::logic_error("simulate: stored level count mismatch");

  sol.front.dim = sc.n;
  sol.front.h = h;
  sol.front.columns = g.columns;
  for (int a = 0; a < sc.n - 1; ++a) {
    sol.front.xp_npts[a] = g.xp_npts[a];
    sol.front.xp_origin[a] = layout.coordinate(a, 0);
  }
  for (double eta : sc.slope_etas) {
    SlopeSeries ss;
    ss.eta = eta;
    sol.slopes.push_back(std::move(ss));
  }

  const int nodes = layout.nodes();
  std::vector<double> uPrev(nodes, 0.0), uNext(nodes, 0.0);
  std::vector<double> s(g.columns), sdot(g.columns);
  std::vector<int> k_active(g.columns);

  // x' coordinates per column
  std::vector<Vec> xp(g.columns);
  for (int col = 0; col < g.columns; ++col) xp[col] = sol.front.xprime(col);

  const double lo_n = g.coord_n(0);
  const double hi_n = g.coord_n(g.kn - 1);
  for (int col = 0; col < g.columns; ++col) {
    s[col] = sc.initial_front(xp[col]);
    if (s[col] < lo_n + 2.0 * h || s[col] > hi_n - 3.0 * h)
      throw std::runtime_error("simulate: initial front too close to the box");
    k_active[col] =
        std::max(0, static_cast<int>(std::ceil((s[col] + 1e-14 - g.origin_n) / h)));
  }

  std::vector<std::uint8_t> is_face(nodes, 0);
  {
    std::array<int, 3> mi;
    for (int node = 0; node < nodes; ++node) {
      layout.multi_index(node, mi);
      for (int d = 0; d < sc.n; ++d)
        if (mi[d] == 0 || mi[d] == layout.points_per_axis(d) - 1) is_face[node] = 1;
    }
  }

  Vec pos(sc.n);
  auto fill_pos = [&](int col, int k) {
    for (int a = 0; a < sc.n - 1; ++a) pos[a] = xp[col][a];
    pos[sc.n - 1] = g.coord_n(k);
  };

  // initial state
  for (int col = 0; col < g.columns; ++col)
    for (int k = 0; k < g.kn; ++k) {
      fill_pos(col, k);
      const double v = sc.initial_temperature(pos, sc.t_start);
      if (k >= k_active[col]) {
        if (v < -1e-12)
          throw std::runtime_error("simulate: initial temperature negative");
        uPrev[col + static_cast<std::size_t>(k) * g.columns] = std::max(v, 0.0);
      } else if (std::abs(v) > 1e-9) {
        throw std::runtime_error("simulate: initial temperature nonzero below the front");
      }
    }

  auto boundary_value = [&](int col, int k, double t) {
    fill_pos(col, k);
    if (sc.boundary_data) return sc.boundary_data(pos, t);
    return sc.initial_temperature(pos, sc.t_start);
  };

  auto snapshot_field = [&](int stored_level) {
    for (int col = 0; col < g.columns; ++col)
      for (int k = 0; k < g.kn; ++k) {
        const int node = col + k * g.columns;
        sol.field.value(node, stored_level) = uPrev[node];
        sol.field.set_active(node, stored_level, k >= k_active[col]);
      }
  };

  auto snapshot_front = [&](double t) {
    sol.front.times.push_back(t);
    sol.front.heights.insert(sol.front.heights.end(), s.begin(), s.end());
    const int bcol = sol.front.center_column();
    const double b = s[bcol];
    for (auto& ss : sol.slopes) {
      double szz = 0.0, suz = 0.0;
      for (int col = 0; col < g.columns; ++col) {
        if (xp[col].norm() > ss.eta && sc.n > 1) continue;
        for (int k = k_active[col]; k < g.kn; ++k) {
          const double z = g.coord_n(k) - b;
          if (z <= 0.0) continue;
          if (z >= ss.eta) break;
          const double u = uPrev[col + static_cast<std::size_t>(k) * g.columns];
          szz += z * z;
          suz += u * z;
        }
      }
      ss.times.push_back(t);
      ss.abar.push_back(szz > 0.0 ? suz / szz : std::nan(""));
    }
  };

  snapshot_field(0);
  snapshot_front(sc.t_start);

  const bool trace_fast = sc.op.kind == OperatorKind::Trace;
  const double h2 = h * h;
  const double blowup = 10.0 * sc.K;
  double H[9];
  int stored_level = 0;
  std::vector<int> deferred(g.columns, -1);  // node index skipped by the PDE step

  for (long long step = 0; step < steps; ++step) {
    const double t = sc.t_start + dt * static_cast<double>(step);
    const double t_next = sc.t_start + dt * static_cast<double>(step + 1);

    // front speed from the state at time t
    for (int col = 0; col < g.columns; ++col) {
      const double un = extract_un(g, uPrev.data(), col, s[col], sc.K);
      sdot[col] = -sc.lambda * un * (1.0 + front_slope_sq(g, s.data(), col));
      sol.front_cfl_max = std::max(sol.front_cfl_max, std::abs(sdot[col]) * dt / h);
      if (std::abs(sdot[col]) * dt > h)
        throw std::runtime_error("simulate: front CFL violated");
    }

    // PDE step on the current positivity set
    for (int col = 0; col < g.columns; ++col) {
      const int ka = k_active[col];
      const double d_front = g.coord_n(ka) - s[col];
      for (int k = ka; k < g.kn; ++k) {
        const int node = col + k * g.columns;
        if (is_face[node]) {
          uNext[node] = boundary_value(col, k, t_next);
          continue;
        }
        if (k == ka && d_front < 0.5 * h) {
          deferred[col] = k;
          uNext[node] = 0.0;  // set after the front moves
          continue;
        }
        const double u0 = uPrev[node];
        double unn;
        if (k == ka) {
          const double uUp = uPrev[node + g.columns];
          unn = 2.0 * (-u0 / (d_front * h) + uUp / (h * (d_front + h)));
        } else {
          unn = (uPrev[node + g.columns] - 2.0 * u0 + uPrev[node - g.columns]) / h2;
        }
        double rhs;
        if (trace_fast) {
          double lap = unn;
          for (int a = 0; a < sc.n - 1; ++a) {
            const int str = g.xp_strides[a];
            lap += (uPrev[node + str] - 2.0 * u0 + uPrev[node - str]) / h2;
          }
          rhs = lap;
        } else {
          const int nn = sc.n;
          H[nn * (nn - 1) + (nn - 1)] = unn;
          for (int a = 0; a < nn - 1; ++a) {
            const int str = g.xp_strides[a];
            H[nn * a + a] = (uPrev[node + str] - 2.0 * u0 + uPrev[node - str]) / h2;
            // mixed with x_n
            const double mx = (uPrev[node + str + g.columns] - uPrev[node + str - g.columns] -
                               uPrev[node - str + g.columns] + uPrev[node - str - g.columns]) /
                              (4.0 * h2);
            H[nn * a + (nn - 1)] = mx;
            H[nn * (nn - 1) + a] = mx;
            for (int b = a + 1; b < nn - 1; ++b) {
              const int strb = g.xp_strides[b];
              const double m = (uPrev[node + str + strb] - uPrev[node + str - strb] -
                                uPrev[node - str + strb] + uPrev[node - str - strb]) /
                               (4.0 * h2);
              H[nn * a + b] = m;
              H[nn * b + a] = m;
            }
          }
          rhs = operator_eval_raw(sc.op, H, nn);
        }
        if (sc.source) {
          fill_pos(col, k);
          rhs += sc.lambda * sc.source(pos, t);
        }
        double v = u0 + dt * rhs;
        if (!std::isfinite(v))
          throw std::runtime_error("simulate: non-finite value at t=" + std::to_string(t_next));
        if (v > blowup) throw std::runtime_error("simulate: solution exceeded 10K");
        if (v < 0.0) {
          sol.min_pre_clip = std::min(sol.min_pre_clip, v);
          v = 0.0;
        }
        uNext[node] = v;
      }
    }

    // front advance and activation
    for (int col = 0; col < g.columns; ++col) {
      s[col] += dt * sdot[col];
      if (s[col] < lo_n + 2.0 * h)
        throw std::runtime_error("simulate: front exited the domain box");
      int ka = k_active[col];
      while (ka > 0 && g.coord_n(ka - 1) > s[col] + 1e-14) --ka;
      k_active[col] = ka;
    }

    // nodes within h/2 of the front, and any node the PDE step skipped, take
    // values interpolated through the front
    for (int col = 0; col < g.columns; ++col) {
      const int ka = k_active[col];
      auto set_by_interpolation = [&](int k) {
        const int node = col + k * g.columns;
        if (is_face[node]) return;
        if (k + 2 > g.kn - 1)
          throw std::runtime_error("simulate: front too close to the domain top");
        const double z1 = g.coord_n(k + 1) - s[col];
        const double z2 = g.coord_n(k + 2) - s[col];
        const double v = quad_through_origin(z1, uNext[node + g.columns], z2,
                                             uNext[node + 2 * g.columns],
                                             g.coord_n(k) - s[col]);
        uNext[node] = std::max(v, 0.0);
      };
      const int def = deferred[col];
      deferred[col] = -1;
      if (def >= 0 && def != ka) set_by_interpolation(def);
      if (def == ka || g.coord_n(ka) - s[col] < 0.5 * h) set_by_interpolation(ka);
    }

    uPrev.swap(uNext);

    if ((step + 1) % sc.front_stride == 0) snapshot_front(t_next);
    if ((step + 1) % sc.store_stride == 0) {
      ++stored_level;
      snapshot_field(stored_level);
    }
  }

  return sol;
}

SpaceTimeSolution rescale_parabolic(const SpaceTimeSolution& solution, double tau) {
  if (!(tau > 0.0 && tau <= 1.0))
    throw std::invalid_argument("rescale_parabolic: tau must be in (0,1]");
  if (tau == 1.0) return solution;

  const SpaceTimeField& f = solution.field;
  const double t2 = tau * tau;

  SpaceTimeSolution out;
  out.scenario = solution.scenario;
  out.scenario.lambda = std::min(1.0, tau * solution.scenario.lambda);
  out.scenario.K = solution.scenario.K / tau;
  out.scenario.box_radius = solution.scenario.box_radius / tau;
  out.scenario.box_center = solution.scenario.box_center / tau;
  out.scenario.t_start = solution.scenario.t_start / t2;
  out.scenario.h = f.h() / tau;
  for (auto& e : out.scenario.slope_etas) e /= tau;
  out.scenario.name = solution.scenario.name + "_rescaled";
  // closures describe the original frame; drop them from the echo
  out.scenario.source = nullptr;
  out.scenario.initial_front = nullptr;
  out.scenario.initial_temperature = nullptr;
  out.scenario.boundary_data = nullptr;
  out.sim_dt = solution.sim_dt / t2;
  out.front_cfl_max = solution.front_cfl_max;
  out.boundary_policy = solution.boundary_policy;
  out.min_pre_clip = solution.min_pre_clip / tau;

  ParabolicCylinder box;
  box.center = f.domain().center / tau;
  box.radius = f.domain().radius / tau;
  box.t_start = f.domain().t_start / t2;
  box.t_end = f.domain().t_end / t2;
  out.field = SpaceTimeField::create(box, f.h() / tau, f.dt() / t2, DomainShape::Box);
  if (out.field.nodes() != f.nodes() || out.field.levels() != f.levels())
    throw std::logic_error("rescale_parabolic: grid image mismatch");
  for (int l = 0; l < f.levels(); ++l)
    for (int node = 0; node < f.nodes(); ++node) {
      out.field.value(node, l) = f.value(node, l) / tau;
      out.field.set_active(node, l, f.active(node, l));
    }

  out.front = solution.front;
  out.front.h = solution.front.h / tau;
  for (int a = 0; a < solution.front.dim - 1; ++a)
    out.front.xp_origin[a] = solution.front.xp_origin[a] / tau;
  for (auto& t : out.front.times) t /= t2;
  for (auto& v : out.front.heights) v /= tau;

  out.slopes = solution.slopes;
  for (auto& ss : out.slopes) {
    ss.eta /= tau;
    for (auto& t : ss.times) t /= t2;
    // the slope of u against x_n is scale invariant
  }
  return out;
}

StefanScenario traveling_wave_scenario(int n, double c, double lambda,
                                       double box_radius, double t_start,
                                       double h) {
  TravelingWave tw{c, lambda};
  StefanScenario sc;
  sc.n = n;
  sc.op.kind = OperatorKind::Trace;
  sc.op.K = 1.0;
  sc.lambda = lambda;
  sc.box_center = Vec::Zero(n);
  sc.box_radius = box_radius;
  sc.t_start = t_start;
  sc.h = h;
  sc.f_sup = 0.0;
  sc.f_neg_sup = 0.0;
  sc.K = 1.05 * (std::exp(c * box_radius) - 1.0) / lambda;
  sc.initial_front = [tw, t_start](const Vec&) { return tw.front_height(t_start); };
  sc.initial_temperature = [tw](const Vec& x, double t) { return tw.value(x, t); };
  sc.boundary_data = [tw](const Vec& x, double t) { return tw.value(x, t); };
  sc.name = "traveling_wave";
  return sc;
}

}  // namespace stefanlab
