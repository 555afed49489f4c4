#include "stefanlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace stefanlab {

namespace {

struct FrontPoints {
  // in-ball front points per front level
  std::vector<std::vector<Vec>> pts;
};

FrontPoints collect_front_points(const FrontGraph& front, const Vec& center,
                                 double radius) {
  FrontPoints fp;
  fp.pts.resize(front.levels());
  const int n = front.dim;
  for (int l = 0; l < front.levels(); ++l) {
    for (int col = 0; col < front.columns; ++col) {
      Vec p(n);
      if (n > 1) p.head(n - 1) = front.xprime(col);
      p[n - 1] = front.height(l, col);
      if ((p - center).norm() <= radius) fp.pts[l].push_back(std::move(p));
    }
    if (fp.pts[l].empty())
      throw std::runtime_error("measure_flatness: front misses the ball at t=" +
                               std::to_string(front.times[l]));
  }
  return fp;
}

struct DirWidth {
  double width = 0.0;  // max over levels of the half oscillation
  std::vector<double> half_widths;
  std::vector<double> offsets;
};

DirWidth direction_width(const FrontPoints& fp, const Vec& center, const Vec& nu) {
  DirWidth out;
  out.half_widths.reserve(fp.pts.size());
  out.offsets.reserve(fp.pts.size());
  for (const auto& level : fp.pts) {
    double lo = 1e300, hi = -1e300;
    for (const Vec& p : level) {
      const double proj = (p - center).dot(nu);
      lo = std::min(lo, proj);
      hi = std::max(hi, proj);
    }
    out.half_widths.push_back(0.5 * (hi - lo));
    out.offsets.push_back(0.5 * (hi + lo));
    out.width = std::max(out.width, out.half_widths.back());
  }
  return out;
}

std::vector<Vec> sample_directions(int n, int count) {
  std::vector<Vec> dirs;
  if (n == 1) {
    Vec p(1), m(1);
    p << 1.0;
    m << -1.0;
    dirs = {p, m};
  } else if (n == 2) {
    dirs.reserve(count);
    for (int k = 0; k < count; ++k) {
      const double phi = 2.0 * M_PI * k / count;
      Vec v(2);
      v << std::sin(phi), std::cos(phi);
      dirs.push_back(std::move(v));
    }
  } else {
    const int kt = std::max(8, static_cast<int>(std::sqrt(count / 4.0)));
    const int kp = std::max(16, count / kt);
    dirs.reserve(static_cast<std::size_t>(kt) * kp + 2);
    for (int i = 0; i <= kt; ++i) {
      const double theta = M_PI * i / kt;
      for (int j = 0; j < kp; ++j) {
        const double phi = 2.0 * M_PI * j / kp;
        Vec v(3);
        v << std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
            std::cos(theta);
        dirs.push_back(std::move(v));
        if (i == 0 || i == kt) break;  // poles
      }
    }
  }
  return dirs;
}

// one-sided sign conditions of the strip on the mask, at field resolution
bool strip_signs_ok(const SpaceTimeField& field, const FrontGraph& front,
                    const Vec& center, double radius, const Vec& nu,
                    const DirWidth& dw, double eps_lambda) {
  const double margin = 1.5 * field.h() * nu.cwiseAbs().sum();
  const double t_lo = front.times.front(), t_hi = front.times.back();
  for (int l = 0; l < field.levels(); ++l) {
    const double t = field.level_time(l);
    if (t < t_lo - 1e-12 || t > t_hi + 1e-12) continue;
    const int fl = front.nearest_level(t);
    const double offset = dw.offsets[fl];
    for (int node = 0; node < field.nodes(); ++node) {
      const Vec x = field.position(node);
      if ((x - center).norm() > radius) continue;
      const double proj = (x - center).dot(nu) - offset;
      if (proj <= -(eps_lambda + margin)) {
        if (field.active(node, l)) return false;  // u must vanish below
      } else if (proj >= eps_lambda + margin) {
        if (!field.active(node, l)) return false;  // u must be positive above
      }
    }
  }
  return true;
}

}  // namespace

FlatnessReport measure_flatness(const FrontGraph& front, const SpaceTimeField& field,
                                const Vec& ball_center, double ball_radius,
                                int direction_samples) {
  if (front.levels() < 1) throw std::invalid_argument("measure_flatness: empty front");
  const int n = front.dim;
  const FrontPoints fp = collect_front_points(front, ball_center, ball_radius);

  std::vector<Vec> dirs = sample_directions(n, direction_samples);
  std::vector<std::pair<double, int>> order;
  std::vector<DirWidth> widths(dirs.size());
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    widths[k] = direction_width(fp, ball_center, dirs[k]);
    order.emplace_back(widths[k].width, static_cast<int>(k));
  }
  std::sort(order.begin(), order.end());

  FlatnessReport rep;
  rep.ball_center = ball_center;
  rep.ball_radius = ball_radius;
  rep.times = front.times;

  int best = -1;
  int checked = 0;
  for (const auto& [w, k] : order) {
    ++checked;
    if (strip_signs_ok(field, front, ball_center, ball_radius, dirs[k], widths[k], w)) {
      best = k;
      break;
    }
  }
  if (best < 0)
    throw std::runtime_error("measure_flatness: no admissible direction");

  // one local refinement pass around the winner
  if (n == 2) {
    const double phi0 = std::atan2(dirs[best][0], dirs[best][1]);
    const double step = 2.0 * M_PI / std::max(direction_samples, 4);
    Vec bestNu = dirs[best];
    DirWidth bestW = widths[best];
    for (int j = -32; j <= 32; ++j) {
      const double phi = phi0 + step * j / 32.0;
      Vec v(2);
      v << std::sin(phi), std::cos(phi);
      DirWidth dw = direction_width(fp, ball_center, v);
      if (dw.width < bestW.width &&
          strip_signs_ok(field, front, ball_center, ball_radius, v, dw, dw.width)) {
        bestW = dw;
        bestNu = v;
      }
    }
    rep.nu = bestNu;
    rep.half_widths = bestW.half_widths;
    rep.offsets = bestW.offsets;
    rep.epsilon = bestW.width / ball_radius;
  } else {
    rep.nu = dirs[best];
    rep.half_widths = widths[best].half_widths;
    rep.offsets = widths[best].offsets;
    rep.epsilon = widths[best].width / ball_radius;
  }
  rep.sign_conditions_ok = true;
  rep.directions_checked = checked;
  return rep;
}

void NondegSpec::validate() const {
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("nondeg: p0 must be in (0,1)");
  if (!(K > 1.0)) throw std::invalid_argument("nondeg: K must be > 1");
  if (f_neg_norm < 0.0 || f_norm < 0.0)
    throw std::invalid_argument("nondeg: norms must be nonnegative");
}

namespace {

std::vector<int> levels_in(const SpaceTimeField& field, double t_lo, double t_hi) {
  std::vector<int> out;
  for (int l = 0; l < field.levels(); ++l) {
    const double t = field.level_time(l);
    if (t > t_lo + 1e-15 && t <= t_hi + 1e-15) out.push_back(l);
  }
  return out;
}

}  // namespace

NondegValue nondeg_integral(const SpaceTimeField& field, const Vec& x0, double t0,
                            double r, const NondegSpec& spec, double lambda) {
  spec.validate();
  if (!(r > 0.0)) throw std::invalid_argument("nondeg_integral: r must be positive");
  const auto& dom = field.domain();
  for (int d = 0; d < field.dim(); ++d) {
    const double lo = dom.center[d] - dom.radius, hi = dom.center[d] + dom.radius;
    if (x0[d] - r < lo - 1e-12 || x0[d] + r > hi + 1e-12)
      throw std::runtime_error("nondeg_integral: cylinder exits the spatial domain");
  }
  const double t_hi = t0 + r * r / spec.K;
  if (t0 < dom.t_start - 1e-12 || t_hi > dom.t_end + 1e-12)
    throw std::runtime_error("nondeg_integral: cylinder exits the time window");
  const auto levels = levels_in(field, t0, t_hi);
  if (levels.empty())
    throw std::runtime_error("nondeg_integral: no time levels inside the cylinder");

  double sum = 0.0;
  long cells = 0;
  for (int node = 0; node < field.nodes(); ++node) {
    if ((field.position(node) - x0).norm() > r) continue;
    for (int l : levels) {
      sum += std::pow(std::max(field.value(node, l), 0.0), spec.p0);
      ++cells;
    }
  }
  NondegValue out;
  out.cells = cells;
  out.value = cells > 0 ? std::pow(sum / cells, 1.0 / spec.p0) : 0.0;
  out.threshold = spec.threshold_integral(lambda);
  out.pass = out.value >= out.threshold;
  return out;
}

NondegValue nondeg_pointwise(const SpaceTimeField& field, const Vec& x0, double t0,
                             const NondegSpec& spec, double lambda, NondegMode mode) {
  spec.validate();
  const int node = field.nearest_node(x0);
  const int level = field.nearest_level(t0);
  NondegValue out;
  out.cells = 1;
  out.value = field.value(node, level);
  out.threshold = spec.threshold_pointwise(lambda, mode == NondegMode::FullNorm);
  out.pass = out.value >= out.threshold;
  return out;
}

double g_nondeg(double y, double p0) {
  return 1.0 - std::pow(y, p0) - std::pow(1.0 - y, p0);
}

LipschitzEquivalenceReport lipschitz_equivalence_check(
    const SpaceTimeField& field, double L, const NondegSpec& spec, double lambda,
    const Vec& x0, double t0, double r) {
  spec.validate();
  LipschitzEquivalenceReport rep;
  rep.lipschitz_estimate = holder_seminorm(field, 1.0, 20000);
  rep.pointwise_value = field.value(field.nearest_node(x0), field.nearest_level(t0));

  const double A = (1.0 + spec.f_neg_norm) / spec.K;
  if (rep.lipschitz_estimate > L * (1.0 + 1e-9)) {
    rep.reason = "field exceeds the declared Lipschitz constant";
    return rep;
  }
  if (L > 2.0 * A) {
    rep.reason = "Lipschitz constant above 2 K^{-1}(1+|f^-|)";
    return rep;
  }
  if (rep.pointwise_value < A * lambda * (1.0 - 1e-12)) {
    rep.reason = "pointwise nondegeneracy fails at (x0, t0)";
    return rep;
  }
  if (!(r < lambda / 4.0)) {
    rep.reason = "r must be below lambda/4";
    return rep;
  }
  rep.applicable = true;

  rep.integral_value = nondeg_integral(field, x0, t0, r, spec, lambda).value;
  rep.bound = 0.5 * A * lambda;
  rep.pass = rep.integral_value >= rep.bound;
  rep.slack = rep.bound > 0.0 ? rep.integral_value / rep.bound : 0.0;

  rep.g_min_second_difference = 1e300;
  const double dy = 0.02;
  for (double y = 0.05; y <= 0.95; y += 0.025) {
    const double d2 = g_nondeg(y - dy, spec.p0) - 2.0 * g_nondeg(y, spec.p0) +
                      g_nondeg(y + dy, spec.p0);
    rep.g_min_second_difference = std::min(rep.g_min_second_difference, d2);
  }
  rep.g_convex = rep.g_min_second_difference >= -1e-12;
  return rep;
}

WeakHarnackResult weak_harnack_check(const SpaceTimeField& field, double f_bound,
                                     double r, double p0) {
  if (!(r < 0.25)) throw std::invalid_argument("weak_harnack: r must be below 1/4");
  if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("weak_harnack: p0 in (0,1)");
  const auto& dom = field.domain();
  const double t0 = dom.t_start;
  if (dom.t_end - t0 < 4.0 * r * r - 1e-12)
    throw std::runtime_error("weak_harnack: window shorter than 4r^2");

  const Vec c = dom.center;
  WeakHarnackResult out;
  double sum = 0.0;
  long cells = 0;
  double inf = 1e300;
  const auto early = levels_in(field, t0 + r * r, t0 + 2.0 * r * r);
  const auto late = levels_in(field, t0 + 3.0 * r * r, t0 + 4.0 * r * r);
  if (early.empty() || late.empty())
    throw std::runtime_error("weak_harnack: no levels in a measurement cylinder");
  for (int node = 0; node < field.nodes(); ++node) {
    if ((field.position(node) - c).norm() > r) continue;
    for (int l : early) {
      sum += std::pow(std::max(field.value(node, l), 0.0), p0);
      ++cells;
    }
    for (int l : late) inf = std::min(inf, field.value(node, l));
  }
  out.numerator = cells > 0 ? std::pow(sum / cells, 1.0 / p0) : 0.0;
  out.denominator = inf + r * r * f_bound;
  if (out.denominator <= 0.0) {
    if (out.numerator <= 1e-14) {
      out.ratio = 0.0;
    } else {
      out.ratio = std::numeric_limits<double>::infinity();
      out.finite = false;
    }
  } else {
    out.ratio = out.numerator / out.denominator;
  }
  return out;
}

double hopf_lower_bound(const SpaceTimeField& field, double T1, const Vec& center,
                        double radius) {
  double mu = 1e300;
  bool seen = false;
  for (int l = 0; l < field.levels(); ++l) {
    if (field.level_time(l) < T1 - 1e-15) continue;
    for (int node = 0; node < field.nodes(); ++node) {
      if (!field.active(node, l)) continue;
      const double dist = radius - (field.position(node) - center).norm();
      if (dist < 2.0 * field.h()) continue;
      mu = std::min(mu, std::max(field.value(node, l), 0.0) / dist);
      seen = true;
    }
  }
  if (!seen) throw std::runtime_error("hopf_lower_bound: no interior nodes after T1");
  return mu;
}

double hopf_lower_bound(const SpaceTimeField& field, double T1) {
  return hopf_lower_bound(field, T1, field.domain().center, field.domain().radius);
}

namespace {

double bump(double r) { return std::abs(r) < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }

double bump_mass() {
  // fine quadrature once; the kernel is smooth and compactly supported
  static const double mass = [] {
    const int N = 20000;
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
      const double r = -1.0 + (2.0 * i + 1.0) / N;
      s += bump(r) * (2.0 / N);
    }
    return s;
  }();
  return mass;
}

}  // namespace

MollifyResult mollify_coefficient(const std::vector<double>& samples,
                                  double sample_dt, double eta) {
  if (samples.empty()) throw std::invalid_argument("mollify: empty samples");
  if (!(eta > 0.0)) throw std::invalid_argument("mollify: eta must be positive");
  const double R = 0.5 * eta * eta;
  if (!(sample_dt > 0.0) || sample_dt > eta * eta / 8.0 + 1e-15)
    throw std::invalid_argument("mollify: samples must be finer than eta^2/8");

  const int m = static_cast<int>(std::floor(R / sample_dt - 1e-12));
  std::vector<double> w(2 * m + 1);
  double wsum = 0.0;
  for (int j = -m; j <= m; ++j) {
    w[j + m] = bump(j * sample_dt / R);
    wsum += w[j + m];
  }
  for (double& x : w) x /= wsum;

  const int N = static_cast<int>(samples.size());
  auto reflect = [N](int i) {
    while (i < 0 || i >= N) {
      if (i < 0) i = -i;
      if (i >= N) i = 2 * (N - 1) - i;
    }
    return i;
  };

  MollifyResult out;
  out.values.resize(N);
  for (int i = 0; i < N; ++i) {
    double s = 0.0;
    for (int j = -m; j <= m; ++j) s += w[j + m] * samples[reflect(i + j)];
    out.values[i] = s;
  }
  out.edge_samples = m;
  out.kernel_peak_over_mass = bump(0.0) / bump_mass();
  return out;
}

TrappingFit fit_trapping(const SpaceTimeSolution& solution, double eta,
                         double alpha0) {
  const auto& sc = solution.scenario;
  if (!(eta > 0.0)) throw std::invalid_argument("fit_trapping: eta must be positive");
  if (!(alpha0 > 0.0 && alpha0 <= 1.0))
    throw std::invalid_argument("fit_trapping: alpha0 must be in (0,1]");
  if (!(sc.lambda > 0.0))
    throw std::invalid_argument("fit_trapping: lambda must be positive");
  const SpaceTimeField& f = solution.field;
  if (eta < 4.0 * f.h() - 1e-12)
    throw std::invalid_argument("fit_trapping: slab unresolvable, eta < 4h");

  TrappingFit fit;
  fit.eta = eta;
  fit.alpha0 = alpha0;
  fit.gamma = alpha0 / (2.0 + alpha0);
  fit.beta = fit.gamma / 4.0;

  // slope and intercept series: the dense in-run series when present,
  // otherwise recomputed from the stored field levels
  const SlopeSeries* dense = solution.slope_series(eta);
  const int bcol = solution.front.center_column();
  if (dense != nullptr) {
    fit.times = dense->times;
    fit.a_raw = dense->abar;
    fit.b.resize(fit.times.size());
    for (std::size_t i = 0; i < fit.times.size(); ++i)
      fit.b[i] =
          solution.front.height(solution.front.nearest_level(fit.times[i]), bcol);
  } else {
    fit.times.resize(f.levels());
    fit.a_raw.resize(f.levels());
    fit.b.resize(f.levels());
    for (int l = 0; l < f.levels(); ++l) {
      const double t = f.level_time(l);
      fit.times[l] = t;
      const double b = solution.front.height(solution.front.nearest_level(t), bcol);
      fit.b[l] = b;
      double szz = 0.0, suz = 0.0;
      for (int node = 0; node < f.nodes(); ++node) {
        const Vec x = f.position(node);
        if (f.dim() > 1 && x.head(f.dim() - 1).norm() > eta) continue;
        const double z = x[f.dim() - 1] - b;
        if (z <= 0.0 || z >= eta) continue;
        szz += z * z;
        suz += f.value(node, l) * z;
      }
      fit.a_raw[l] = szz > 0.0 ? suz / szz : std::nan("");
    }
  }
  if (fit.times.size() < 2)
    throw std::runtime_error("fit_trapping: not enough time samples");
  const double dt_s = fit.times[1] - fit.times[0];
  for (double a : fit.a_raw)
    if (!std::isfinite(a) || a <= 1e-12)
      throw std::runtime_error("fit_trapping: degenerate slab fit");

  const MollifyResult mr = mollify_coefficient(fit.a_raw, dt_s, eta);
  fit.a_smooth = mr.values;
  fit.mollify_edge_samples = mr.edge_samples;

  // front ODE integrated backward from the final time (intercept zero there);
  // the midpoint value comes from a fixed index stencil so the integration is
  // independent of the time origin
  const int m = static_cast<int>(fit.times.size());
  fit.b_tilde.assign(m, 0.0);
  auto a_mid = [&](int i) {
    const auto& v = fit.a_smooth;
    if (i >= 1 && i + 2 < m)
      return (-v[i - 1] + 9.0 * v[i] + 9.0 * v[i + 1] - v[i + 2]) / 16.0;
    if (i == 0 && m >= 4)
      return 0.3125 * v[0] + 0.9375 * v[1] - 0.3125 * v[2] + 0.0625 * v[3];
    if (i + 2 == m && m >= 4)
      return 0.0625 * v[m - 4] - 0.3125 * v[m - 3] + 0.9375 * v[m - 2] +
             0.3125 * v[m - 1];
    return 0.5 * (v[i] + v[i + 1]);
  };
  for (int i = m - 2; i >= 0; --i) {
    const double dtl = dt_s;
    const double k1 = -sc.lambda * fit.a_smooth[i + 1];
    const double kmid = -sc.lambda * a_mid(i);
    const double k4 = -sc.lambda * fit.a_smooth[i];
    fit.b_tilde[i] = fit.b_tilde[i + 1] - dtl * (k1 + 4.0 * kmid + k4) / 6.0;
  }

  fit.a_min = *std::min_element(fit.a_smooth.begin(), fit.a_smooth.end());
  fit.a_max = *std::max_element(fit.a_smooth.begin(), fit.a_smooth.end());

  // trapping residual over B_eta for the last lambda^{-1} eta of the run
  const double t_end = fit.times.back();
  fit.window_start = std::max(fit.times.front(), t_end - eta / sc.lambda);
  const double s_unit = std::pow(eta, 1.0 + fit.beta);
  const Vec origin = Vec::Zero(f.dim());
  double worst = 0.0;
  for (int l = 0; l < f.levels(); ++l) {
    const double t = f.level_time(l);
    if (t < fit.window_start - 1e-12) continue;
    const int i = static_cast<int>(std::lround((t - fit.times.front()) / dt_s));
    if (i < 0 || i >= m) continue;
    const double a = fit.a_smooth[i];
    const double bt = fit.b_tilde[i];
    for (int node = 0; node < f.nodes(); ++node) {
      const Vec x = f.position(node);
      if ((x - origin).norm() > eta) continue;
      const double z = x[f.dim() - 1] - bt;
      const double u = std::max(f.value(node, l), 0.0);
      const double m_lo = std::max(0.0, (z - u / a) / s_unit);
      const double m_up = u > 0.0 ? std::max(0.0, (u / a - z) / s_unit) : 0.0;
      worst = std::max(worst, std::max(m_lo, m_up));
    }
  }
  fit.residual = worst;
  return fit;
}

}  // namespace stefanlab
