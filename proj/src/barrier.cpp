#include "stefanlab/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stefanlab/parallel.hpp"

namespace stefanlab {

namespace {

double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

constexpr int kBases[4] = {2, 3, 5, 7};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct SamplePoint {
  Vec x;
  double t;
};

// quasi-random points of region cap {positive}; the sequence is a function of
// (region, seed) alone and sample counts give nested prefixes
std::vector<SamplePoint> interior_points(const ClosedFormCandidate& cand,
                                         const Region& region, int n, int samples,
                                         std::uint64_t seed) {
  std::vector<SamplePoint> pts;
  pts.reserve(samples);
  const std::uint64_t offset = 1 + (seed % 1000003ULL);
  std::uint64_t idx = offset;
  long guard = 0;
  while (static_cast<int>(pts.size()) < samples) {
    if (++guard > 2000L * samples + 100000L)
      throw std::runtime_error("certify: empty sample region");
    const double t =
        region.t_start + (region.t_end - region.t_start) * halton(idx, kBases[3]);
    Vec x(n);
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) {
      x[d] = 2.0 * halton(idx, kBases[d]) - 1.0;
      r2 += x[d] * x[d];
    }
    ++idx;
    if (r2 > 1.0) continue;
    x = region.center_at(t) + region.radius * x;
    if (!cand.positive(x, t)) continue;
    pts.push_back({std::move(x), t});
  }
  return pts;
}

}  // namespace

bool derivative_selftest(const ClosedFormCandidate& cand, const Region& region,
                         int points, std::uint64_t seed, double* worst_relerr) {
  const int n = static_cast<int>(region.center_at(region.t_start).size());
  const auto pts = interior_points(cand, region, n, points * 3, seed ^ 0xdead);
  const double hs = 1.2e-4;
  double worst = 0.0;
  int used = 0;
  for (const auto& p : pts) {
    if (used >= points) break;
    // keep the whole finite-difference stencil inside the smooth region
    bool inside = true;
    for (int d = 0; d < n && inside; ++d)
      for (int s = -1; s <= 1 && inside; s += 2) {
        Vec q = p.x;
        q[d] += 2.0 * s * hs;
        if (!cand.positive(q, p.t)) inside = false;
      }
    if (!inside || !cand.positive(p.x, p.t - hs) || !cand.positive(p.x, p.t + hs))
      continue;
    ++used;
    const Vec g = cand.gradient(p.x, p.t);
    const Mat H = cand.hessian(p.x, p.t);
    const double ut = cand.dudt(p.x, p.t);
    const double u0 = cand.value(p.x, p.t);
    for (int d = 0; d < n; ++d) {
      Vec qp = p.x, qm = p.x;
      qp[d] += hs;
      qm[d] -= hs;
      const double up = cand.value(qp, p.t), um = cand.value(qm, p.t);
      worst = std::max(worst, std::abs((up - um) / (2 * hs) - g[d]) /
                                  (1.0 + std::abs(g[d])));
      worst = std::max(worst, std::abs((up - 2 * u0 + um) / (hs * hs) - H(d, d)) /
                                  (1.0 + std::abs(H(d, d))));
      for (int e = d + 1; e < n; ++e) {
        Vec a = p.x, b = p.x, c = p.x, dd = p.x;
        a[d] += hs; a[e] += hs;
        b[d] += hs; b[e] -= hs;
        c[d] -= hs; c[e] += hs;
        dd[d] -= hs; dd[e] -= hs;
        const double mixed = (cand.value(a, p.t) - cand.value(b, p.t) -
                              cand.value(c, p.t) + cand.value(dd, p.t)) /
                             (4 * hs * hs);
        worst = std::max(worst,
                         std::abs(mixed - H(d, e)) / (1.0 + std::abs(H(d, e))));
      }
    }
    const double ut_fd =
        (cand.value(p.x, p.t + hs) - cand.value(p.x, p.t - hs)) / (2 * hs);
    worst = std::max(worst, std::abs(ut_fd - ut) / (1.0 + std::abs(ut)));
  }
  if (worst_relerr) *worst_relerr = worst;
  return used > 0 && worst <= 1e-6;
}

BarrierCertificate certify(const ClosedFormCandidate& cand,
                           const EllipticOperatorSpec& op, double source_bound,
                           double lambda, const Region& region, int samples,
                           std::uint64_t seed) {
  op.validate();
  if (!cand.value || !cand.gradient || !cand.hessian || !cand.dudt || !cand.positive)
    throw std::invalid_argument("certify: candidate closures incomplete");
  const int n = static_cast<int>(region.center_at(region.t_start).size());

  BarrierCertificate cert;
  cert.candidate_id = cand.id;
  cert.operator_name = op.name();
  cert.kind = cand.kind;
  cert.source_bound = source_bound;
  cert.lambda = lambda;
  cert.seed = seed;
  cert.derivative_selftest_pass =
      derivative_selftest(cand, region, std::min(1000, samples), seed,
                          &cert.selftest_worst_relerr);
  if (!cert.derivative_selftest_pass)
    throw std::runtime_error("certify: derivative self-test failed, worst relerr " +
                             std::to_string(cert.selftest_worst_relerr));

  const bool super = cand.kind == BarrierKind::Supersolution;
  const double rhs_level = (super ? 1.0 : -1.0) * lambda * source_bound;

  const auto pts = interior_points(cand, region, n, samples, seed);
  const int chunks = chunk_count(static_cast<int>(pts.size()));
  std::vector<double> chunk_worst(chunks, super ? 1e300 : -1e300);
  parallel_chunks(static_cast<int>(pts.size()), [&](int c, int begin, int end) {
    double w = super ? 1e300 : -1e300;
    for (int i = begin; i < end; ++i) {
      const double defect = cand.dudt(pts[i].x, pts[i].t) -
                            operator_eval(op, cand.hessian(pts[i].x, pts[i].t)) -
                            rhs_level;
      w = super ? std::min(w, defect) : std::max(w, defect);
    }
    chunk_worst[c] = w;
  });
  double interior_worst = super ? 1e300 : -1e300;
  for (double w : chunk_worst)
    interior_worst = super ? std::min(interior_worst, w) : std::max(interior_worst, w);
  cert.interior_worst_margin = interior_worst;
  cert.interior_samples = static_cast<long>(pts.size());

  if (cand.front_point) {
    cert.has_front = true;
    double front_worst = super ? 1e300 : -1e300;
    const std::uint64_t offset = 1 + (seed % 1000003ULL);
    for (int k = 0; k < samples; ++k) {
      const double t = region.t_start + (region.t_end - region.t_start) *
                                            halton(offset + k, kBases[3]);
      const Vec x = cand.front_point(t, offset + k);
      const double defect =
          cand.dudt(x, t) - lambda * cand.gradient(x, t).squaredNorm();
      front_worst = super ? std::min(front_worst, defect) : std::max(front_worst, defect);
    }
    cert.front_worst_margin = front_worst;
    cert.front_samples = samples;
  }

  const bool interior_ok = super ? cert.interior_worst_margin > 0.0
                                 : cert.interior_worst_margin < 0.0;
  const bool front_ok = !cert.has_front ||
                        (super ? cert.front_worst_margin > 0.0
                               : cert.front_worst_margin < 0.0);
  cert.verdict = interior_ok && front_ok;
  return cert;
}

// ---------------------------------------------------------------------------

void HopfBarrierParams::validate() const {
  if (n < 1 || n > 3) throw std::invalid_argument("hopf: n must be 1, 2 or 3");
  if (!(K >= 1.0)) throw std::invalid_argument("hopf: K must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("hopf: delta must be in (0,1]");
  if (!(T > 0.0)) throw std::invalid_argument("hopf: T must be positive");
  const double lhs = (T + a) / (4.0 * a);
  const double rhs = 2.0 / (delta * delta);
  if (std::abs(lhs - rhs) > 1e-12 * rhs)
    throw std::logic_error("hopf: (T+a)/(4a) = 2/delta^2 violated");
  if (!(b_exp * (T + a) < K))
    throw std::runtime_error("hopf: monotonicity b(T+a) < K fails; iterate in T");
}

HopfBarrierParams hopf_params(int n, double K, double delta, double T) {
  HopfBarrierParams p;
  p.n = n;
  p.K = K;
  p.delta = delta;
  p.T = T;
  p.a = T * delta * delta / (8.0 - delta * delta);
  const double log_ratio = std::log(1.0 + T / p.a);  // = log(8/delta^2)
  p.b_exp = K / ((T + p.a) * log_ratio);
  const double la = -p.b_exp * std::log(p.a);
  p.log_F = -p.b_exp * std::log(T + p.a) - K / (T + p.a);
  if (!(p.log_F < la))
    throw std::runtime_error("hopf: normalization D = a^{-b} - F must be positive");
  p.log_D = la + std::log1p(-std::exp(p.log_F - la));
  p.validate();
  return p;
}

double hopf_value(const HopfBarrierParams& p, const Vec& x, double t) {
  const double lE = -p.b_exp * std::log(t + p.a) - p.K * x.squaredNorm() / (t + p.a);
  return std::exp(lE - p.log_D) - std::exp(p.log_F - p.log_D);
}

ClosedFormCandidate hopf_candidate(const HopfBarrierParams& p) {
  ClosedFormCandidate c;
  c.id = "hopf_h";
  c.kind = BarrierKind::Subsolution;  // of d_t v - M^-_K(D^2 v) = -kappa
  auto ED = [p](const Vec& x, double t) {
    const double lE = -p.b_exp * std::log(t + p.a) - p.K * x.squaredNorm() / (t + p.a);
    return std::exp(lE - p.log_D);
  };
  c.value = [p](const Vec& x, double t) { return hopf_value(p, x, t); };
  c.gradient = [p, ED](const Vec& x, double t) {
    return Vec(ED(x, t) * (-2.0 * p.K / (t + p.a)) * x);
  };
  c.hessian = [p, ED](const Vec& x, double t) {
    const int n = static_cast<int>(x.size());
    const double ta = t + p.a;
    Mat H = 2.0 * p.K * x * x.transpose();
    H -= ta * Mat::Identity(n, n);
    return Mat(ED(x, t) * (2.0 * p.K / (ta * ta)) * H);
  };
  c.dudt = [p, ED](const Vec& x, double t) {
    const double ta = t + p.a;
    return ED(x, t) / (ta * ta) * (p.K * x.squaredNorm() - p.b_exp * ta);
  };
  c.positive = [](const Vec&, double) { return true; };
  return c;
}

double hopf_critical_T(int n, double K, double delta) {
  auto excess = [&](double T) {
    // b_exp decreases in T; the condition wants 2nK^2 - b_exp < 0
    const double a = T * delta * delta / (8.0 - delta * delta);
    const double b = K / ((T + a) * std::log(1.0 + T / a));
    return 2.0 * n * K * K - b;
  };
  double lo = 1e-12, hi = 1e-12;
  while (excess(hi) < 0.0 && hi < 1e6) hi *= 2.0;
  if (hi >= 1e6) return hi;  // condition holds for every practical T
  while (excess(lo) > 0.0 && lo > 1e-300) lo /= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  return lo;
}

HopfCertificate certify_hopf(const HopfBarrierParams& p, int samples_per_axis) {
  HopfCertificate cert;
  cert.params = p;
  const int n = p.n;
  const int spa = samples_per_axis;
  double worst = -1e300;
  long count = 0;

  // spatial grid of cell centers in B_1, time grid in (0, T]
  std::vector<Vec> xs;
  {
    std::array<int, 3> mi{0, 0, 0};
    const long total = static_cast<long>(std::pow(spa, n));
    for (long k = 0; k < total; ++k) {
      long r = k;
      Vec x(n);
      double r2 = 0.0;
      for (int d = 0; d < n; ++d) {
        mi[d] = static_cast<int>(r % spa);
        r /= spa;
        x[d] = -1.0 + (2.0 * mi[d] + 1.0) / spa;
        r2 += x[d] * x[d];
      }
      if (r2 < 1.0) xs.push_back(std::move(x));
    }
  }
  for (int j = 0; j < spa; ++j) {
    const double t = p.T * (j + 1) / spa;
    const double ta = t + p.a;
    for (const Vec& x : xs) {
      const double x2 = x.squaredNorm();
      // eigenvalues of S = (2K/ta^2)[2K x x^T - ta I]
      const double ev_r = 2.0 * p.K * (2.0 * p.K * x2 - ta) / (ta * ta);
      const double ev_t = -2.0 * p.K / ta;
      double mminus = ev_r > 0.0 ? ev_r / p.K : ev_r * p.K;
      if (n > 1) mminus += (n - 1) * (ev_t > 0.0 ? ev_t / p.K : ev_t * p.K);
      const double margin = (p.K * x2 - p.b_exp * ta) - ta * ta * mminus;
      worst = std::max(worst, margin);
      ++count;
    }
  }
  cert.worst_scaled_margin = worst;
  cert.kappa = -worst;
  cert.pass = worst < 0.0;
  cert.samples = count;

  // d_t h > 0 along the sides |x| = 1: sign of K - b_exp (t+a)
  double side_min = 1e300;
  for (int j = 0; j < spa; ++j) {
    const double t = p.T * (j + 1) / spa;
    side_min = std::min(side_min, p.K - p.b_exp * (t + p.a));
  }
  cert.time_monotone_on_sides = side_min > 0.0;
  return cert;
}

// ---------------------------------------------------------------------------

double lemma31_g(double s, int n) {
  return s > 0.0 ? (1.0 - std::exp(-2.0 * n * s)) / (2.0 * n) : 0.0;
}

double lemma31_g_prime(double s, int n) {
  return s >= 0.0 ? std::exp(-2.0 * n * s) : 0.0;
}

ClosedFormCandidate lemma31_w(double C0, double lambda, int n, double speed_factor) {
  if (!(C0 > 0.0)) throw std::invalid_argument("lemma31_w: C0 must be positive");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("lemma31_w: lambda must be in [0,1]");
  ClosedFormCandidate c;
  std::ostringstream id;
  id << "lemma31_w_C0_" << C0 << "_lambda_" << lambda << "_speed_" << speed_factor;
  c.id = id.str();
  c.kind = BarrierKind::Supersolution;
  const double rate = C0 * lambda * speed_factor;
  auto radius = [rate](double t) { return 1.0 - rate * t; };

  c.value = [C0, n, radius](const Vec& x, double t) {
    return C0 * lemma31_g(x.norm() - radius(t), n);
  };
  c.gradient = [C0, n, radius](const Vec& x, double t) {
    const double r = x.norm();
    const double s = r - radius(t);
    if (s < -1e-12 || r < 1e-12) return Vec(Vec::Zero(x.size()));
    return Vec(C0 * lemma31_g_prime(std::max(s, 0.0), n) / r * x);
  };
  c.hessian = [C0, n, radius](const Vec& x, double t) {
    const int d = static_cast<int>(x.size());
    const double r = x.norm();
    const double s = std::max(r - radius(t), 0.0);
    if (r - radius(t) < -1e-12 || r < 1e-12) return Mat(Mat::Zero(d, d));
    const double gp = lemma31_g_prime(s, n);
    const double gpp = -2.0 * n * gp;
    const Vec xhat = x / r;
    Mat H = (C0 * gp / r) * (Mat::Identity(d, d) - xhat * xhat.transpose());
    H += (C0 * gpp) * (xhat * xhat.transpose());
    return H;
  };
  c.dudt = [C0, n, rate, radius](const Vec& x, double t) {
    const double s = x.norm() - radius(t);
    return s >= -1e-12 ? C0 * rate * lemma31_g_prime(std::max(s, 0.0), n) : 0.0;
  };
  c.positive = [radius](const Vec& x, double t) { return x.norm() > radius(t); };
  c.front_point = [n, radius](double t, std::uint64_t k) {
    Vec x(n);
    if (n == 1) {
      x[0] = (k % 2 == 0) ? radius(t) : -radius(t);
      return x;
    }
    for (int d = 0; d < n; ++d) {
      const std::uint64_t r = splitmix64(k * 3 + d);
      x[d] = static_cast<double>(static_cast<std::int64_t>(r >> 11)) / (1ll << 52) - 1.0;
    }
    if (x.norm() < 1e-9) x[0] = 1.0;
    return Vec(radius(t) / x.norm() * x);
  };
  return c;
}

Lemma31Search lemma31_search(int n, const EllipticOperatorSpec& op, double f_sup,
                             const std::vector<double>& C0_list,
                             const std::vector<double>& lambda_list,
                             const std::vector<double>& speed_factors,
                             int samples, std::uint64_t seed) {
  Lemma31Search out;
  for (double lambda : lambda_list)
    for (double C0 : C0_list)
      for (double sf : speed_factors) {
        Lemma31SearchRow row;
        row.C0 = C0;
        row.lambda = lambda;
        row.speed_factor = sf;

        // stop before the shrinking front radius reaches 1/2
        const double rate = C0 * lambda * sf;
        const double t_end = rate > 0.0 ? std::min(1.0, 0.5 / rate) : 1.0;
        Region region;
        region.t_start = 0.0;
        region.t_end = t_end;
        region.center = Vec::Zero(n);
        region.radius = 2.0;
        const auto cand = lemma31_w(C0, lambda, n, sf);
        const auto cert = certify(cand, op, f_sup, lambda, region, samples, seed);
        row.certified = cert.verdict;
        row.interior_margin = cert.interior_worst_margin;
        row.front_margin = cert.front_worst_margin;

        // strict constant chain: C0 g'(C0 lambda - 4nK) > f with g' at its minimum
        const double gp_min = std::exp(-2.0 * n * (1.0 + rate));
        row.strict_chain_value = C0 * gp_min * (C0 * lambda - 4.0 * n * op.K);
        row.strict_chain_holds = row.strict_chain_value > lambda * f_sup;
        out.strict_chain_satisfiable |= row.strict_chain_holds;

        if (row.certified && out.first_certified < 0)
          out.first_certified = static_cast<int>(out.rows.size());
        out.rows.push_back(row);
      }
  return out;
}

// ---------------------------------------------------------------------------

double section3_d(const Section3Params& p, double t) {
  return p.b_tilde.value(t) + p.C1 * std::pow(p.eta, p.gamma / 2.0) * p.lambda * t;
}

double section3_front_height(const Section3Params& p, const Vec& xprime) {
  const double q = std::pow(p.eta, p.gamma / 2.0 - 1.0);
  const double c = p.C3 * q;
  const double rhs = q * xprime.squaredNorm();
  // c z^2 + z - rhs = 0, positive root near zero
  return (-1.0 + std::sqrt(1.0 + 4.0 * c * rhs)) / (2.0 * c);
}

ClosedFormCandidate section3_v(const Section3Params& p) {
  if (!(p.eta > 0.0)) throw std::invalid_argument("section3_v: eta must be positive");
  const double scale = 1.0 - p.C2 * std::pow(p.eta, p.gamma / 2.0);
  if (!(scale > 0.0))
    throw std::invalid_argument("section3_v: eta too large, 1 - C2 eta^{gamma/2} <= 0");
  const double q = std::pow(p.eta, p.gamma / 2.0 - 1.0);
  const double pgl = std::pow(p.eta, p.gamma / 2.0) * p.lambda;
  const int n = p.n;

  auto dshift = [p](double t) { return section3_d(p, t); };
  auto hfun = [q, C3 = p.C3, n](const Vec& xi) {
    double xp2 = 0.0;
    for (int d = 0; d < n - 1; ++d) xp2 += xi[d] * xi[d];
    const double zn = xi[n - 1];
    return zn - q * (xp2 - C3 * zn * zn);
  };

  ClosedFormCandidate c;
  std::ostringstream id;
  id << "section3_v_eta_" << p.eta << "_C1_" << p.C1 << "_C2_" << p.C2 << "_C3_"
     << p.C3;
  c.id = id.str();
  c.kind = BarrierKind::Subsolution;
  c.value = [=](const Vec& x, double t) {
    Vec xi = x;
    xi[n - 1] -= dshift(t);
    const double h = hfun(xi);
    return h > 0.0 ? scale * p.a_bar.value(t) * h : 0.0;
  };
  c.gradient = [=](const Vec& x, double t) {
    Vec xi = x;
    xi[n - 1] -= dshift(t);
    Vec g = Vec::Zero(n);
    if (hfun(xi) < -1e-12) return g;
    for (int d = 0; d < n - 1; ++d) g[d] = -2.0 * q * xi[d];
    g[n - 1] = 1.0 + 2.0 * p.C3 * q * xi[n - 1];
    return Vec(scale * p.a_bar.value(t) * g);
  };
  c.hessian = [=](const Vec& x, double t) {
    Vec xi = x;
    xi[n - 1] -= dshift(t);
    Mat H = Mat::Zero(n, n);
    if (hfun(xi) < -1e-12) return H;
    for (int d = 0; d < n - 1; ++d) H(d, d) = -2.0 * q;
    H(n - 1, n - 1) = 2.0 * p.C3 * q;
    return Mat(scale * p.a_bar.value(t) * H);
  };
  c.dudt = [=](const Vec& x, double t) {
    Vec xi = x;
    xi[n - 1] -= dshift(t);
    const double h = hfun(xi);
    if (h < -1e-12) return 0.0;
    const double hn = 1.0 + 2.0 * p.C3 * q * xi[n - 1];
    const double dprime = p.b_tilde.derivative(t) + p.C1 * pgl;
    return scale * (p.a_bar.derivative(t) * h - p.a_bar.value(t) * hn * dprime);
  };
  c.positive = [=](const Vec& x, double t) {
    Vec xi = x;
    xi[n - 1] -= dshift(t);
    return hfun(xi) > 0.0;
  };
  c.front_point = [=](double t, std::uint64_t k) {
    Vec xp = Vec::Zero(std::max(1, n - 1));
    if (n > 1) {
      // quasi-random point of the disc |x'| <= 1.9 eta
      double r2 = 2.0;
      std::uint64_t idx = k;
      while (r2 > 1.0) {
        r2 = 0.0;
        for (int d = 0; d < n - 1; ++d) {
          xp[d] = 2.0 * halton(idx, kBases[d]) - 1.0;
          r2 += xp[d] * xp[d];
        }
        ++idx;
      }
      xp *= 1.9 * p.eta;
    }
    Vec x(n);
    for (int d = 0; d < n - 1; ++d) x[d] = xp[d];
    x[n - 1] = dshift(t) + section3_front_height(p, xp);
    return x;
  };
  return c;
}

Section3Checks section3_checks(const Section3Params& p, double t_start,
                               double t_end, int samples, std::uint64_t seed) {
  Section3Checks out;
  const auto cand = section3_v(p);
  const double sep_target = std::pow(p.eta, 1.0 + p.gamma / 2.0);
  const std::uint64_t offset = 1 + (seed % 1000003ULL);
  out.ordering_ok = true;
  out.separation_min = 1e300;
  for (int k = 0; k < samples; ++k) {
    const double t = t_start + (t_end - t_start) * halton(offset + k, 7);
    const double d = section3_d(p, t);
    // interior ordering sample in the ball B_{2 eta}(d e_n)
    Vec y(p.n);
    double r2 = 2.0;
    std::uint64_t idx = offset + k;
    while (r2 > 1.0) {
      r2 = 0.0;
      for (int dd = 0; dd < p.n; ++dd) {
        y[dd] = 2.0 * halton(idx, kBases[dd]) - 1.0;
        r2 += y[dd] * y[dd];
      }
      idx += 7919;
    }
    Vec x = 2.0 * p.eta * y;
    x[p.n - 1] += d;
    const double plane = p.a_bar.value(t) * std::max(0.0, x[p.n - 1] - d);
    if (cand.value(x, t) > plane + 1e-12) out.ordering_ok = false;

    // boundary separation sample on the sphere |x - d e_n| = 2 eta
    Vec sphere = y / std::sqrt(r2);
    Vec xb = 2.0 * p.eta * sphere;
    xb[p.n - 1] += d;
    const double vb = cand.value(xb, t);
    if (vb > 0.0) {
      const double planeb = p.a_bar.value(t) * std::max(0.0, xb[p.n - 1] - d);
      out.separation_min = std::min(out.separation_min, planeb - vb);
    }
  }
  out.separation_ok = out.separation_min >= sep_target;
  return out;
}

Section3Search section3_search(const Section3Params& base,
                               const std::vector<double>& C3_list, double f_neg_sup,
                               double t_start, double t_end, int samples,
                               std::uint64_t seed) {
  Section3Search out;
  std::ostringstream box;
  // sup of a_bar over the window sets the front-condition constant
  double a_sup = 0.0;
  for (int i = 0; i <= 64; ++i)
    a_sup = std::max(a_sup, base.a_bar.value(t_start + (t_end - t_start) * i / 64.0));

  for (double C3 : C3_list) {
    Section3Params p = base;
    p.C3 = C3;
    // the ordering needs C2 >= 2 C3 plus a margin; the margin also carries
    // the boundary separation when n = 1, where the |x'|^2 bend is absent
    p.C2 = 2.0 * C3 + 0.6;
    p.C1 = 2.0 * p.C2 * a_sup + 1.0;
    box << "(C1=" << p.C1 << ",C2=" << p.C2 << ",C3=" << C3 << ") ";
    ClosedFormCandidate cand;
    try {
      cand = section3_v(p);
    } catch (const std::exception&) {
      continue;  // eta too large for these constants
    }
    Region region;
    region.t_start = t_start;
    region.t_end = t_end;
    region.radius = 2.0 * p.eta;
    region.center = Vec::Zero(p.n);
    region.moving_center = [p](double t) {
      Vec c = Vec::Zero(p.n);
      c[p.n - 1] = section3_d(p, t);
      return c;
    };
    EllipticOperatorSpec op{OperatorKind::PucciPlus, base.K, {}};
    const auto cert = certify(cand, op, f_neg_sup, p.lambda, region, samples, seed);
    const auto checks = section3_checks(p, t_start, t_end, samples, seed);
    if (cert.verdict && checks.ordering_ok && checks.separation_ok) {
      out.params = p;
      out.found = true;
      out.certificate = cert;
      out.checks = checks;
      break;
    }
    if (!out.found) {
      out.params = p;
      out.certificate = cert;
      out.checks = checks;
    }
  }
  out.box = box.str();
  return out;
}

// ---------------------------------------------------------------------------

TouchingReport detect_touching(const SpaceTimeField& field,
                               const ClosedFormCandidate& candidate,
                               const Region& region, double tolerance) {
  TouchingReport rep;
  rep.min_difference = 1e300;
  rep.max_difference = -1e300;
  std::vector<ContactPoint> raw;
  for (int l = 0; l < field.levels(); ++l) {
    const double t = field.level_time(l);
    if (t < region.t_start - 1e-15 || t > region.t_end + 1e-15) continue;
    const Vec c = region.center_at(t);
    for (int node = 0; node < field.nodes(); ++node) {
      const Vec x = field.position(node);
      if ((x - c).norm() > region.radius) continue;
      const double phi = candidate.value(x, t);
      const double diff = field.value(node, l) - phi;
      rep.min_difference = std::min(rep.min_difference, diff);
      rep.max_difference = std::max(rep.max_difference, diff);
      if (std::abs(diff) <= tolerance)
        raw.push_back({node, l, diff, !(candidate.positive(x, t) && phi > tolerance)});
    }
  }
  rep.one_sided =
      rep.min_difference >= -tolerance || rep.max_difference <= tolerance;
  if (rep.one_sided) rep.contacts = std::move(raw);
  return rep;
}

}  // namespace stefanlab
