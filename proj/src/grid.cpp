#include "stefanlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stefanlab {

double parabolic_distance(const SpaceTimePoint& p, const SpaceTimePoint& q) {
  const double dx2 = (p.x - q.x).squaredNorm();
  return std::sqrt(dx2 + std::abs(p.t - q.t));
}

ParabolicCylinder ParabolicCylinder::standard(Vec center, double t0, double r) {
  ParabolicCylinder c;
  c.center = std::move(center);
  c.radius = r;
  c.t_start = t0;
  c.t_end = t0 + r * r;
  c.validate();
  return c;
}

void ParabolicCylinder::validate() const {
  if (center.size() < 1 || center.size() > 3)
    throw std::invalid_argument("cylinder: dimension must be 1, 2 or 3");
  if (!(radius > 0.0)) throw std::invalid_argument("cylinder: radius must be positive");
  if (!(t_start < t_end)) throw std::invalid_argument("cylinder: t_start < t_end required");
  if (!center.allFinite() || !std::isfinite(radius) || !std::isfinite(t_start) ||
      !std::isfinite(t_end))
    throw std::invalid_argument("cylinder: coordinates must be finite");
}

SpaceTimeField SpaceTimeField::create(const ParabolicCylinder& domain, double h,
                                      double dt, DomainShape shape,
                                      double inner_radius) {
  domain.validate();
  if (!(h > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("field: h and dt must be positive");
  if (shape == DomainShape::Annulus &&
      !(inner_radius > 0.0 && inner_radius < domain.radius))
    throw std::invalid_argument("field: annulus needs 0 < inner_radius < radius");

  SpaceTimeField f;
  f.n_ = static_cast<int>(domain.center.size());
  f.domain_ = domain;
  f.shape_ = shape;
  f.inner_radius_ = inner_radius;

  const int cells = std::max(2, static_cast<int>(std::lround(2.0 * domain.radius / h)));
  f.h_ = 2.0 * domain.radius / cells;
  for (int d = 0; d < f.n_; ++d) {
    f.npts_[d] = cells + 1;
    f.origin_[d] = domain.center[d] - domain.radius;
  }
  f.nodes_ = 1;
  for (int d = 0; d < f.n_; ++d) f.nodes_ *= f.npts_[d];

  const double T = domain.duration();
  const int steps = std::max(1, static_cast<int>(std::ceil(T / dt - 1e-12)));
  f.dt_ = T / steps;
  f.levels_ = steps + 1;
  f.times_.resize(f.levels_);
  for (int l = 0; l < f.levels_; ++l) f.times_[l] = domain.t_start + f.dt_ * l;
  f.times_.back() = domain.t_end;

  const std::size_t total = static_cast<std::size_t>(f.nodes_) * f.levels_;
  if (total > (std::size_t{1} << 29))  // ~4 GiB of values
    throw std::invalid_argument(
        "field: grid too large (" + std::to_string(f.nodes_) + " nodes x " +
        std::to_string(f.levels_) + " levels); coarsen h, dt or the store stride");
  f.values_.assign(total, 0.0);
  f.active_.assign(total, 1);

  if (shape != DomainShape::Box) {
    for (int node = 0; node < f.nodes_; ++node) {
      const double r = (f.position(node) - domain.center).norm();
      bool in = r < domain.radius - 1e-12;
      if (shape == DomainShape::Annulus) in = in && r > inner_radius + 1e-12;
      if (!in)
        for (int l = 0; l < f.levels_; ++l) f.set_active(node, l, false);
    }
  }
  return f;
}

Vec SpaceTimeField::position(int node) const {
  std::array<int, 3> mi;
  multi_index(node, mi);
  Vec x(n_);
  for (int d = 0; d < n_; ++d) x[d] = origin_[d] + h_ * mi[d];
  return x;
}

void SpaceTimeField::multi_index(int node, std::array<int, 3>& mi) const {
  mi = {0, 0, 0};
  for (int d = 0; d < n_; ++d) {
    mi[d] = node % npts_[d];
    node /= npts_[d];
  }
}

int SpaceTimeField::flat_index(const std::array<int, 3>& mi) const {
  int node = 0;
  for (int d = n_ - 1; d >= 0; --d) node = node * npts_[d] + mi[d];
  return node;
}

int SpaceTimeField::nearest_node(const Vec& x) const {
  std::array<int, 3> mi{0, 0, 0};
  for (int d = 0; d < n_; ++d) {
    int i = static_cast<int>(std::lround((x[d] - origin_[d]) / h_));
    mi[d] = std::clamp(i, 0, npts_[d] - 1);
  }
  return flat_index(mi);
}

int SpaceTimeField::nearest_level(double t) const {
  int l = static_cast<int>(std::lround((t - domain_.t_start) / dt_));
  return std::clamp(l, 0, levels_ - 1);
}

void SpaceTimeField::fill(const std::function<double(const Vec&, double)>& f) {
  for (int node = 0; node < nodes_; ++node) {
    const Vec x = position(node);
    for (int l = 0; l < levels_; ++l)
      values_[idx(node, l)] = active(node, l) ? f(x, times_[l]) : 0.0;
  }
}

bool SpaceTimeField::has_full_stencil(int node, int level) const {
  if (!active(node, level)) return false;
  std::array<int, 3> mi;
  multi_index(node, mi);
  for (int d = 0; d < n_; ++d)
    if (mi[d] < 1 || mi[d] > npts_[d] - 2) return false;
  // axis and diagonal neighbors
  std::array<int, 3> nb;
  for (int d = 0; d < n_; ++d) {
    for (int s = -1; s <= 1; s += 2) {
      nb = mi;
      nb[d] += s;
      if (!active(flat_index(nb), level)) return false;
    }
    for (int e = d + 1; e < n_; ++e) {
      for (int sd = -1; sd <= 1; sd += 2)
        for (int se = -1; se <= 1; se += 2) {
          nb = mi;
          nb[d] += sd;
          nb[e] += se;
          if (!active(flat_index(nb), level)) return false;
        }
    }
  }
  return true;
}

void SpaceTimeField::gradient_hessian(int node, int level, Vec& grad, Mat& hess) const {
  if (!has_full_stencil(node, level))
    throw StencilError("gradient_hessian: stencil crosses the mask or box boundary");
  std::array<int, 3> mi, nb;
  multi_index(node, mi);
  grad.resize(n_);
  hess.resize(n_, n_);
  const double u0 = value(node, level);
  for (int d = 0; d < n_; ++d) {
    nb = mi;
    nb[d] += 1;
    const double up = value(flat_index(nb), level);
    nb[d] -= 2;
    const double um = value(flat_index(nb), level);
    grad[d] = (up - um) / (2.0 * h_);
    hess(d, d) = (up - 2.0 * u0 + um) / (h_ * h_);
    for (int e = d + 1; e < n_; ++e) {
      double s = 0.0;
      for (int sd = -1; sd <= 1; sd += 2)
        for (int se = -1; se <= 1; se += 2) {
          nb = mi;
          nb[d] += sd;
          nb[e] += se;
          s += sd * se * value(flat_index(nb), level);
        }
      const double m = s / (4.0 * h_ * h_);
      hess(d, e) = m;
      hess(e, d) = m;
    }
  }
}

double SpaceTimeField::gradient_one_sided(int node, int level, int axis,
                                          int direction) const {
  std::array<int, 3> mi, nb;
  multi_index(node, mi);
  nb = mi;
  nb[axis] += direction;
  if (nb[axis] < 0 || nb[axis] >= npts_[axis])
    throw StencilError("gradient_one_sided: first neighbor outside box");
  const int n1 = flat_index(nb);
  nb[axis] += direction;
  if (nb[axis] < 0 || nb[axis] >= npts_[axis])
    throw StencilError("gradient_one_sided: second neighbor outside box");
  const int n2 = flat_index(nb);
  if (!active(node, level) || !active(n1, level) || !active(n2, level))
    throw StencilError("gradient_one_sided: stencil crosses the mask");
  const double u0 = value(node, level);
  const double u1 = value(n1, level);
  const double u2 = value(n2, level);
  return direction * (-3.0 * u0 + 4.0 * u1 - u2) / (2.0 * h_);
}

void SpaceTimeField::validate_finite() const {
  for (int l = 0; l < levels_; ++l)
    for (int node = 0; node < nodes_; ++node)
      if (active(node, l) && !std::isfinite(value(node, l)))
        throw std::runtime_error("field: non-finite value at active node");
}

void SpaceTimeField::shift_time(double offset) {
  domain_.t_start += offset;
  domain_.t_end += offset;
  for (double& t : times_) t += offset;
}

bool SpaceTimeField::same_layout(const SpaceTimeField& other) const {
  return n_ == other.n_ && nodes_ == other.nodes_ && levels_ == other.levels_ &&
         std::abs(h_ - other.h_) < 1e-15 && std::abs(dt_ - other.dt_) < 1e-15;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double holder_seminorm(const SpaceTimeField& field, double alpha,
                       int sample_pairs, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("holder_seminorm: alpha must be in (0,1]");
  if (sample_pairs < 1)
    throw std::invalid_argument("holder_seminorm: sample_pairs must be >= 1");

  std::vector<int> act;
  act.reserve(field.nodes());
  for (int node = 0; node < field.nodes(); ++node)
    if (field.active(node, 0)) act.push_back(node);
  if (act.empty()) return 0.0;

  // aligned pairs: nearest neighbors along each space axis and in time
  struct Pair {
    int n1, l1, n2, l2;
  };
  std::vector<Pair> aligned;
  std::array<int, 3> mi, nb;
  for (int node : act) {
    field.multi_index(node, mi);
    for (int d = 0; d < field.dim(); ++d) {
      nb = mi;
      nb[d] += 1;
      if (nb[d] < field.points_per_axis(d)) {
        const int other = field.flat_index(nb);
        if (field.active(other, 0)) aligned.push_back({node, 0, other, 0});
      }
    }
    if (field.levels() > 1) aligned.push_back({node, 0, node, 1});
  }

  double best = 0.0;
  const int N = static_cast<int>(act.size());
  const int L = field.levels();
  for (int k = 0; k < sample_pairs; ++k) {
    Pair p;
    if (k % 2 == 0 && !aligned.empty()) {
      p = aligned[(k / 2) % aligned.size()];
    } else {
      const std::uint64_t r = splitmix64(seed ^ (0x51ab'cd00ULL + k));
      p.n1 = act[r % N];
      p.l1 = static_cast<int>((r >> 20) % L);
      const std::uint64_t r2 = splitmix64(r);
      p.n2 = act[r2 % N];
      p.l2 = static_cast<int>((r2 >> 20) % L);
    }
    if (p.n1 == p.n2 && p.l1 == p.l2) continue;
    if (!field.active(p.n1, p.l1) || !field.active(p.n2, p.l2)) continue;
    SpaceTimePoint a{field.position(p.n1), field.level_time(p.l1)};
    SpaceTimePoint b{field.position(p.n2), field.level_time(p.l2)};
    const double d = parabolic_distance(a, b);
    if (d <= 0.0) continue;
    const double osc = std::abs(field.value(p.n1, p.l1) - field.value(p.n2, p.l2));
    best = std::max(best, osc / std::pow(d, alpha));
  }
  return best;
}

}  // namespace stefanlab
