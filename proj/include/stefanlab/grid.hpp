#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stefanlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct SpaceTimePoint {
  Vec x;
  double t = 0.0;
};

/// Parabolic distance (|x-y|^2 + |t-s|)^{1/2}.
double parabolic_distance(const SpaceTimePoint& p, const SpaceTimePoint& q);

/// Cylinder B_radius(center) x (t_start, t_end]. The standard cylinder of
/// radius r has t_end - t_start = r^2.
struct ParabolicCylinder {
  Vec center;
  double radius = 1.0;
  double t_start = 0.0;
  double t_end = 1.0;

  static ParabolicCylinder standard(Vec center, double t0, double r);
  void validate() const;
  double duration() const { return t_end - t_start; }
};

enum class DomainShape { Box, Ball, Annulus };

class StencilError : public std::runtime_error {
public:
  explicit StencilError(const std::string& what) : std::runtime_error(what) {}
};

/// Scalar field on a uniform space-time grid over the bounding box of a
/// parabolic cylinder. Balls and annuli are realized as masks over the box.
/// The per-node, per-level mask marks membership in the positivity set.
class SpaceTimeField {
public:
  SpaceTimeField() = default;

  // h and dt are adjusted to divide the box and the time window exactly;
  // the effective values are what h() and dt() report.
  static SpaceTimeField create(const ParabolicCylinder& domain, double h,
                               double dt, DomainShape shape = DomainShape::Ball,
                               double inner_radius = 0.0);

  int dim() const { return n_; }
  double h() const { return h_; }
  double dt() const { return dt_; }
  const ParabolicCylinder& domain() const { return domain_; }
  DomainShape shape() const { return shape_; }
  double inner_radius() const { return inner_radius_; }

  int nodes() const { return nodes_; }
  int levels() const { return levels_; }
  int points_per_axis(int axis) const { return npts_[axis]; }

  double level_time(int level) const { return times_[level]; }
  const std::vector<double>& times() const { return times_; }

  Vec position(int node) const;
  void multi_index(int node, std::array<int, 3>& mi) const;
  int flat_index(const std::array<int, 3>& mi) const;
  /// Nearest grid node to x (clamped to the box).
  int nearest_node(const Vec& x) const;
  int nearest_level(double t) const;
  double coordinate(int axis, int index) const {
    return origin_[axis] + h_ * index;
  }

  double value(int node, int level) const { return values_[idx(node, level)]; }
  double& value(int node, int level) { return values_[idx(node, level)]; }
  bool active(int node, int level) const { return active_[idx(node, level)] != 0; }
  void set_active(int node, int level, bool a) { active_[idx(node, level)] = a ? 1 : 0; }

  const std::vector<double>& raw_values() const { return values_; }
  std::vector<double>& raw_values() { return values_; }
  const std::vector<std::uint8_t>& raw_mask() const { return active_; }
  std::vector<std::uint8_t>& raw_mask() { return active_; }

  /// Fill all levels from a closure; inactive nodes are set to zero.
  void fill(const std::function<double(const Vec&, double)>& f);

  /// True when every spatial stencil neighbor (axis and diagonal) of the node
  /// is inside the box and active at the given level.
  bool has_full_stencil(int node, int level) const;

  /// Centered second-order gradient and Hessian in space. Exact on quadratic
  /// fields. Throws StencilError when the stencil crosses the mask.
  void gradient_hessian(int node, int level, Vec& grad, Mat& hess) const;

  /// One-sided second-order first derivative along an axis (direction +1/-1),
  /// for use next to masked boundaries.
  double gradient_one_sided(int node, int level, int axis, int direction) const;

  void validate_finite() const;

  bool same_layout(const SpaceTimeField& other) const;

  /// Relabels level times by a constant offset (values untouched).
  void shift_time(double offset);

private:
  std::size_t idx(int node, int level) const {
    return static_cast<std::size_t>(level) * nodes_ + node;
  }

  int n_ = 0;
  double h_ = 0.0, dt_ = 0.0;
  ParabolicCylinder domain_;
  DomainShape shape_ = DomainShape::Box;
  double inner_radius_ = 0.0;
  std::array<int, 3> npts_{1, 1, 1};
  std::array<double, 3> origin_{0.0, 0.0, 0.0};
  int nodes_ = 0;
  int levels_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> active_;
  std::vector<double> times_;
};

/// Estimated parabolic Hoelder seminorm of order alpha over sampled node
/// pairs. The pair sequence is deterministic given the seed and is nested:
/// a larger sample_pairs count extends the smaller one, so the estimate is
/// monotone nondecreasing in sample_pairs. Axis-aligned neighbor pairs are
/// interleaved with long-range random pairs.
double holder_seminorm(const SpaceTimeField& field, double alpha,
                       int sample_pairs, std::uint64_t seed = 2026);

}  // namespace stefanlab
