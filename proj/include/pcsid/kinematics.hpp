#pragma once

// Planar piecewise-constant-strain (PCS) kinematics.
//
// Conventions: the undeformed backbone points along +y of the base frame.
// An orientation theta rotates the body frame so that its tangent axis is
// (sin theta, cos theta) in world coordinates; positive bending therefore
// curls the backbone toward +x. The body-frame strain of a segment is the
// vector (sigma_sh, 1 + sigma_ax) in (normal, tangent) components.

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <vector>

#include "pcsid/dual.hpp"
#include "pcsid/errors.hpp"

namespace pcsid {

template <class T>
struct PoseT {
  T px{};
  T py{};
  T theta{};
};

using Pose2 = PoseT<double>;

struct SegmentStrains {
  double kappa_be = 0.0;  // 1/m
  double sigma_sh = 0.0;  // -
  double sigma_ax = 0.0;  // -
};

// Number of configuration coordinates per segment: bending, shear, axial.
inline constexpr int kStrainsPerSegment = 3;

enum class StrainKind { Bending = 0, Shear = 1, Axial = 2 };

inline StrainKind strain_kind_of(int coordinate) {
  return static_cast<StrainKind>(coordinate % kStrainsPerSegment);
}

class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<SegmentStrains> segments);
  static Configuration zeros(int num_segments);
  static Configuration from_vector(const Eigen::VectorXd& q);

  int num_segments() const { return static_cast<int>(segments_.size()); }
  int num_coordinates() const { return kStrainsPerSegment * num_segments(); }
  const SegmentStrains& segment(int i) const { return segments_.at(static_cast<std::size_t>(i)); }
  SegmentStrains& segment(int i) { return segments_.at(static_cast<std::size_t>(i)); }
  const std::vector<SegmentStrains>& segments() const { return segments_; }

  // Flattened as (kappa_1, sigma_sh_1, sigma_ax_1, kappa_2, ...).
  Eigen::VectorXd to_vector() const;

 private:
  std::vector<SegmentStrains> segments_;
};

class RobotGeometry {
 public:
  RobotGeometry() = default;
  RobotGeometry(std::vector<double> segment_lengths, double cross_section_area, double second_moment);

  int num_segments() const { return static_cast<int>(lengths_.size()); }
  int num_coordinates() const { return kStrainsPerSegment * num_segments(); }
  const std::vector<double>& segment_lengths() const { return lengths_; }
  double segment_length(int i) const { return lengths_.at(static_cast<std::size_t>(i)); }
  double segment_start(int i) const { return starts_.at(static_cast<std::size_t>(i)); }
  double total_length() const { return starts_.back(); }
  double cross_section_area() const { return area_; }
  double second_moment() const { return second_moment_; }

 private:
  std::vector<double> lengths_;
  std::vector<double> starts_{0.0};  // n_s + 1 cumulative abscissas
  double area_ = 0.0;
  double second_moment_ = 0.0;
};

// Solid circular cross section of the given radius.
RobotGeometry circular_geometry(std::vector<double> segment_lengths, double radius);

class BackboneAbscissas {
 public:
  BackboneAbscissas() = default;
  explicit BackboneAbscissas(std::vector<double> s);
  // s_j = j / (N - 1) * L for j = 0..N-1.
  static BackboneAbscissas equally_spaced(double total_length, int count);

  int size() const { return static_cast<int>(s_.size()); }
  double operator[](int j) const { return s_[static_cast<std::size_t>(j)]; }
  const std::vector<double>& values() const { return s_; }

 private:
  std::vector<double> s_;
};

struct SegmentLocation {
  int segment = 0;
  double sigma = 0.0;  // local arc coordinate inside the segment
};

// Maps a backbone abscissa to (segment, local coordinate). Boundary points
// belong to the proximal segment. Throws OutOfRangeError outside [0, L].
SegmentLocation locate(const RobotGeometry& geom, double s);

inline constexpr double kSeriesGuard = 1e-6;

// Closed-form integrals a = sin(k*sigma)/k and b = (1 - cos(k*sigma))/k with
// a Taylor branch near zero curvature. b uses 2 sin^2(x/2)/k, which avoids
// cancellation for small nonzero x.
template <class T>
void strain_integrals(const T& kappa, double sigma, T& a, T& b) {
  const T x = kappa * sigma;
  if (std::abs(primal(x)) < kSeriesGuard) {
    const T x2 = x * x;
    a = sigma * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
    b = sigma * (x * 0.5 - x * x2 / 24.0 + x * x2 * x2 / 720.0);
  } else {
    const T h = sin(x * 0.5);
    a = sin(x) / kappa;
    b = 2.0 * h * h / kappa;
  }
}

template <class T>
PoseT<T> segment_fk(const PoseT<T>& base, const T& kappa, const T& shear, const T& axial, double sigma) {
  T a, b;
  strain_integrals(kappa, sigma, a, b);
  const T stretch = axial + 1.0;
  // Displacement in the base body frame: [[a, b], [-b, a]] * (shear, stretch).
  const T ux = a * shear + b * stretch;
  const T uy = a * stretch - b * shear;
  const T c = cos(base.theta);
  const T s = sin(base.theta);
  PoseT<T> out;
  out.px = base.px + c * ux + s * uy;
  out.py = base.py - s * ux + c * uy;
  out.theta = base.theta + kappa * sigma;
  return out;
}

// FK on a flat strain vector q (3 entries per segment).
template <class T>
PoseT<T> robot_fk_flat(const RobotGeometry& geom, std::span<const T> q, double s) {
  if (static_cast<int>(q.size()) != geom.num_coordinates()) {
    throw DimensionMismatchError("robot_fk: configuration size does not match geometry");
  }
  const SegmentLocation loc = locate(geom, s);
  PoseT<T> pose{T(0.0), T(0.0), T(0.0)};
  for (int i = 0; i <= loc.segment; ++i) {
    const double sigma = (i == loc.segment) ? loc.sigma : geom.segment_length(i);
    const std::size_t o = static_cast<std::size_t>(kStrainsPerSegment * i);
    pose = segment_fk(pose, q[o], q[o + 1], q[o + 2], sigma);
  }
  return pose;
}

Pose2 segment_fk(const Pose2& base, const SegmentStrains& strains, double sigma);
Pose2 robot_fk(const RobotGeometry& geom, const Configuration& q, double s);
Pose2 robot_fk(const RobotGeometry& geom, const Eigen::VectorXd& q, double s);

// Closed-form inverse of segment_fk over a full segment of the given length.
SegmentStrains segment_ik(const Pose2& pose_a, const Pose2& pose_b, double length);

// One segment per consecutive pair of poses. If s does not start at 0, the
// identity base pose is prepended at s = 0.
Configuration robot_ik(std::span<const Pose2> poses, const BackboneAbscissas& s);

// Same as robot_ik but writes the flat strain vector into out, which must
// hold 3 * (number of segments) entries. Avoids allocation in per-frame loops.
void robot_ik_flat(std::span<const Pose2> poses, std::span<const double> s, std::span<double> out);

// d pose / d q, rows (px, py, theta).
Eigen::Matrix<double, 3, Eigen::Dynamic> pose_jacobian(const RobotGeometry& geom, const Eigen::VectorXd& q, double s);

// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace pcsid
