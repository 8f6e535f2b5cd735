#include "pcsid/kinematics.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

namespace pcsid {

Configuration::Configuration(std::vector<SegmentStrains> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) {
    throw InvalidArgumentError("Configuration: at least one segment is required");
  }
}

Configuration Configuration::zeros(int num_segments) {
  if (num_segments < 1) {
    throw InvalidArgumentError("Configuration: at least one segment is required");
  }
  return Configuration(std::vector<SegmentStrains>(static_cast<std::size_t>(num_segments)));
}

Configuration Configuration::from_vector(const Eigen::VectorXd& q) {
  if (q.size() == 0 || q.size() % kStrainsPerSegment != 0) {
    throw DimensionMismatchError("Configuration: vector size must be a positive multiple of 3");
  }
  std::vector<SegmentStrains> segs(static_cast<std::size_t>(q.size() / kStrainsPerSegment));
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const Eigen::Index o = static_cast<Eigen::Index>(kStrainsPerSegment * i);
    segs[i] = {q[o], q[o + 1], q[o + 2]};
  }
  return Configuration(std::move(segs));
}

Eigen::VectorXd Configuration::to_vector() const {
  Eigen::VectorXd q(num_coordinates());
  for (int i = 0; i < num_segments(); ++i) {
    q[3 * i] = segments_[static_cast<std::size_t>(i)].kappa_be;
    q[3 * i + 1] = segments_[static_cast<std::size_t>(i)].sigma_sh;
    q[3 * i + 2] = segments_[static_cast<std::size_t>(i)].sigma_ax;
  }
  return q;
}

RobotGeometry::RobotGeometry(std::vector<double> segment_lengths, double cross_section_area, double second_moment)
    : lengths_(std::move(segment_lengths)), area_(cross_section_area), second_moment_(second_moment) {
  if (lengths_.empty()) {
    throw InvalidArgumentError("RobotGeometry: at least one segment is required");
  }
  if (!(area_ > 0.0) || !(second_moment_ > 0.0)) {
    throw InvalidArgumentError("RobotGeometry: cross-section area and second moment must be positive");
  }
  starts_.assign(1, 0.0);
  for (double l : lengths_) {
    if (!(l > 0.0)) {
      throw InvalidArgumentError("RobotGeometry: segment lengths must be positive");
    }
    starts_.push_back(starts_.back() + l);
  }
}

RobotGeometry circular_geometry(std::vector<double> segment_lengths, double radius) {
  const double area = std::numbers::pi * radius * radius;
  const double second_moment = std::numbers::pi * radius * radius * radius * radius / 4.0;
  return RobotGeometry(std::move(segment_lengths), area, second_moment);
}

BackboneAbscissas::BackboneAbscissas(std::vector<double> s) : s_(std::move(s)) {
  if (s_.empty()) {
    throw InvalidArgumentError("BackboneAbscissas: empty");
  }
  if (s_.front() < 0.0) {
    throw InvalidArgumentError("BackboneAbscissas: abscissas must be non-negative");
  }
  for (std::size_t j = 1; j < s_.size(); ++j) {
    if (!(s_[j] > s_[j - 1])) {
      throw InvalidArgumentError("BackboneAbscissas: abscissas must be strictly increasing");
    }
  }
}

BackboneAbscissas BackboneAbscissas::equally_spaced(double total_length, int count) {
  if (count < 2 || !(total_length > 0.0)) {
    throw InvalidArgumentError("BackboneAbscissas: need at least two markers on a positive length");
  }
  std::vector<double> s(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    s[static_cast<std::size_t>(j)] = total_length * static_cast<double>(j) / static_cast<double>(count - 1);
  }
  s.back() = total_length;
  return BackboneAbscissas(std::move(s));
}

SegmentLocation locate(const RobotGeometry& geom, double s) {
  const double length = geom.total_length();
  const double tol = 1e-12 * length;
  if (s < -tol || s > length + tol) {
    std::ostringstream msg;
    msg << "abscissa " << s << " outside [0, " << length << "]";
    throw OutOfRangeError(msg.str());
  }
  const int n = geom.num_segments();
  for (int i = 0; i < n; ++i) {
    const double end = geom.segment_start(i) + geom.segment_length(i);
    if (s <= end + tol || i == n - 1) {
      double sigma = s - geom.segment_start(i);
      sigma = std::clamp(sigma, 0.0, geom.segment_length(i));
      return {i, sigma};
    }
  }
  return {n - 1, geom.segment_length(n - 1)};
}

Pose2 segment_fk(const Pose2& base, const SegmentStrains& strains, double sigma) {
  return segment_fk<double>(base, strains.kappa_be, strains.sigma_sh, strains.sigma_ax, sigma);
}

Pose2 robot_fk(const RobotGeometry& geom, const Eigen::VectorXd& q, double s) {
  return robot_fk_flat<double>(geom, std::span<const double>(q.data(), static_cast<std::size_t>(q.size())), s);
}

Pose2 robot_fk(const RobotGeometry& geom, const Configuration& q, double s) {
  return robot_fk(geom, q.to_vector(), s);
}

namespace {

SegmentStrains segment_ik_impl(const Pose2& a_pose, const Pose2& b_pose, double length, int segment_index) {
  if (!(length > 0.0)) {
    throw InvalidArgumentError("segment_ik: length must be positive");
  }
  const double dtheta = b_pose.theta - a_pose.theta;
  const double kappa = dtheta / length;
  double a = 0.0;
  double b = 0.0;
  strain_integrals(kappa, length, a, b);
  const double det = a * a + b * b;
  if (det < 1e-10 * length * length) {
    throw SingularGeometryError("segment_ik: degenerate full-turn segment geometry", segment_index);
  }
  // Displacement expressed in the frame of pose a.
  const double dx = b_pose.px - a_pose.px;
  const double dy = b_pose.py - a_pose.py;
  const double c = std::cos(a_pose.theta);
  const double s = std::sin(a_pose.theta);
  const double lx = c * dx - s * dy;
  const double ly = s * dx + c * dy;
  const double shear = (a * lx - b * ly) / det;
  const double stretch = (b * lx + a * ly) / det;
  return {kappa, shear, stretch - 1.0};
}

}  // namespace

SegmentStrains segment_ik(const Pose2& pose_a, const Pose2& pose_b, double length) {
  return segment_ik_impl(pose_a, pose_b, length, 0);
}

void robot_ik_flat(std::span<const Pose2> poses, std::span<const double> s, std::span<double> out) {
  if (poses.size() != s.size()) {
    throw DimensionMismatchError("robot_ik: poses and abscissas differ in length");
  }
  if (poses.empty()) {
    throw InvalidArgumentError("robot_ik: no poses");
  }
  const bool prepend = s[0] > 0.0;
  const std::size_t num_segments = prepend ? poses.size() : poses.size() - 1;
  if (num_segments < 1) {
    throw InvalidArgumentError("robot_ik: need at least two poses (including the base)");
  }
  if (out.size() != kStrainsPerSegment * num_segments) {
    throw DimensionMismatchError("robot_ik: output size does not match segment count");
  }
  Pose2 prev = prepend ? Pose2{} : poses[0];
  double prev_s = prepend ? 0.0 : s[0];
  std::size_t k = 0;
  for (std::size_t j = prepend ? 0 : 1; j < poses.size(); ++j, ++k) {
    const double length = s[j] - prev_s;
    if (!(length > 0.0)) {
      throw InvalidArgumentError("robot_ik: abscissas must be strictly increasing");
    }
    const SegmentStrains q = segment_ik_impl(prev, poses[j], length, static_cast<int>(k));
    out[3 * k] = q.kappa_be;
    out[3 * k + 1] = q.sigma_sh;
    out[3 * k + 2] = q.sigma_ax;
    prev = poses[j];
    prev_s = s[j];
  }
}

Configuration robot_ik(std::span<const Pose2> poses, const BackboneAbscissas& s) {
  if (static_cast<int>(poses.size()) != s.size()) {
    throw DimensionMismatchError("robot_ik: poses and abscissas differ in length");
  }
  const std::size_t num_segments = s[0] > 0.0 ? poses.size() : poses.size() - 1;
  if (poses.size() < 1 || num_segments < 1) {
    throw InvalidArgumentError("robot_ik: need at least two poses (including the base)");
  }
  std::vector<double> flat(kStrainsPerSegment * num_segments);
  robot_ik_flat(poses, s.values(), flat);
  return Configuration::from_vector(Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size())));
}

Eigen::Matrix<double, 3, Eigen::Dynamic> pose_jacobian(const RobotGeometry& geom, const Eigen::VectorXd& q, double s) {
  const int n = geom.num_coordinates();
  if (q.size() != n) {
    throw DimensionMismatchError("pose_jacobian: configuration size does not match geometry");
  }
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, n);
  const int reach = kStrainsPerSegment * (locate(geom, s).segment + 1);
  std::vector<Dual<double>> qd(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    qd[static_cast<std::size_t>(i)] = Dual<double>(q[i], 0.0);
  }
  for (int c = 0; c < reach; ++c) {
    qd[static_cast<std::size_t>(c)].d = 1.0;
    const PoseT<Dual<double>> p = robot_fk_flat<Dual<double>>(geom, qd, s);
    jac(0, c) = p.px.d;
    jac(1, c) = p.py.d;
    jac(2, c) = p.theta.d;
    qd[static_cast<std::size_t>(c)].d = 0.0;
  }
  return jac;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w < 0.0) {
    w += two_pi;
  }
  w -= std::numbers::pi;
  // fmod maps +pi to -pi; the half-open interval is (-pi, pi].
  if (w <= -std::numbers::pi) {
    w += two_pi;
  }
  return w;
}

}  // namespace pcsid
