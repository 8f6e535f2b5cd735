#include "pcsid/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "pcsid/errors.hpp"
#include "pcsid/kernels.hpp"

namespace pcsid {

void FusionConfig::validate() const {
  if (!(h > 0.0)) {
    throw ConfigError("fusion: threshold h must be positive");
  }
  if (max_iterations < 1) {
    throw ConfigError("fusion: max_iterations must be at least 1");
  }
}

Eigen::Vector3d StrainBounds::inverse_range() const {
  Eigen::Vector3d out;
  for (int c = 0; c < 3; ++c) {
    const double r = q_max[c] - q_min[c];
    out[c] = r > 0.0 ? 1.0 / r : 0.0;
  }
  return out;
}

namespace {

void check_configurations(const Eigen::MatrixXd& q) {
  if (q.rows() < 1) {
    throw InsufficientDataError("fusion: no frames");
  }
  if (q.cols() < kStrainsPerSegment || q.cols() % kStrainsPerSegment != 0) {
    throw DimensionMismatchError("fusion: configurations need 3 columns per segment");
  }
}

bool has_base(const MarkerData& data) { return data.s[0] <= 0.0; }

}  // namespace

StrainBounds strain_bounds(const Eigen::MatrixXd& configurations) {
  check_configurations(configurations);
  StrainBounds b;
  for (int c = 0; c < kStrainsPerSegment; ++c) {
    double lo = configurations(0, c);
    double hi = lo;
    for (Eigen::Index col = c; col < configurations.cols(); col += kStrainsPerSegment) {
      lo = std::min(lo, configurations.col(col).minCoeff());
      hi = std::max(hi, configurations.col(col).maxCoeff());
    }
    b.q_min[c] = lo;
    b.q_max[c] = hi;
  }
  return b;
}

double strain_distance(const Eigen::MatrixXd& configurations, int pair, const StrainBounds& bounds) {
  check_configurations(configurations);
  const int ns = static_cast<int>(configurations.cols() / kStrainsPerSegment);
  if (pair < 0 || pair + 1 >= ns) {
    throw OutOfRangeError("strain_distance: pair index out of range");
  }
  const Eigen::Index a = kStrainsPerSegment * pair;
  const Eigen::Index b = a + kStrainsPerSegment;
  const Eigen::VectorXd d0 = configurations.col(b) - configurations.col(a);
  const Eigen::VectorXd d1 = configurations.col(b + 1) - configurations.col(a + 1);
  const Eigen::VectorXd d2 = configurations.col(b + 2) - configurations.col(a + 2);
  const Eigen::Vector3d w = bounds.inverse_range();
  const double sum = kernels::scaled_norm3_sum(d0.data(), d1.data(), d2.data(),
                                               static_cast<std::size_t>(d0.size()), w[0], w[1], w[2]);
  return sum / static_cast<double>(configurations.rows());
}

Eigen::VectorXd strain_distances(const Eigen::MatrixXd& configurations, const StrainBounds& bounds) {
  check_configurations(configurations);
  const int ns = static_cast<int>(configurations.cols() / kStrainsPerSegment);
  Eigen::VectorXd d(ns - 1);
  for (int i = 0; i + 1 < ns; ++i) {
    d[i] = strain_distance(configurations, i, bounds);
  }
  return d;
}

void MarkerData::validate() const {
  if (s.size() < 1) {
    throw InsufficientDataError("marker data: no abscissas");
  }
  if (poses.cols() != 3 * s.size()) {
    throw DimensionMismatchError("marker data: pose columns do not match 3 x markers");
  }
  if (poses.rows() < 1) {
    throw InsufficientDataError("marker data: no frames");
  }
  const int segments = has_base(*this) ? s.size() - 1 : s.size();
  if (segments < 1) {
    throw InsufficientDataError("marker data: need at least one segment");
  }
}

std::vector<double> FusionState::segment_lengths() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < s.size(); ++i) {
    out.push_back(s[i] - s[i - 1]);
  }
  return out;
}

Eigen::MatrixXd fused_configurations(const MarkerData& data, const std::vector<int>& kept) {
  const bool base = has_base(data);
  const std::size_t segments = base ? kept.size() - 1 : kept.size();
  std::vector<double> s(kept.size());
  for (std::size_t j = 0; j < kept.size(); ++j) {
    s[j] = data.s[kept[j]];
  }
  const Eigen::Index frames = data.poses.rows();
  Eigen::MatrixXd q(frames, static_cast<Eigen::Index>(kStrainsPerSegment * segments));
  std::vector<Pose2> poses(kept.size());
  std::vector<double> row(kStrainsPerSegment * segments);
  for (Eigen::Index k = 0; k < frames; ++k) {
    for (std::size_t j = 0; j < kept.size(); ++j) {
      const Eigen::Index c = 3 * kept[j];
      poses[j] = {data.poses(k, c), data.poses(k, c + 1), data.poses(k, c + 2)};
    }
    robot_ik_flat(poses, s, row);
    q.row(k) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<Eigen::Index>(row.size()));
  }
  return q;
}

namespace {

std::vector<double> state_abscissas(const MarkerData& data, const std::vector<int>& kept) {
  std::vector<double> s;
  if (!has_base(data)) {
    s.push_back(0.0);
  }
  for (int j : kept) {
    s.push_back(data.s[j]);
  }
  return s;
}

}  // namespace

FusionState initial_fusion_state(std::shared_ptr<const MarkerData> data) {
  if (!data) {
    throw InvalidArgumentError("fusion: no marker data");
  }
  data->validate();
  FusionState st;
  st.data = std::move(data);
  st.kept.resize(static_cast<std::size_t>(st.data->num_markers()));
  for (int j = 0; j < st.data->num_markers(); ++j) {
    st.kept[static_cast<std::size_t>(j)] = j;
  }
  st.s = state_abscissas(*st.data, st.kept);
  st.q = fused_configurations(*st.data, st.kept);
  return st;
}

FusionState fuse_once(const FusionState& state, const StrainBounds& bounds, double h, Eigen::VectorXd* distances) {
  if (!(h > 0.0)) {
    throw InvalidArgumentError("fuse_once: threshold must be positive");
  }
  const int ns = state.num_segments();
  Eigen::VectorXd d = ns > 1 ? strain_distances(state.q, bounds) : Eigen::VectorXd();
  FusionState next = state;
  next.iteration = state.iteration + 1;
  const std::size_t offset = has_base(*state.data) ? 1 : 0;
  std::vector<int> kept(state.kept.begin(), state.kept.begin() + static_cast<std::ptrdiff_t>(offset));
  for (int i = 0; i < ns; ++i) {
    if (i == ns - 1 || d[i] > h) {
      kept.push_back(state.kept[offset + static_cast<std::size_t>(i)]);
    }
  }
  if (kept.size() != state.kept.size()) {
    next.kept = std::move(kept);
    next.s = state_abscissas(*state.data, next.kept);
    next.q = fused_configurations(*state.data, next.kept);
  }
  if (distances) {
    *distances = std::move(d);
  }
  return next;
}

FusionResult kinematic_fusion(const MarkerData& data, const FusionConfig& config) {
  config.validate();
  FusionState state = initial_fusion_state(std::make_shared<const MarkerData>(data));
  FusionResult result;
  while (state.num_segments() > 1 && result.iterations < config.max_iterations) {
    DistanceProfile profile;
    profile.iteration = state.iteration;
    profile.bounds = strain_bounds(state.q);
    profile.boundaries.assign(state.s.begin() + 1, state.s.end() - 1);
    FusionState next = fuse_once(state, profile.bounds, config.h, &profile.distances);
    result.profiles.push_back(std::move(profile));
    ++result.iterations;
    const bool merged = next.num_segments() < state.num_segments();
    state = std::move(next);
    if (!merged) {
      break;
    }
  }
  result.segment_lengths = state.segment_lengths();
  result.abscissas = state.s;
  result.kept_markers = state.kept;
  result.configurations = std::move(state.q);
  return result;
}

Eigen::MatrixXd fused_reprojection(const MarkerData& measured, const FusionResult& fusion) {
  measured.validate();
  const Eigen::MatrixXd q =
      fusion.configurations.rows() == measured.poses.rows() &&
              fusion.configurations.cols() == kStrainsPerSegment * fusion.num_segments()
          ? fusion.configurations
          : fused_configurations(measured, fusion.kept_markers);
  const RobotGeometry geom(fusion.segment_lengths, 1.0, 1.0);
  Eigen::MatrixXd out(measured.poses.rows(), measured.poses.cols());
  for (Eigen::Index k = 0; k < q.rows(); ++k) {
    const Eigen::VectorXd qk = q.row(k).transpose();
    for (int j = 0; j < measured.num_markers(); ++j) {
      const Pose2 p = robot_fk(geom, qk, std::min(measured.s[j], geom.total_length()));
      out(k, 3 * j) = p.px;
      out(k, 3 * j + 1) = p.py;
      out(k, 3 * j + 2) = p.theta;
    }
  }
  return out;
}

std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points) {
  std::map<int, ParetoPoint> best;
  for (const ParetoPoint& p : points) {
    auto it = best.find(p.num_segments);
    if (it == best.end() || p.e_p_body < it->second.e_p_body) {
      best[p.num_segments] = p;
    }
  }
  std::vector<ParetoPoint> front;
  for (const auto& [ns, p] : best) {
    if (front.empty() || p.e_p_body < front.back().e_p_body) {
      front.push_back(p);
    }
  }
  return front;
}

ParetoSweep pareto_sweep(const MarkerData& measured, const std::vector<double>& thresholds,
                         const Eigen::MatrixXd* truth, int max_iterations) {
  measured.validate();
  if (thresholds.empty()) {
    throw InvalidArgumentError("pareto_sweep: no thresholds");
  }
  const Eigen::MatrixXd& reference = truth ? *truth : measured.poses;
  ParetoSweep sweep;
  for (double h : thresholds) {
    FusionConfig cfg;
    cfg.h = h;
    cfg.max_iterations = max_iterations;
    const FusionResult fusion = kinematic_fusion(measured, cfg);
    const PoseErrors e = body_errors(fused_reprojection(measured, fusion), reference);
    sweep.points.push_back({h, fusion.num_segments(), e.position, e.orientation, fusion.segment_lengths});
  }
  sweep.front = pareto_front(sweep.points);
  return sweep;
}

std::vector<double> log_thresholds(double h_min, double h_max, int count) {
  if (!(h_min > 0.0) || !(h_max >= h_min) || count < 1) {
    throw InvalidArgumentError("log_thresholds: need 0 < h_min <= h_max and count >= 1");
  }
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out[static_cast<std::size_t>(i)] = h_min * std::pow(h_max / h_min, f);
  }
  return out;
}

std::vector<double> adaptive_thresholds(const MarkerData& measured, const std::vector<double>& grid) {
  measured.validate();
  std::vector<double> out(grid.begin(), grid.end());
  const FusionState state = initial_fusion_state(std::make_shared<const MarkerData>(measured));
  if (state.num_segments() > 1) {
    const Eigen::VectorXd d = strain_distances(state.q, strain_bounds(state.q));
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (std::isfinite(d[i]) && d[i] > 0.0) out.push_back(d[i]);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double front_error_at_most(const std::vector<ParetoPoint>& front, int num_segments) {
  double best = std::numeric_limits<double>::infinity();
  for (const ParetoPoint& p : front) {
    if (p.num_segments <= num_segments) best = std::min(best, p.e_p_body);
  }
  return best;
}

}  // namespace pcsid
