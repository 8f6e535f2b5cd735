#pragma once

// Kinematic fusion: starting from one constant-strain segment between every
// pair of neighbouring markers, repeatedly merge adjacent segments whose
// normalized strain distance over the dataset is below a threshold.
// Segment boundaries are always marker abscissas, so the resolution of the
// recovered segmentation is one marker spacing.

#include <Eigen/Core>

#include <memory>
#include <vector>

#include "pcsid/kinematics.hpp"
#include "pcsid/metrics.hpp"

namespace pcsid {

struct FusionConfig {
  double h = 0.2;
  int max_iterations = 100;
  void validate() const;
};

// Per strain component (bending, shear, axial) minimum and maximum over all
// segments and frames.
struct StrainBounds {
  Eigen::Vector3d q_min = Eigen::Vector3d::Zero();
  Eigen::Vector3d q_max = Eigen::Vector3d::Zero();

  Eigen::Vector3d range() const { return q_max - q_min; }
  // 1 / range, with 0 for components of zero range.
  Eigen::Vector3d inverse_range() const;
};

// Configurations are stacked per frame: T x 3 n_s.
StrainBounds strain_bounds(const Eigen::MatrixXd& configurations);

// Mean over frames of the normalized distance between segments pair and
// pair + 1.
double strain_distance(const Eigen::MatrixXd& configurations, int pair, const StrainBounds& bounds);

// All n_s - 1 adjacent-pair distances.
Eigen::VectorXd strain_distances(const Eigen::MatrixXd& configurations, const StrainBounds& bounds);

// Measured marker poses, T x 3N, at the given abscissas.
struct MarkerData {
  BackboneAbscissas s;
  Eigen::MatrixXd poses;

  int num_frames() const { return static_cast<int>(poses.rows()); }
  int num_markers() const { return s.size(); }
  void validate() const;
};

struct FusionState {
  std::shared_ptr<const MarkerData> data;
  int iteration = 1;
  // Indices of the retained markers, ascending. The first entry is the base
  // marker when the data include s = 0; otherwise the identity base at s = 0
  // is implied. The last entry is always the distal marker.
  std::vector<int> kept;
  std::vector<double> s;     // segment boundary abscissas including the base
  Eigen::MatrixXd q;         // T x 3 n_s
  int num_segments() const { return static_cast<int>(s.size()) - 1; }
  std::vector<double> segment_lengths() const;
};

// l = 1: one segment per pair of neighbouring markers.
FusionState initial_fusion_state(std::shared_ptr<const MarkerData> data);

// Recomputes the per-frame configurations for a set of retained markers.
Eigen::MatrixXd fused_configurations(const MarkerData& data, const std::vector<int>& kept);

// One fusion step: every maximal run of adjacent pairs with distance <= h is
// merged into a single segment. If distances is non-null it receives the
// pair distances that drove the step. No merge leaves the state unchanged
// apart from the iteration counter.
FusionState fuse_once(const FusionState& state, const StrainBounds& bounds, double h,
                      Eigen::VectorXd* distances = nullptr);

struct DistanceProfile {
  int iteration = 0;
  std::vector<double> boundaries;  // abscissa between each evaluated pair
  Eigen::VectorXd distances;
  StrainBounds bounds;
};

struct FusionResult {
  std::vector<double> segment_lengths;
  std::vector<double> abscissas;  // boundaries including 0 and L
  std::vector<int> kept_markers;
  std::vector<DistanceProfile> profiles;
  int iterations = 0;
  Eigen::MatrixXd configurations;  // T x 3 n_s on the final segmentation
  int num_segments() const { return static_cast<int>(segment_lengths.size()); }
};

// Iterates fuse_once until no pair merges, a single segment remains or the
// iteration limit is hit. Bounds are recomputed from the current
// configurations at every iteration.
FusionResult kinematic_fusion(const MarkerData& data, const FusionConfig& config);

// Marker poses predicted by the fused kinematic model: per frame, IK on the
// retained markers of `measured`, then FK at every abscissa of `measured`.
Eigen::MatrixXd fused_reprojection(const MarkerData& measured, const FusionResult& fusion);

struct ParetoPoint {
  double h = 0.0;
  int num_segments = 0;
  double e_p_body = 0.0;
  double e_theta_body = 0.0;
  std::vector<double> segment_lengths;
};

struct ParetoSweep {
  std::vector<ParetoPoint> points;  // one per threshold, in input order
  // Non-dominated points (fewest segments for a given error), ascending n_s.
  std::vector<ParetoPoint> front;
};

// Runs fusion for every threshold and scores the re-projection of the fused
// model against the ground-truth poses (defaults to the measured poses).
ParetoSweep pareto_sweep(const MarkerData& measured, const std::vector<double>& thresholds,
                         const Eigen::MatrixXd* truth = nullptr, int max_iterations = 100);

// Pareto filter over (num_segments, e_p_body). Among points with equal n_s
// the lowest error is kept; a point survives only if its error is strictly
// below that of every point with fewer segments.
std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points);

// Logarithmically spaced thresholds.
std::vector<double> log_thresholds(double h_min, double h_max, int count);

// The grid merged with the first-iteration pair distances of the data, sorted
// and deduplicated. Near-uniform distance profiles otherwise fall between
// grid points and only the extreme segmentations are ever visited.
std::vector<double> adaptive_thresholds(const MarkerData& measured, const std::vector<double>& grid);

// Lowest e_p_body over front points with at most num_segments segments,
// +infinity if there is none.
double front_error_at_most(const std::vector<ParetoPoint>& front, int num_segments);

}  // namespace pcsid
