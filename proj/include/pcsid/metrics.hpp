#pragma once

// Task-space error metrics between estimated and ground-truth marker
// trajectories, and rollout comparison against a recorded dataset.

#include <Eigen/Core>

#include <string>

#include "pcsid/dynamics.hpp"
#include "pcsid/simulate.hpp"

namespace pcsid {

struct PoseErrors {
  double position = 0.0;     // mean Euclidean position error, m
  double orientation = 0.0;  // mean absolute wrapped orientation error, rad
};

// Marker matrices are T x 3N in the TrajectoryDataset layout.
PoseErrors body_errors(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth);

// Errors of the last marker only.
PoseErrors ee_errors(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth);

// Per-frame errors, means over markers (body) or the tip marker (ee).
struct ErrorSeries {
  Eigen::VectorXd body_position, body_orientation;
  Eigen::VectorXd ee_position, ee_orientation;
};

ErrorSeries error_series(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth);

struct ShapeErrorReport {
  double e_p_body = 0.0;
  double e_theta_body = 0.0;
  double e_p_ee = 0.0;
  double e_theta_ee = 0.0;
  Eigen::VectorXd times;
  ErrorSeries series;
  Eigen::MatrixXd predicted_markers;  // T x 3N
  bool diverged = false;
  double divergence_time = 0.0;
};

ShapeErrorReport shape_error_report(const Eigen::VectorXd& times, const Eigen::MatrixXd& estimated,
                                    const Eigen::MatrixXd& truth);

struct CompareOptions {
  double max_internal_step = 1e-4;
  double divergence_bound = 1e3;
};

// Signal that replays a dataset's recorded torques: held between samples for
// piecewise-constant actuation, linearly interpolated otherwise.
ActuationSignal replay_signal(const TrajectoryDataset& dataset);

// Rolls the model out from (q0, qd0) under the actuation, which must be
// expressed in the model's configuration space, samples markers at the
// dataset's abscissas and compares them with the recorded ones. A divergent
// rollout is reported with diverged = true and infinite errors.
ShapeErrorReport compare_rollout(const PcsModel& model, const TrajectoryDataset& truth, const Eigen::VectorXd& q0,
                                 const Eigen::VectorXd& qd0, const ActuationSignal& actuation,
                                 const CompareOptions& options = {});

// Same, starting from the dataset's recorded state and torques.
ShapeErrorReport compare_rollout(const PcsModel& model, const TrajectoryDataset& truth,
                                 const CompareOptions& options = {});

std::string report_to_json(const ShapeErrorReport& report);
std::string report_to_csv(const ShapeErrorReport& report);

}  // namespace pcsid
