#pragma once

// Evaluation cases, dataset generation and the end-to-end identification
// pipeline shared by the command line front end and the acceptance suite.

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcsid/control.hpp"
#include "pcsid/fusion.hpp"
#include "pcsid/metrics.hpp"
#include "pcsid/regression.hpp"
#include "pcsid/simulate.hpp"

namespace pcsid {

inline constexpr int kConfigSchemaVersion = 1;

struct CaseSpec {
  int id = 1;
  std::string name;
  std::vector<double> segment_lengths;         // empty for the affine-curvature case
  std::vector<Eigen::Vector3d> stiffness_scale;  // per segment, multiplies (bending, shear, axial)
  bool affine_curvature = false;
};

// Cases 1 to 6.
CaseSpec case_spec(int id);

struct PhysicalParams {
  double radius = 0.02;          // m
  double density = 1070.0;       // kg/m^3
  double youngs_modulus = 2e5;   // Pa
  double shear_modulus = 1e3;    // Pa
  double gravity = 9.81;         // m/s^2
  double damping_time = 3e-3;    // s, Kelvin-Voigt material damping D = damping_time * K
  // Per-coordinate cap on d / (2 sqrt(k m_ee)) at the straight configuration; 0 disables.
  double max_damping_ratio = 2.0;
  // Nominal strain half ranges (bending 1/m, shear, axial).
  Eigen::Vector3d strain_range = Eigen::Vector3d(10.0, 0.1, 0.1);
  void validate() const;
};

struct DatasetConfig {
  int num_markers = 21;
  int num_train = 8;
  double train_duration = 0.5;  // s
  double dt = 1e-3;             // s
  double hold = 0.01;           // s
  double test_duration = 7.0;   // s
  double torque_factor = 1.2;   // bound = factor * k * strain_fraction * range
  double strain_fraction = 0.5;
  double initial_fraction = 0.25;  // initial strains drawn in +-fraction * range
  double omega_min = 1.0, omega_max = 8.0;  // rad/s, test sinusoid frequencies
  double amplitude_fraction = 0.5;          // test amplitudes drawn in [0, fraction * bound]
  double max_internal_step = 1e-4;
  int pac_samples = 500;
  PacParams pac;
  void validate() const;
};

struct NoiseConfig {
  bool enabled = false;
  double sigma_position = 0.0;     // m
  double sigma_orientation = 0.0;  // rad
  bool apply_to_fusion = false;    // otherwise only the regression sees noisy markers
};

struct PipelineConfig {
  int savgol_order = 3;
  int savgol_window = 25;
  bool exact_derivatives = false;  // regress on simulator states on the true segmentation
  bool trim_edges = true;          // drop window / 2 frames at both ends of each trajectory
  bool filter_torques = true;      // smooth torques with the same filter as the configurations
  void validate() const;
};

struct ControlConfig {
  int num_setpoints = 7;
  double hold = 1.0;               // s
  double setpoint_fraction = 0.5;  // setpoints drawn in +-fraction * strain range
  GainRule gains;
  ClosedLoopOptions loop;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  int case_id = 1;
  PhysicalParams physical;
  DatasetConfig dataset;
  FusionConfig fusion;
  std::vector<double> h_sweep;  // empty selects adaptive_thresholds over log_thresholds(1e-3, 1, 60)
  SparsificationConfig sparsification;
  NoiseConfig noise;
  PipelineConfig pipeline;
  ControlConfig control;
  std::uint64_t seed = 0;
  std::string output_dir;

  void validate() const;
};

// Defaults for one case, including its measurement noise magnitudes
// (disabled) and the reference sparsification thresholds.
ExperimentConfig default_config(int case_id);

// Reads a JSON config. Keys omitted fall back to the defaults of the given
// case_id. Throws ConfigError.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);

RobotGeometry true_geometry(const ExperimentConfig& config);
PcsModel ground_truth_model(const ExperimentConfig& config);
Eigen::VectorXd training_torque_bound(const ExperimentConfig& config);
Eigen::VectorXd strain_half_range(const ExperimentConfig& config, int num_segments);

struct ExperimentData {
  std::vector<TrajectoryDataset> train;  // noiseless
  TrajectoryDataset test;
  std::optional<PacDataset> pac;
};

// Training trajectories use seed + index streams; the test trajectory
// starts at rest in the straight configuration.
ExperimentData generate_datasets(const ExperimentConfig& config);

// Training trajectories with the configured measurement noise applied.
std::vector<TrajectoryDataset> noisy_training_set(const ExperimentConfig& config,
                                                  const std::vector<TrajectoryDataset>& train);

// All frames of all trajectories stacked for kinematic fusion.
MarkerData stacked_markers(const std::vector<TrajectoryDataset>& sets);
MarkerData pac_markers(const PacDataset& pac);

// Held torques are recorded per interval [t_k, t_k+1); the average of the
// two intervals adjacent to t_k is the value centered on the sample.
Eigen::MatrixXd sample_centered_torques(const TrajectoryDataset& dataset);

// Configuration time series on a segmentation given by kept marker indices,
// differentiated by Savitzky-Golay, with torques shared by index.
RegressionData pipeline_regression_data(const std::vector<TrajectoryDataset>& sets, const std::vector<int>& kept,
                                        const PipelineConfig& pipeline);
RegressionData exact_regression_data(const std::vector<TrajectoryDataset>& sets);

RobotGeometry fused_geometry(const FusionResult& fusion, const ExperimentConfig& config);

struct PipelineResult {
  FusionResult fusion;
  RobotGeometry geometry;
  IdentifiedModel model;
};

// Fusion on the (noisy) training markers, then identification. Throws
// ConfigError when the fused model cannot share the plant's torques.
PipelineResult run_pipeline(const ExperimentConfig& config, const std::vector<TrajectoryDataset>& train);

// 7 s test rollout of the identified model from the measured initial shape.
ShapeErrorReport evaluate_model(const IdentifiedModel& model, const TrajectoryDataset& test,
                                double max_internal_step = 1e-4);

// Threshold sweep over the noiseless PAC markers.
ParetoSweep run_pareto(const ExperimentConfig& config, const PacDataset& pac);

struct ControlDemo {
  SetpointSequence setpoints;
  ControllerGains gains;
  ClosedLoopResult result;
  Eigen::VectorXd setpoint_range;  // per coordinate, of the sampled setpoints
};

ControlDemo run_control_demo(const ExperimentConfig& config, const IdentifiedModel& model);

}  // namespace pcsid
