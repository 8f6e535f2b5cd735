#pragma once

// Closed-form least-squares identification of the basis coefficients and the
// iterative removal of strains whose identified stiffness exceeds a physical
// maximum.

#include <Eigen/Core>

#include <string>
#include <vector>

#include "pcsid/basis.hpp"
#include "pcsid/simulate.hpp"

namespace pcsid {

// Configuration-space samples, all T x n_q in the library's coordinates.
struct RegressionData {
  Eigen::MatrixXd q, qd, qdd, tau;
  int num_frames() const { return static_cast<int>(q.rows()); }
  void validate(int num_coordinates) const;
};

// Stacked system X pi+ = tau. Row blocks follow the frames; inside a block
// only active coordinates appear, in ascending order.
struct RegressorSystem {
  Eigen::MatrixXd X;
  Eigen::VectorXd tau;
  int rows_per_frame = 0;
};

RegressorSystem assemble_regressor(const RegressionData& data, const BasisLibrary& library);

struct LeastSquaresResult {
  Eigen::VectorXd coefficients;
  double residual = 0.0;           // ||tau - X pi||
  double relative_residual = 0.0;  // residual / ||tau||
  int rank = 0;
  bool rank_deficient = false;
  double condition = 0.0;  // of the column-equilibrated system, from the triangular factor
};

// Minimum-norm solution by a complete orthogonal decomposition of the
// column-equilibrated matrix.
LeastSquaresResult solve_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
LeastSquaresResult solve_least_squares(const RegressorSystem& system);

struct SparsificationConfig {
  double e_max = 1e8;  // Pa
  double g_max = 0.0;  // Pa; 0 selects e_max / 3
  // Explicit per strain kind thresholds (bending N m^2, shear N, axial N).
  // Entries <= 0 fall back to the moduli.
  Eigen::Vector3d k_max = Eigen::Vector3d::Zero();
  int max_iterations = 10;
  bool enabled = true;

  // Per strain kind thresholds for the geometry's cross section.
  Eigen::Vector3d thresholds(const RobotGeometry& geometry) const;
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  StrainMask mask;
  std::vector<std::string> labels;
  Eigen::VectorXd coefficients;
  double residual = 0.0;
  double relative_residual = 0.0;
  int rank = 0;
  double condition = 0.0;
  std::vector<int> removed;
};

struct IdentifiedModel {
  BasisLibrary library;
  Eigen::VectorXd coefficients;
  double residual = 0.0;
  double relative_residual = 0.0;
  bool rank_deficient = false;
  std::vector<IterationRecord> history;

  const StrainMask& mask() const { return library.mask(); }
  // Physical parameters read out of the coefficients.
  PcsModel to_model() const { return model_from_coefficients(library, coefficients); }
  // Gravity coefficient over (kinetic coefficient * g), per segment; NaN
  // where either term was dropped.
  std::vector<double> gravity_consistency(double g) const;
};

struct StiffnessEstimate {
  int coordinate = 0;
  double value = 0.0;
};

// Identified stiffness of every active coordinate.
std::vector<StiffnessEstimate> extract_stiffness(const IdentifiedModel& model);

struct SparsifyResult {
  BasisLibrary library;
  std::vector<int> removed;
};

// Removes every active coordinate whose identified stiffness exceeds its
// threshold. An empty removal list means convergence. A pass that would
// remove every remaining coordinate keeps the one with the lowest
// threshold ratio.
SparsifyResult sparsify_step(const IdentifiedModel& model, const SparsificationConfig& config);

// Fits the full library for the geometry, then alternates sparsification
// and re-regression until no coordinate is removed.
IdentifiedModel identify(const RegressionData& data, const RobotGeometry& geometry,
                         const SparsificationConfig& config);

// Fit for a fixed library, no sparsification.
IdentifiedModel fit(const RegressionData& data, const BasisLibrary& library);

// Rolls out the identified equations of motion; torque entries of removed
// coordinates are ignored.
TrajectoryDataset predict_rollout(const IdentifiedModel& model, const Eigen::VectorXd& q0, const Eigen::VectorXd& qd0,
                                  const ActuationSignal& actuation, const RolloutOptions& options,
                                  const BackboneAbscissas& s);

inline constexpr int kModelSchemaVersion = 1;

std::string identified_model_to_json(const IdentifiedModel& model);
IdentifiedModel identified_model_from_json(const std::string& text);

}  // namespace pcsid
