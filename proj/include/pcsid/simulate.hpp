#pragma once

// Ground-truth trajectory generation: actuation signals, fixed-step rollouts,
// marker sampling, measurement noise and the affine-curvature static sampler.

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "pcsid/dynamics.hpp"
#include "pcsid/integrators.hpp"
#include "pcsid/kinematics.hpp"

namespace pcsid {

enum class ActuationKind { Zero, StepwiseRandom, Sinusoidal, Setpoint, Sampled };

std::string to_string(ActuationKind kind);
ActuationKind actuation_kind_from_string(const std::string& name);

enum class SampleInterpolation { ZeroOrderHold, Linear };

// Generalized torque as a function of time, in the generating model's
// configuration space.
class ActuationSignal {
 public:
  ActuationSignal() = default;

  static ActuationSignal zero(int num_coordinates);

  // Uniform samples in [-bound_e, bound_e] per coordinate, held for `hold`
  // seconds; the table covers [0, t_final] and the last value persists after.
  static ActuationSignal stepwise_random(double hold, const Eigen::VectorXd& bound, double t_final,
                                         std::uint64_t seed);

  // tau(t) = a1 sin(w1 t) + a2 cos(w2 t).
  static ActuationSignal sinusoidal(const Eigen::VectorXd& a1, double w1, const Eigen::VectorXd& a2, double w2);

  // Replays recorded samples (rows of `values`) taken at t0 + k * dt.
  static ActuationSignal from_samples(double t0, double dt, const Eigen::MatrixXd& values,
                                      SampleInterpolation interpolation);

  ActuationKind kind() const { return kind_; }
  int size() const { return size_; }
  bool piecewise_constant() const;
  double hold_interval() const { return hold_; }

  Eigen::VectorXd operator()(double t) const;
  void evaluate(double t, Eigen::VectorXd& out) const;

 private:
  ActuationKind kind_ = ActuationKind::Zero;
  int size_ = 0;
  double hold_ = 0.0;
  double t0_ = 0.0;
  Eigen::MatrixXd table_;  // rows: hold intervals or recorded samples
  Eigen::VectorXd a1_, a2_;
  double w1_ = 0.0, w2_ = 0.0;
  SampleInterpolation interpolation_ = SampleInterpolation::ZeroOrderHold;
};

// Uniformly sampled trajectory. Marker poses are stacked per frame as
// (x_1, y_1, theta_1, x_2, ...). q, qd, qdd are present when the data come
// from the simulator and empty otherwise.
struct TrajectoryDataset {
  double dt = 0.0;
  Eigen::VectorXd times;
  BackboneAbscissas s;
  Eigen::MatrixXd markers;  // T x 3N
  Eigen::MatrixXd torques;  // T x n_q
  Eigen::MatrixXd q, qd, qdd;
  ActuationKind actuation = ActuationKind::Zero;

  int num_frames() const { return static_cast<int>(times.size()); }
  int num_markers() const { return s.size(); }
  bool actuation_held() const {
    return actuation == ActuationKind::StepwiseRandom || actuation == ActuationKind::Zero;
  }
  bool has_states() const { return q.rows() == times.size() && q.rows() > 0; }
  Pose2 marker(int frame, int j) const {
    return {markers(frame, 3 * j), markers(frame, 3 * j + 1), markers(frame, 3 * j + 2)};
  }
  // Marker poses of one frame.
  std::vector<Pose2> frame_poses(int frame) const;
  void validate() const;
};

struct RolloutOptions {
  double t_final = 0.5;
  double dt = 1e-3;                 // output sampling
  double max_internal_step = 1e-4;  // RK4 step bound
  // Additionally bound the step by accuracy_factor / omega_max of the
  // undamped dynamics and by stability_factor / |lambda|_max of the damped
  // dynamics, both linearized about the configuration at the start of each
  // output interval (only the initial one unless update_step). RK4 is stable
  // on the negative real axis up to |h lambda| = 2.78. Zero disables a bound.
  double accuracy_factor = 0.25;
  double stability_factor = 1.5;
  bool update_step = true;
  double divergence_bound = 1e3;  // on max |q_e|
};

// Simulates the model and samples states, torques and markers every dt.
// Piecewise-constant signals are evaluated once per output interval (at its
// midpoint) so that switching instants never fall inside an RK4 step; their
// hold interval must be a multiple of dt. Throws DivergenceError, also when the
// mass matrix stops being positive definite.
TrajectoryDataset rollout(const PcsModel& model, const Eigen::VectorXd& q0, const Eigen::VectorXd& qd0,
                          const ActuationSignal& actuation, const RolloutOptions& options,
                          const BackboneAbscissas& s);

TrajectoryDataset rollout(const RobotGeometry& geom, const InertialParams& inertial, const ElasticityParams& elastic,
                          const Eigen::VectorXd& q0, const Eigen::VectorXd& qd0, const ActuationSignal& actuation,
                          double t_final, double dt, const BackboneAbscissas& s);

// Largest undamped natural frequency sqrt(lambda_max(M^-1 K)) at q.
double max_natural_frequency(const PcsModel& model, const Eigen::VectorXd& q);

// Largest eigenvalue modulus of [[0, I], [-M^-1 K, -M^-1 D]] at q.
double max_linear_rate(const PcsModel& model, const Eigen::VectorXd& q);

// Integration step bound used by rollout at configuration q0.
double rollout_internal_step(const PcsModel& model, const Eigen::VectorXd& q0, const RolloutOptions& options);

// Stacked robot_fk poses at the abscissas.
Eigen::VectorXd sample_markers(const RobotGeometry& geom, const Eigen::VectorXd& q, const BackboneAbscissas& s);

// Adds i.i.d. Gaussian noise to every marker coordinate.
TrajectoryDataset add_measurement_noise(const TrajectoryDataset& dataset, double sigma_pos, double sigma_theta,
                                        std::uint64_t seed);

// Keeps theta continuous over frames for each marker (removes 2 pi jumps).
void unwrap_orientations(Eigen::MatrixXd& markers);

struct PacParams {
  double kappa0_min = -20.0, kappa0_max = 20.0;  // 1/m
  double kappa1_min = -200.0, kappa1_max = 200.0;  // 1/m^2
  double length = 0.15;
  void validate() const;
};

struct PacDataset {
  BackboneAbscissas s;
  Eigen::MatrixXd markers;  // count x 3N
  Eigen::VectorXd kappa0, kappa1;
};

// Pose along an affine-curvature backbone, kappa(s) = kappa0 + kappa1 s,
// integrated with composite Simpson steps no longer than length / 1e4.
std::vector<Pose2> pac_poses(double kappa0, double kappa1, double length, const BackboneAbscissas& s);

PacDataset pac_sample(const PacParams& pac, int count, int num_markers, std::uint64_t seed);

}  // namespace pcsid
