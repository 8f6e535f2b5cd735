#pragma once

// Setpoint regulation with proportional, saturated-integral and derivative
// feedback plus a feedforward term from the identified model:
//   tau = G^(q_d) + K^ q_d + Kp (q_d - q) - Kd qd + Ki e_int,
//   e_int' = tanh(Upsilon (q_d - q)).

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "pcsid/dynamics.hpp"
#include "pcsid/integrators.hpp"
#include "pcsid/regression.hpp"

namespace pcsid {

struct ControllerGains {
  Eigen::VectorXd kp, ki, kd;  // diagonals
  double upsilon = 1.0;
  void validate(int num_coordinates) const;
};

struct Setpoint {
  Eigen::VectorXd q_d;
  double duration = 1.0;
};

using SetpointSequence = std::vector<Setpoint>;

// Uniform samples in [q_min, q_max] per coordinate.
SetpointSequence random_setpoints(int count, double duration, const Eigen::VectorXd& q_min,
                                  const Eigen::VectorXd& q_max, std::uint64_t seed);

// G^(q_d) + K^ q_d in full coordinates; zero at removed coordinates.
Eigen::VectorXd feedforward(const IdentifiedModel& model, const Eigen::VectorXd& q_d);
Eigen::VectorXd feedforward(const PcsModel& model, const Eigen::VectorXd& q_d);

// One explicit step of the integral state.
Eigen::VectorXd saturated_integral_step(const Eigen::VectorXd& e_int, const Eigen::VectorXd& q_d,
                                        const Eigen::VectorXd& q, double upsilon, double dt);

Eigen::VectorXd control_torque(const Eigen::VectorXd& tau_ff, const ControllerGains& gains, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& qd, const Eigen::VectorXd& e_int, const Eigen::VectorXd& q_d);
Eigen::VectorXd control_torque(const IdentifiedModel& model, const ControllerGains& gains, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& qd, const Eigen::VectorXd& e_int, const Eigen::VectorXd& q_d);

// Gains from the identified stiffness and the diagonal of the identified
// mass matrix at the straight configuration:
//   Kp = kp_scale k^, Kd = 2 zeta sqrt((k^ + Kp) m^), Ki = ki_scale Kp.
struct GainRule {
  double kp_scale = 1.0;
  double zeta = 0.7;
  double ki_scale = 0.3;
  double upsilon = 1.0;
};

ControllerGains rule_of_thumb_gains(const IdentifiedModel& model, const GainRule& rule = {});

struct ClosedLoopOptions {
  double dt_out = 1e-3;
  AdaptiveOptions integrator{};     // Tsitouras 5(4), max step 5e-5 s
  double settle_window = 0.1;       // steady-state error averaging window, s
  bool reset_integral = true;       // at every setpoint switch
  double divergence_bound = 1e3;
  Eigen::VectorXd q0;               // initial configuration, zero if empty
};

struct ClosedLoopResult {
  Eigen::VectorXd times;
  Eigen::MatrixXd q, qd, q_ref, tau, e_int;  // T x n_q
  // Mean |q_d - q| over the last settle_window of every hold, setpoints x n_q.
  Eigen::MatrixXd steady_state_error;
  std::vector<double> switch_times;
  bool diverged = false;
  double divergence_time = 0.0;
  std::string failure;
};

// Integrates the plant under the controller. The plant and the identified
// model share the configuration vector; removed coordinates of the model
// receive feedforward zero but are still regulated through the feedback
// terms of their gains.
ClosedLoopResult closed_loop(const PcsModel& plant, const IdentifiedModel& model, const ControllerGains& gains,
                             const SetpointSequence& setpoints, const ClosedLoopOptions& options = {});

// Same with an explicit feedforward vector per setpoint.
ClosedLoopResult closed_loop(const PcsModel& plant, const std::vector<Eigen::VectorXd>& feedforwards,
                             const ControllerGains& gains, const SetpointSequence& setpoints,
                             const ClosedLoopOptions& options = {});

std::string closed_loop_to_json(const ClosedLoopResult& result, const SetpointSequence& setpoints);
std::string closed_loop_to_csv(const ClosedLoopResult& result);

}  // namespace pcsid
