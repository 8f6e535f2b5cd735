#include "pcsid/control.hpp"

#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "json.hpp"
#include "pcsid/errors.hpp"

namespace pcsid {

void ControllerGains::validate(int num_coordinates) const {
  for (const Eigen::VectorXd* g : {&kp, &ki, &kd}) {
    if (g->size() != num_coordinates) {
      throw DimensionMismatchError("ControllerGains: gain size does not match the configuration");
    }
    if ((g->array() < 0.0).any() || !g->allFinite()) {
      throw ConfigError("ControllerGains: gains must be finite and non-negative");
    }
  }
  if (!(upsilon > 0.0)) {
    throw ConfigError("ControllerGains: Upsilon must be positive");
  }
}

SetpointSequence random_setpoints(int count, double duration, const Eigen::VectorXd& q_min,
                                  const Eigen::VectorXd& q_max, std::uint64_t seed) {
  if (count < 1 || !(duration > 0.0) || q_min.size() != q_max.size() || (q_max.array() < q_min.array()).any()) {
    throw ConfigError("random_setpoints: need count >= 1, duration > 0 and q_min <= q_max");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SetpointSequence out;
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd q(q_min.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      q[i] = q_min[i] + (q_max[i] - q_min[i]) * u(rng);
    }
    out.push_back({q, duration});
  }
  return out;
}

Eigen::VectorXd feedforward(const PcsModel& model, const Eigen::VectorXd& q_d) {
  if (q_d.size() != model.num_coordinates()) {
    throw DimensionMismatchError("feedforward: setpoint size does not match the model");
  }
  const Eigen::VectorXd q = to_full(model.mask, to_active(model.mask, q_d));
  return to_full(model.mask, gravity_vector(model, q)) + model.stiffness.cwiseProduct(q);
}

Eigen::VectorXd feedforward(const IdentifiedModel& model, const Eigen::VectorXd& q_d) {
  return feedforward(model.to_model(), q_d);
}

Eigen::VectorXd saturated_integral_step(const Eigen::VectorXd& e_int, const Eigen::VectorXd& q_d,
                                        const Eigen::VectorXd& q, double upsilon, double dt) {
  if (e_int.size() != q.size() || q_d.size() != q.size()) {
    throw DimensionMismatchError("saturated_integral_step: size mismatch");
  }
  return e_int + dt * (upsilon * (q_d - q)).array().tanh().matrix();
}

Eigen::VectorXd control_torque(const Eigen::VectorXd& tau_ff, const ControllerGains& gains, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& qd, const Eigen::VectorXd& e_int, const Eigen::VectorXd& q_d) {
  return tau_ff + gains.kp.cwiseProduct(q_d - q) - gains.kd.cwiseProduct(qd) + gains.ki.cwiseProduct(e_int);
}

Eigen::VectorXd control_torque(const IdentifiedModel& model, const ControllerGains& gains, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& qd, const Eigen::VectorXd& e_int, const Eigen::VectorXd& q_d) {
  gains.validate(model.library.num_coordinates());
  return control_torque(feedforward(model, q_d), gains, q, qd, e_int, q_d);
}

ControllerGains rule_of_thumb_gains(const IdentifiedModel& model, const GainRule& rule) {
  const PcsModel m = model.to_model();
  const int n = m.num_coordinates();
  const Eigen::VectorXd m_diag = to_full(m.mask, mass_matrix(m, Eigen::VectorXd::Zero(n)).diagonal());
  ControllerGains g;
  g.kp = Eigen::VectorXd::Zero(n);
  g.ki = Eigen::VectorXd::Zero(n);
  g.kd = Eigen::VectorXd::Zero(n);
  g.upsilon = rule.upsilon;
  for (int e : m.mask.active_indices()) {
    const double k = std::max(m.stiffness[e], 0.0);
    const double mass = std::max(m_diag[e], 0.0);
    g.kp[e] = rule.kp_scale * k;
    g.kd[e] = 2.0 * rule.zeta * std::sqrt((k + g.kp[e]) * mass);
    g.ki[e] = rule.ki_scale * g.kp[e];
  }
  return g;
}

ClosedLoopResult closed_loop(const PcsModel& plant, const IdentifiedModel& model, const ControllerGains& gains,
                             const SetpointSequence& setpoints, const ClosedLoopOptions& options) {
  if (model.library.num_coordinates() != plant.num_coordinates()) {
    throw DimensionMismatchError("closed_loop: plant and model configuration sizes differ");
  }
  const PcsModel identified = model.to_model();
  std::vector<Eigen::VectorXd> ff;
  for (const Setpoint& sp : setpoints) {
    ff.push_back(feedforward(identified, sp.q_d));
  }
  return closed_loop(plant, ff, gains, setpoints, options);
}

ClosedLoopResult closed_loop(const PcsModel& plant, const std::vector<Eigen::VectorXd>& feedforwards,
                             const ControllerGains& gains, const SetpointSequence& setpoints,
                             const ClosedLoopOptions& options) {
  plant.validate();
  const int n = plant.num_coordinates();
  gains.validate(n);
  if (setpoints.empty() || feedforwards.size() != setpoints.size()) {
    throw ConfigError("closed_loop: need one feedforward per setpoint and at least one setpoint");
  }
  if (!(options.dt_out > 0.0) || !(options.settle_window > 0.0)) {
    throw ConfigError("closed_loop: dt_out and settle_window must be positive");
  }
  std::vector<Eigen::Index> steps;
  Eigen::Index frames = 1;
  for (const Setpoint& sp : setpoints) {
    if (sp.q_d.size() != n || !(sp.duration > 0.0)) {
      throw ConfigError("closed_loop: setpoints need n_q entries and a positive duration");
    }
    steps.push_back(std::max<Eigen::Index>(1, std::llround(sp.duration / options.dt_out)));
    frames += steps.back();
  }

  ClosedLoopResult r;
  r.times.resize(frames);
  r.q.resize(frames, n);
  r.qd.resize(frames, n);
  r.q_ref.resize(frames, n);
  r.tau.resize(frames, n);
  r.e_int.resize(frames, n);
  r.steady_state_error.setConstant(static_cast<Eigen::Index>(setpoints.size()), n,
                                   std::numeric_limits<double>::quiet_NaN());

  Eigen::VectorXd x = Eigen::VectorXd::Zero(3 * n);  // q, qd, e_int
  if (options.q0.size() > 0) {
    if (options.q0.size() != n) {
      throw DimensionMismatchError("closed_loop: initial configuration size does not match the plant");
    }
    x.head(n) = options.q0;
  }
  std::size_t active_sp = 0;
  Eigen::VectorXd tau(n);
  const OdeRhs rhs = [&](double, const Eigen::VectorXd& s, Eigen::VectorXd& dx) {
    const Setpoint& sp = setpoints[active_sp];
    const auto q = s.head(n);
    const auto qd = s.segment(n, n);
    tau = control_torque(feedforwards[active_sp], gains, q, qd, s.tail(n), sp.q_d);
    dx.resize(3 * n);
    dx.head(n) = qd;
    dx.segment(n, n) = forward_dynamics(plant, q, qd, tau);
    dx.tail(n) = (gains.upsilon * (sp.q_d - q)).array().tanh().matrix();
  };
  auto store = [&](Eigen::Index k, double t) {
    const Setpoint& sp = setpoints[active_sp];
    r.times[k] = t;
    r.q.row(k) = x.head(n).transpose();
    r.qd.row(k) = x.segment(n, n).transpose();
    r.e_int.row(k) = x.tail(n).transpose();
    r.q_ref.row(k) = sp.q_d.transpose();
    r.tau.row(k) = control_torque(feedforwards[active_sp], gains, x.head(n), x.segment(n, n), x.tail(n), sp.q_d)
                       .transpose();
  };

  Tsit5Integrator tsit(options.integrator);
  double t = 0.0;
  Eigen::Index k = 0;
  store(k, t);
  try {
    for (std::size_t i = 0; i < setpoints.size(); ++i) {
      active_sp = i;
      r.switch_times.push_back(t);
      if (options.reset_integral) {
        x.tail(n).setZero();
      }
      tsit.restart();
      if (i > 0) {
        // The frame at the switch reports the new reference.
        store(k, t);
      }
      for (Eigen::Index j = 0; j < steps[i]; ++j) {
        const double t1 = t + options.dt_out;
        tsit.advance(rhs, t, t1, x);
        t = t1;
        ++k;
        if (!x.allFinite() || x.head(2 * n).cwiseAbs().maxCoeff() > options.divergence_bound) {
          throw DivergenceError("closed_loop: state diverged", t);
        }
        store(k, t);
      }
      const auto window = std::min<Eigen::Index>(steps[i], std::max<Eigen::Index>(
                                                               1, std::llround(options.settle_window / options.dt_out)));
      Eigen::RowVectorXd err = Eigen::RowVectorXd::Zero(n);
      for (Eigen::Index f = k - window + 1; f <= k; ++f) {
        err += (r.q_ref.row(f) - r.q.row(f)).cwiseAbs();
      }
      r.steady_state_error.row(static_cast<Eigen::Index>(i)) = err / static_cast<double>(window);
    }
  } catch (const DivergenceError& e) {
    r.diverged = true;
    r.divergence_time = e.time();
    r.failure = e.what();
  } catch (const IllConditionedMassError& e) {
    r.diverged = true;
    r.divergence_time = t;
    r.failure = e.what();
  }
  if (r.diverged) {
    const Eigen::Index used = k + 1;
    r.times.conservativeResize(used);
    for (Eigen::MatrixXd* m : {&r.q, &r.qd, &r.q_ref, &r.tau, &r.e_int}) {
      m->conservativeResize(used, n);
    }
  }
  return r;
}

std::string closed_loop_to_json(const ClosedLoopResult& result, const SetpointSequence& setpoints) {
  using nlohmann::json;
  json j;
  j["diverged"] = result.diverged;
  if (result.diverged) {
    j["divergence_time"] = result.divergence_time;
    j["failure"] = result.failure;
  }
  json sps = json::array();
  for (std::size_t i = 0; i < setpoints.size(); ++i) {
    const auto& e = result.steady_state_error;
    std::vector<double> err;
    for (Eigen::Index c = 0; c < e.cols(); ++c) {
      const double v = e(static_cast<Eigen::Index>(i), c);
      err.push_back(v);
    }
    json row;
    row["q_d"] = std::vector<double>(setpoints[i].q_d.data(), setpoints[i].q_d.data() + setpoints[i].q_d.size());
    row["duration"] = setpoints[i].duration;
    json errs = json::array();
    for (double v : err) errs.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    row["steady_state_error"] = errs;
    if (i < result.switch_times.size()) row["start_time"] = result.switch_times[i];
    sps.push_back(row);
  }
  j["setpoints"] = sps;
  return j.dump(2) + "\n";
}

std::string closed_loop_to_csv(const ClosedLoopResult& result) {
  std::ostringstream out;
  out << std::setprecision(10);
  const Eigen::Index n = result.q.cols();
  out << 't';
  for (const char* name : {"q", "q_ref", "tau", "e_int"}) {
    for (Eigen::Index c = 0; c < n; ++c) out << ',' << name << '_' << c + 1;
  }
  out << '\n';
  for (Eigen::Index k = 0; k < result.times.size(); ++k) {
    out << result.times[k];
    for (const Eigen::MatrixXd* m : {&result.q, &result.q_ref, &result.tau, &result.e_int}) {
      for (Eigen::Index c = 0; c < n; ++c) out << ',' << (*m)(k, c);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace pcsid
