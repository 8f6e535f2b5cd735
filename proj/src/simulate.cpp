#include "pcsid/simulate.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace pcsid {

std::string to_string(ActuationKind kind) {
  switch (kind) {
    case ActuationKind::Zero: return "zero";
    case ActuationKind::StepwiseRandom: return "stepwise-random";
    case ActuationKind::Sinusoidal: return "sinusoidal";
    case ActuationKind::Setpoint: return "setpoint-feedback";
    case ActuationKind::Sampled: return "sampled";
  }
  return "zero";
}

ActuationKind actuation_kind_from_string(const std::string& name) {
  for (ActuationKind k : {ActuationKind::Zero, ActuationKind::StepwiseRandom, ActuationKind::Sinusoidal,
                          ActuationKind::Setpoint, ActuationKind::Sampled}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw ConfigError("unknown actuation kind '" + name + "'");
}

ActuationSignal ActuationSignal::zero(int num_coordinates) {
  if (num_coordinates < 1) {
    throw InvalidArgumentError("ActuationSignal: need at least one coordinate");
  }
  ActuationSignal a;
  a.kind_ = ActuationKind::Zero;
  a.size_ = num_coordinates;
  return a;
}

ActuationSignal ActuationSignal::stepwise_random(double hold, const Eigen::VectorXd& bound, double t_final,
                                                 std::uint64_t seed) {
  if (!(hold > 0.0) || !(t_final >= 0.0)) {
    throw InvalidArgumentError("ActuationSignal: hold interval must be positive");
  }
  if (bound.size() < 1 || (bound.array() < 0.0).any()) {
    throw InvalidArgumentError("ActuationSignal: torque bounds must be non-negative");
  }
  ActuationSignal a;
  a.kind_ = ActuationKind::StepwiseRandom;
  a.size_ = static_cast<int>(bound.size());
  a.hold_ = hold;
  const auto rows = static_cast<Eigen::Index>(std::ceil(t_final / hold - 1e-9)) + 1;
  a.table_.resize(rows, bound.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < bound.size(); ++c) {
      a.table_(r, c) = bound[c] * u(rng);
    }
  }
  return a;
}

ActuationSignal ActuationSignal::sinusoidal(const Eigen::VectorXd& a1, double w1, const Eigen::VectorXd& a2,
                                            double w2) {
  if (a1.size() != a2.size() || a1.size() < 1) {
    throw DimensionMismatchError("ActuationSignal: amplitude vectors differ in size");
  }
  ActuationSignal a;
  a.kind_ = ActuationKind::Sinusoidal;
  a.size_ = static_cast<int>(a1.size());
  a.a1_ = a1;
  a.a2_ = a2;
  a.w1_ = w1;
  a.w2_ = w2;
  return a;
}

ActuationSignal ActuationSignal::from_samples(double t0, double dt, const Eigen::MatrixXd& values,
                                              SampleInterpolation interpolation) {
  if (!(dt > 0.0) || values.rows() < 1 || values.cols() < 1) {
    throw InvalidArgumentError("ActuationSignal: need a positive dt and at least one sample");
  }
  ActuationSignal a;
  a.kind_ = ActuationKind::Sampled;
  a.size_ = static_cast<int>(values.cols());
  a.hold_ = dt;
  a.t0_ = t0;
  a.table_ = values;
  a.interpolation_ = interpolation;
  return a;
}

bool ActuationSignal::piecewise_constant() const {
  return kind_ == ActuationKind::StepwiseRandom ||
         (kind_ == ActuationKind::Sampled && interpolation_ == SampleInterpolation::ZeroOrderHold);
}

void ActuationSignal::evaluate(double t, Eigen::VectorXd& out) const {
  switch (kind_) {
    case ActuationKind::Zero:
    case ActuationKind::Setpoint:
      out.setZero(size_);
      return;
    case ActuationKind::Sinusoidal:
      out = a1_ * std::sin(w1_ * t) + a2_ * std::cos(w2_ * t);
      return;
    case ActuationKind::StepwiseRandom:
    case ActuationKind::Sampled: {
      const double x = (t - t0_) / hold_;
      const Eigen::Index last = table_.rows() - 1;
      if (kind_ == ActuationKind::Sampled && interpolation_ == SampleInterpolation::Linear) {
        if (x <= 0.0) {
          out = table_.row(0).transpose();
        } else if (x >= static_cast<double>(last)) {
          out = table_.row(last).transpose();
        } else {
          const auto k = static_cast<Eigen::Index>(std::floor(x));
          const double f = x - static_cast<double>(k);
          out = ((1.0 - f) * table_.row(k) + f * table_.row(std::min(k + 1, last))).transpose();
        }
        return;
      }
      const auto k = std::clamp(static_cast<Eigen::Index>(std::floor(x + 1e-9)), Eigen::Index{0}, last);
      out = table_.row(k).transpose();
      return;
    }
  }
}

Eigen::VectorXd ActuationSignal::operator()(double t) const {
  Eigen::VectorXd out;
  evaluate(t, out);
  return out;
}

std::vector<Pose2> TrajectoryDataset::frame_poses(int frame) const {
  std::vector<Pose2> poses(static_cast<std::size_t>(num_markers()));
  for (int j = 0; j < num_markers(); ++j) {
    poses[static_cast<std::size_t>(j)] = marker(frame, j);
  }
  return poses;
}

void TrajectoryDataset::validate() const {
  const Eigen::Index t = times.size();
  if (markers.rows() != t || markers.cols() != 3 * s.size()) {
    throw DimensionMismatchError("TrajectoryDataset: marker array does not match times and abscissas");
  }
  if (torques.size() > 0 && torques.rows() != t) {
    throw DimensionMismatchError("TrajectoryDataset: torque array length differs from times");
  }
  for (const Eigen::MatrixXd* m : {&q, &qd, &qdd}) {
    if (m->size() > 0 && m->rows() != t) {
      throw DimensionMismatchError("TrajectoryDataset: state array length differs from times");
    }
  }
}

double max_natural_frequency(const PcsModel& model, const Eigen::VectorXd& q) {
  const Eigen::MatrixXd mass = mass_matrix(model, q);
  const Eigen::MatrixXd k = to_active(model.mask, model.stiffness).asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(k, mass, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw IllConditionedMassError("max_natural_frequency: generalized eigenproblem failed");
  }
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double max_linear_rate(const PcsModel& model, const Eigen::VectorXd& q) {
  const Eigen::MatrixXd mass = mass_matrix(model, q);
  Eigen::LLT<Eigen::MatrixXd> llt(mass);
  if (llt.info() != Eigen::Success) {
    throw IllConditionedMassError("max_linear_rate: mass matrix is not positive definite");
  }
  const Eigen::Index n = mass.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n).setIdentity();
  a.bottomLeftCorner(n, n) = -llt.solve(Eigen::MatrixXd(to_active(model.mask, model.stiffness).asDiagonal()));
  a.bottomRightCorner(n, n) = -llt.solve(Eigen::MatrixXd(to_active(model.mask, model.damping).asDiagonal()));
  Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("max_linear_rate: eigenvalue computation failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double rollout_internal_step(const PcsModel& model, const Eigen::VectorXd& q0, const RolloutOptions& options) {
  double h = options.max_internal_step;
  if (options.accuracy_factor > 0.0) {
    const double w = max_natural_frequency(model, q0);
    if (w > 0.0) h = std::min(h, options.accuracy_factor / w);
  }
  if (options.stability_factor > 0.0) {
    const double r = max_linear_rate(model, q0);
    if (r > 0.0) h = std::min(h, options.stability_factor / r);
  }
  return h;
}

Eigen::VectorXd sample_markers(const RobotGeometry& geom, const Eigen::VectorXd& q, const BackboneAbscissas& s) {
  Eigen::VectorXd out(3 * s.size());
  for (int j = 0; j < s.size(); ++j) {
    const Pose2 p = robot_fk(geom, q, s[j]);
    out.segment<3>(3 * j) << p.px, p.py, p.theta;
  }
  return out;
}

TrajectoryDataset rollout(const PcsModel& model, const Eigen::VectorXd& q0, const Eigen::VectorXd& qd0,
                          const ActuationSignal& actuation, const RolloutOptions& options,
                          const BackboneAbscissas& s) {
  model.validate();
  const int n = model.num_coordinates();
  if (q0.size() != n || qd0.size() != n || actuation.size() != n) {
    throw DimensionMismatchError("rollout: initial state or actuation size does not match the model");
  }
  if (!(options.dt > 0.0) || !(options.t_final >= 0.0) || !(options.max_internal_step > 0.0)) {
    throw InvalidArgumentError("rollout: dt, t_final and the internal step must be positive");
  }
  if (s.size() > 0 && s.values().back() > model.geometry.total_length() * (1.0 + 1e-12)) {
    throw OutOfRangeError("rollout: marker abscissa beyond the robot length");
  }
  const bool held = actuation.piecewise_constant();
  if (held) {
    const double ratio = actuation.hold_interval() / options.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0) {
      throw InvalidArgumentError("rollout: hold interval must be a multiple of the output step");
    }
  }
  const auto frames = static_cast<Eigen::Index>(std::llround(options.t_final / options.dt)) + 1;
  TrajectoryDataset out;
  out.dt = options.dt;
  out.s = s;
  out.actuation = actuation.kind();
  out.times.resize(frames);
  out.markers.resize(frames, 3 * s.size());
  out.torques.resize(frames, n);
  out.q.resize(frames, n);
  out.qd.resize(frames, n);
  out.qdd.resize(frames, n);

  // Masked coordinates stay at zero.
  Eigen::VectorXd x(2 * n);
  x.head(n) = to_full(model.mask, to_active(model.mask, q0));
  x.tail(n) = to_full(model.mask, to_active(model.mask, qd0));
  double step = 0.0;
  try {
    step = rollout_internal_step(model, x.head(n), options);
  } catch (const IllConditionedMassError& e) {
    throw DivergenceError(std::string("rollout: ") + e.what() + " at t = 0", 0.0);
  }

  Eigen::VectorXd tau_hold(n), tau(n);
  const OdeRhs rhs = [&](double t, const Eigen::VectorXd& state, Eigen::VectorXd& dx) {
    if (held) {
      tau = tau_hold;
    } else {
      actuation.evaluate(t, tau);
    }
    dx.resize(2 * n);
    dx.head(n) = state.tail(n);
    dx.tail(n) = forward_dynamics(model, state.head(n), state.tail(n), tau);
  };

  for (Eigen::Index k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) * options.dt;
    out.times[k] = t;
    if (held) {
      actuation.evaluate(t + 0.5 * options.dt, tau_hold);
      out.torques.row(k) = tau_hold.transpose();
    } else {
      out.torques.row(k) = actuation(t).transpose();
    }
    const Eigen::VectorXd qk = x.head(n);
    const Eigen::VectorXd qdk = x.tail(n);
    if (!x.allFinite() || qk.cwiseAbs().maxCoeff() > options.divergence_bound) {
      std::ostringstream msg;
      msg << "rollout: state diverged at t = " << t;
      throw DivergenceError(msg.str(), t);
    }
    out.q.row(k) = qk.transpose();
    out.qd.row(k) = qdk.transpose();
    try {
      out.qdd.row(k) = forward_dynamics(model, qk, qdk, out.torques.row(k).transpose()).transpose();
      out.markers.row(k) = sample_markers(model.geometry, qk, s).transpose();
      if (k + 1 < frames) {
        if (options.update_step && k > 0) step = rollout_internal_step(model, qk, options);
        Rk4Integrator rk4(step);
        rk4.advance(rhs, t, t + options.dt, x);
      }
    } catch (const IllConditionedMassError& e) {
      std::ostringstream msg;
      msg << "rollout: " << e.what() << " near t = " << t;
      throw DivergenceError(msg.str(), t);
    }
  }
  unwrap_orientations(out.markers);
  return out;
}

TrajectoryDataset rollout(const RobotGeometry& geom, const InertialParams& inertial, const ElasticityParams& elastic,
                          const Eigen::VectorXd& q0, const Eigen::VectorXd& qd0, const ActuationSignal& actuation,
                          double t_final, double dt, const BackboneAbscissas& s) {
  RolloutOptions opts;
  opts.t_final = t_final;
  opts.dt = dt;
  return rollout(make_model(geom, inertial, elastic), q0, qd0, actuation, opts, s);
}

void unwrap_orientations(Eigen::MatrixXd& markers) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index c = 2; c < markers.cols(); c += 3) {
    for (Eigen::Index k = 1; k < markers.rows(); ++k) {
      const double jump = markers(k, c) - markers(k - 1, c);
      if (std::abs(jump) > std::numbers::pi) {
        markers(k, c) -= two_pi * std::round(jump / two_pi);
      }
    }
  }
}

TrajectoryDataset add_measurement_noise(const TrajectoryDataset& dataset, double sigma_pos, double sigma_theta,
                                        std::uint64_t seed) {
  if (sigma_pos < 0.0 || sigma_theta < 0.0) {
    throw InvalidArgumentError("add_measurement_noise: standard deviations must be non-negative");
  }
  TrajectoryDataset out = dataset;
  if (sigma_pos == 0.0 && sigma_theta == 0.0) {
    return out;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index k = 0; k < out.markers.rows(); ++k) {
    for (Eigen::Index c = 0; c < out.markers.cols(); ++c) {
      const double sd = (c % 3 == 2) ? sigma_theta : sigma_pos;
      out.markers(k, c) += sd * unit(rng);
    }
  }
  return out;
}

void PacParams::validate() const {
  if (!(length > 0.0)) {
    throw InvalidArgumentError("PacParams: length must be positive");
  }
  if (kappa0_max < kappa0_min || kappa1_max < kappa1_min) {
    throw InvalidArgumentError("PacParams: empty curvature range");
  }
}

std::vector<Pose2> pac_poses(double kappa0, double kappa1, double length, const BackboneAbscissas& s) {
  if (s.size() > 0 && s.values().back() > length * (1.0 + 1e-12)) {
    throw OutOfRangeError("pac_poses: abscissa beyond the robot length");
  }
  const double max_step = length / 1e4;
  auto theta = [&](double u) { return kappa0 * u + 0.5 * kappa1 * u * u; };
  std::vector<Pose2> poses;
  poses.reserve(static_cast<std::size_t>(s.size()));
  double x = 0.0, y = 0.0, prev = 0.0;
  for (double sj : s.values()) {
    const double span = sj - prev;
    if (span > 0.0) {
      auto steps = static_cast<long>(std::ceil(span / max_step));
      steps += steps % 2;
      const double h = span / static_cast<double>(steps);
      double sx = 0.0, sy = 0.0;
      for (long i = 0; i <= steps; ++i) {
        const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double th = theta(prev + static_cast<double>(i) * h);
        sx += w * std::sin(th);
        sy += w * std::cos(th);
      }
      x += sx * h / 3.0;
      y += sy * h / 3.0;
    }
    poses.push_back(Pose2{x, y, theta(sj)});
    prev = sj;
  }
  return poses;
}

PacDataset pac_sample(const PacParams& pac, int count, int num_markers, std::uint64_t seed) {
  pac.validate();
  if (count < 1) {
    throw InvalidArgumentError("pac_sample: count must be positive");
  }
  PacDataset out;
  out.s = BackboneAbscissas::equally_spaced(pac.length, num_markers);
  out.markers.resize(count, 3 * num_markers);
  out.kappa0.resize(count);
  out.kappa1.resize(count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u0(pac.kappa0_min, pac.kappa0_max), u1(pac.kappa1_min, pac.kappa1_max);
  for (int k = 0; k < count; ++k) {
    const double k0 = u0(rng);
    const double k1 = u1(rng);
    out.kappa0[k] = k0;
    out.kappa1[k] = k1;
    const std::vector<Pose2> poses = pac_poses(k0, k1, pac.length, out.s);
    for (int j = 0; j < num_markers; ++j) {
      const Pose2& p = poses[static_cast<std::size_t>(j)];
      out.markers.block<1, 3>(k, 3 * j) << p.px, p.py, p.theta;
    }
  }
  return out;
}

}  // namespace pcsid
