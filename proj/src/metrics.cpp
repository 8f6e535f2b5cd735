#include "pcsid/metrics.hpp"

#include "json.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "pcsid/errors.hpp"

namespace pcsid {

namespace {

void check_shapes(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols()) {
    throw DimensionMismatchError("metrics: estimated and ground-truth marker matrices differ in shape");
  }
  if (truth.cols() % 3 != 0 || truth.cols() == 0) {
    throw DimensionMismatchError("metrics: marker matrices need 3 columns per marker");
  }
  if (truth.rows() == 0) {
    throw InsufficientDataError("metrics: no frames");
  }
}

PoseErrors marker_errors(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth, Eigen::Index first,
                         Eigen::Index last) {
  double ep = 0.0;
  double et = 0.0;
  for (Eigen::Index k = 0; k < truth.rows(); ++k) {
    for (Eigen::Index j = first; j < last; ++j) {
      ep += std::hypot(estimated(k, 3 * j) - truth(k, 3 * j), estimated(k, 3 * j + 1) - truth(k, 3 * j + 1));
      et += std::abs(wrap_angle(estimated(k, 3 * j + 2) - truth(k, 3 * j + 2)));
    }
  }
  const double count = static_cast<double>(truth.rows() * (last - first));
  return {ep / count, et / count};
}

}  // namespace

PoseErrors body_errors(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth) {
  check_shapes(estimated, truth);
  return marker_errors(estimated, truth, 0, truth.cols() / 3);
}

PoseErrors ee_errors(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth) {
  check_shapes(estimated, truth);
  const Eigen::Index n = truth.cols() / 3;
  return marker_errors(estimated, truth, n - 1, n);
}

ErrorSeries error_series(const Eigen::MatrixXd& estimated, const Eigen::MatrixXd& truth) {
  check_shapes(estimated, truth);
  const Eigen::Index frames = truth.rows();
  const Eigen::Index n = truth.cols() / 3;
  ErrorSeries out;
  out.body_position.setZero(frames);
  out.body_orientation.setZero(frames);
  out.ee_position.setZero(frames);
  out.ee_orientation.setZero(frames);
  for (Eigen::Index k = 0; k < frames; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double ep =
          std::hypot(estimated(k, 3 * j) - truth(k, 3 * j), estimated(k, 3 * j + 1) - truth(k, 3 * j + 1));
      const double et = std::abs(wrap_angle(estimated(k, 3 * j + 2) - truth(k, 3 * j + 2)));
      out.body_position[k] += ep / static_cast<double>(n);
      out.body_orientation[k] += et / static_cast<double>(n);
      if (j == n - 1) {
        out.ee_position[k] = ep;
        out.ee_orientation[k] = et;
      }
    }
  }
  return out;
}

ShapeErrorReport shape_error_report(const Eigen::VectorXd& times, const Eigen::MatrixXd& estimated,
                                    const Eigen::MatrixXd& truth) {
  if (times.size() != truth.rows()) {
    throw DimensionMismatchError("shape_error_report: time vector does not match frame count");
  }
  ShapeErrorReport r;
  r.times = times;
  r.series = error_series(estimated, truth);
  r.e_p_body = r.series.body_position.mean();
  r.e_theta_body = r.series.body_orientation.mean();
  r.e_p_ee = r.series.ee_position.mean();
  r.e_theta_ee = r.series.ee_orientation.mean();
  r.predicted_markers = estimated;
  return r;
}

ActuationSignal replay_signal(const TrajectoryDataset& dataset) {
  if (dataset.torques.rows() < 1) {
    throw InsufficientDataError("replay_signal: dataset has no torques");
  }
  const bool held = dataset.actuation_held();
  return ActuationSignal::from_samples(dataset.times.size() > 0 ? dataset.times[0] : 0.0, dataset.dt,
                                       dataset.torques,
                                       held ? SampleInterpolation::ZeroOrderHold : SampleInterpolation::Linear);
}

ShapeErrorReport compare_rollout(const PcsModel& model, const TrajectoryDataset& truth, const Eigen::VectorXd& q0,
                                 const Eigen::VectorXd& qd0, const ActuationSignal& actuation,
                                 const CompareOptions& options) {
  truth.validate();
  RolloutOptions ro;
  ro.dt = truth.dt;
  ro.t_final = truth.times[truth.num_frames() - 1] - truth.times[0];
  ro.max_internal_step = options.max_internal_step;
  ro.divergence_bound = options.divergence_bound;
  try {
    const TrajectoryDataset predicted = rollout(model, q0, qd0, actuation, ro, truth.s);
    if (predicted.num_frames() != truth.num_frames()) {
      throw DimensionMismatchError("compare_rollout: predicted frame count differs from the dataset");
    }
    return shape_error_report(truth.times, predicted.markers, truth.markers);
  } catch (const DivergenceError& e) {
    ShapeErrorReport r;
    r.diverged = true;
    r.divergence_time = e.time();
    r.times = truth.times;
    const double inf = std::numeric_limits<double>::infinity();
    r.e_p_body = r.e_theta_body = r.e_p_ee = r.e_theta_ee = inf;
    return r;
  }
}

ShapeErrorReport compare_rollout(const PcsModel& model, const TrajectoryDataset& truth,
                                 const CompareOptions& options) {
  if (!truth.has_states()) {
    throw InsufficientDataError("compare_rollout: dataset has no recorded states");
  }
  return compare_rollout(model, truth, truth.q.row(0).transpose(), truth.qd.row(0).transpose(),
                         replay_signal(truth), options);
}

std::string report_to_json(const ShapeErrorReport& report) {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["e_p_body"] = finite_or_null(report.e_p_body);
  j["e_theta_body"] = finite_or_null(report.e_theta_body);
  j["e_p_ee"] = finite_or_null(report.e_p_ee);
  j["e_theta_ee"] = finite_or_null(report.e_theta_ee);
  j["diverged"] = report.diverged;
  if (report.diverged) {
    j["divergence_time"] = report.divergence_time;
  }
  j["frames"] = report.times.size();
  return j.dump(2) + "\n";
}

std::string report_to_csv(const ShapeErrorReport& report) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "t,e_p_body,e_theta_body,e_p_ee,e_theta_ee\n";
  const auto& s = report.series;
  for (Eigen::Index k = 0; k < s.body_position.size(); ++k) {
    out << report.times[k] << ',' << s.body_position[k] << ',' << s.body_orientation[k] << ',' << s.ee_position[k]
        << ',' << s.ee_orientation[k] << '\n';
  }
  return out.str();
}

}  // namespace pcsid
