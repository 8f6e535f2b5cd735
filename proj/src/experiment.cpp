#include "pcsid/experiment.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "pcsid/errors.hpp"
#include "pcsid/savgol.hpp"

namespace pcsid {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 of (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

enum Stream : std::uint64_t { kTrainStream = 0, kTestStream = 100, kNoiseStream = 200, kPacStream = 300,
                              kSetpointStream = 400 };

Eigen::VectorXd baseline_stiffness(const ExperimentConfig& config, int num_segments) {
  const PhysicalParams& p = config.physical;
  const double area = std::numbers::pi * p.radius * p.radius;
  const double second = std::numbers::pi * std::pow(p.radius, 4) / 4.0;
  Eigen::VectorXd k(3 * num_segments);
  for (int i = 0; i < num_segments; ++i) {
    k.segment<3>(3 * i) << p.youngs_modulus * second, p.shear_modulus * area, p.youngs_modulus * area;
  }
  return k;
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
  }
}

void read_vec3(const json& j, const char* key, Eigen::Vector3d& out) {
  if (!j.contains(key)) return;
  std::vector<double> v;
  read(j, key, v);
  if (v.size() != 3) throw ConfigError(std::string("config: '") + key + "' needs 3 entries");
  out = Eigen::Vector3d(v[0], v[1], v[2]);
}

json vec3(const Eigen::Vector3d& v) { return json::array({v[0], v[1], v[2]}); }

// Least-squares fit of q to all marker poses of one frame.
Eigen::VectorXd fit_configuration(const RobotGeometry& geom, const std::vector<Pose2>& poses,
                                  const BackboneAbscissas& s) {
  const int n = geom.num_coordinates();
  const int m = s.size();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  const double L = geom.total_length();
  for (int it = 0; it < 50; ++it) {
    Eigen::MatrixXd J(3 * m, n);
    Eigen::VectorXd r(3 * m);
    for (int j = 0; j < m; ++j) {
      const double sj = std::min(s[j], L);
      const Pose2 p = robot_fk(geom, q, sj);
      r.segment<3>(3 * j) << poses[j].px - p.px, poses[j].py - p.py, (poses[j].theta - p.theta) * L;
      Eigen::Matrix<double, 3, Eigen::Dynamic> Jj = pose_jacobian(geom, q, sj);
      Jj.row(2) *= L;
      J.middleRows(3 * j, 3) = Jj;
    }
    const Eigen::VectorXd dq = J.completeOrthogonalDecomposition().solve(r);
    q += dq;
    if (dq.norm() < 1e-13 * (1.0 + q.norm())) break;
  }
  return q;
}

}  // namespace

CaseSpec case_spec(int id) {
  const Eigen::Vector3d one = Eigen::Vector3d::Ones();
  switch (id) {
    case 1:
      return {1, "1S PCS", {0.1}, {one}, false};
    case 2:
      return {2, "2S PCS", {0.07, 0.1}, {one, one}, false};
    case 3:
      return {3, "3S PCS", {0.05, 0.1, 0.06}, {one, one, one}, false};
    case 4:
      return {4, "1S PCS H-SH", {0.1}, {Eigen::Vector3d(1.0, 1e3, 1.0)}, false};
    case 5:
      return {5, "2S PCS H-AX/SH", {0.07, 0.1}, {Eigen::Vector3d(1.0, 1.0, 1e3), Eigen::Vector3d(1.0, 1e3, 1.0)},
              false};
    case 6:
      return {6, "1S PAC", {}, {}, true};
    default:
      throw ConfigError("case id must be in 1..6");
  }
}

void PhysicalParams::validate() const {
  if (!(radius > 0.0) || !(density > 0.0) || !(youngs_modulus > 0.0) || !(shear_modulus > 0.0) ||
      !(damping_time >= 0.0) || !(max_damping_ratio >= 0.0) || !(gravity >= 0.0) || !(strain_range.minCoeff() > 0.0)) {
    throw ConfigError("physical parameters must be positive (damping time and gravity non-negative)");
  }
}

void DatasetConfig::validate() const {
  if (num_markers < 2 || num_train < 1 || pac_samples < 1) {
    throw ConfigError("dataset: need >= 2 markers, >= 1 training trajectory and >= 1 affine sample");
  }
  if (!(dt > 0.0) || !(hold > 0.0) || !(train_duration > 0.0) || !(test_duration > 0.0) ||
      !(max_internal_step > 0.0)) {
    throw ConfigError("dataset: durations and steps must be positive");
  }
  const double ratio = hold / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) throw ConfigError("dataset: hold must be a multiple of dt");
  if (!(torque_factor > 0.0) || !(strain_fraction > 0.0) || !(initial_fraction >= 0.0) ||
      !(amplitude_fraction >= 0.0) || !(omega_min > 0.0) || omega_max < omega_min) {
    throw ConfigError("dataset: invalid excitation settings");
  }
  pac.validate();
}

void PipelineConfig::validate() const {
  if (savgol_window % 2 == 0 || savgol_window < savgol_order + 2 || savgol_order < 2) {
    throw ConfigError("pipeline: Savitzky-Golay window must be odd, >= order + 2, order >= 2");
  }
}

void ExperimentConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw ConfigError("config: unsupported schema_version " + std::to_string(schema_version));
  }
  case_spec(case_id);
  physical.validate();
  dataset.validate();
  fusion.validate();
  sparsification.validate();
  pipeline.validate();
  if (noise.sigma_position < 0.0 || noise.sigma_orientation < 0.0) throw ConfigError("noise sigmas must be >= 0");
  for (double h : h_sweep) {
    if (!(h > 0.0)) throw ConfigError("h_sweep entries must be positive");
  }
  if (control.num_setpoints < 1 || !(control.hold > control.loop.settle_window) ||
      !(control.setpoint_fraction > 0.0)) {
    throw ConfigError("control: need >= 1 setpoint and holds longer than the settle window");
  }
}

ExperimentConfig default_config(int case_id) {
  ExperimentConfig c;
  c.case_id = case_id;
  case_spec(case_id);
  c.sparsification.k_max = Eigen::Vector3d(12.6, 168.0, 1.26e5);
  if (case_id == 1) {
    c.noise.sigma_position = 0.5e-3;
    c.noise.sigma_orientation = 1.0 * kDeg;
  } else {
    c.noise.sigma_position = 0.1e-3;
    c.noise.sigma_orientation = 0.5 * kDeg;
  }
  if (case_id == 6) c.dataset.pac.length = 0.15;
  c.control.gains.upsilon = 100.0;
  return c;
}

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  int case_id = 1;
  read(j, "case", case_id);
  ExperimentConfig c = default_config(case_id);
  read(j, "schema_version", c.schema_version);
  read(j, "seed", c.seed);
  read(j, "output_dir", c.output_dir);
  read(j, "h_sweep", c.h_sweep);
  if (j.contains("physical")) {
    const json& p = j["physical"];
    read(p, "radius", c.physical.radius);
    read(p, "density", c.physical.density);
    read(p, "youngs_modulus", c.physical.youngs_modulus);
    read(p, "shear_modulus", c.physical.shear_modulus);
    read(p, "gravity", c.physical.gravity);
    read(p, "damping_time", c.physical.damping_time);
    read(p, "max_damping_ratio", c.physical.max_damping_ratio);
    read_vec3(p, "strain_range", c.physical.strain_range);
  }
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    DatasetConfig& o = c.dataset;
    read(d, "num_markers", o.num_markers);
    read(d, "num_train", o.num_train);
    read(d, "train_duration", o.train_duration);
    read(d, "dt", o.dt);
    read(d, "hold", o.hold);
    read(d, "test_duration", o.test_duration);
    read(d, "torque_factor", o.torque_factor);
    read(d, "strain_fraction", o.strain_fraction);
    read(d, "initial_fraction", o.initial_fraction);
    read(d, "omega_min", o.omega_min);
    read(d, "omega_max", o.omega_max);
    read(d, "amplitude_fraction", o.amplitude_fraction);
    read(d, "max_internal_step", o.max_internal_step);
    read(d, "pac_samples", o.pac_samples);
    if (d.contains("pac")) {
      const json& a = d["pac"];
      read(a, "kappa0_min", o.pac.kappa0_min);
      read(a, "kappa0_max", o.pac.kappa0_max);
      read(a, "kappa1_min", o.pac.kappa1_min);
      read(a, "kappa1_max", o.pac.kappa1_max);
      read(a, "length", o.pac.length);
    }
  }
  if (j.contains("fusion")) {
    read(j["fusion"], "h", c.fusion.h);
    read(j["fusion"], "max_iterations", c.fusion.max_iterations);
  }
  if (j.contains("sparsification")) {
    const json& s = j["sparsification"];
    read(s, "enabled", c.sparsification.enabled);
    read(s, "e_max", c.sparsification.e_max);
    read(s, "g_max", c.sparsification.g_max);
    read_vec3(s, "k_max", c.sparsification.k_max);
    read(s, "max_iterations", c.sparsification.max_iterations);
  }
  if (j.contains("noise")) {
    const json& n = j["noise"];
    read(n, "enabled", c.noise.enabled);
    read(n, "sigma_position", c.noise.sigma_position);
    if (n.contains("sigma_orientation_deg")) {
      double deg = 0.0;
      read(n, "sigma_orientation_deg", deg);
      c.noise.sigma_orientation = deg * kDeg;
    }
    read(n, "sigma_orientation", c.noise.sigma_orientation);
    read(n, "apply_to_fusion", c.noise.apply_to_fusion);
  }
  if (j.contains("pipeline")) {
    const json& p = j["pipeline"];
    read(p, "savgol_order", c.pipeline.savgol_order);
    read(p, "savgol_window", c.pipeline.savgol_window);
    read(p, "exact_derivatives", c.pipeline.exact_derivatives);
    read(p, "trim_edges", c.pipeline.trim_edges);
    read(p, "filter_torques", c.pipeline.filter_torques);
  }
  if (j.contains("control")) {
    const json& k = j["control"];
    read(k, "num_setpoints", c.control.num_setpoints);
    read(k, "hold", c.control.hold);
    read(k, "setpoint_fraction", c.control.setpoint_fraction);
    read(k, "kp_scale", c.control.gains.kp_scale);
    read(k, "zeta", c.control.gains.zeta);
    read(k, "ki_scale", c.control.gains.ki_scale);
    read(k, "upsilon", c.control.gains.upsilon);
    read(k, "dt_out", c.control.loop.dt_out);
    read(k, "settle_window", c.control.loop.settle_window);
    read(k, "reset_integral", c.control.loop.reset_integral);
    read(k, "max_step", c.control.loop.integrator.max_step);
  }
  c.validate();
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["case"] = c.case_id;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["h_sweep"] = c.h_sweep;
  const PhysicalParams& p = c.physical;
  j["physical"] = {{"radius", p.radius},
                   {"density", p.density},
                   {"youngs_modulus", p.youngs_modulus},
                   {"shear_modulus", p.shear_modulus},
                   {"gravity", p.gravity},
                   {"damping_time", p.damping_time},
                   {"max_damping_ratio", p.max_damping_ratio},
                   {"strain_range", vec3(p.strain_range)}};
  const DatasetConfig& d = c.dataset;
  j["dataset"] = {{"num_markers", d.num_markers},
                  {"num_train", d.num_train},
                  {"train_duration", d.train_duration},
                  {"dt", d.dt},
                  {"hold", d.hold},
                  {"test_duration", d.test_duration},
                  {"torque_factor", d.torque_factor},
                  {"strain_fraction", d.strain_fraction},
                  {"initial_fraction", d.initial_fraction},
                  {"omega_min", d.omega_min},
                  {"omega_max", d.omega_max},
                  {"amplitude_fraction", d.amplitude_fraction},
                  {"max_internal_step", d.max_internal_step},
                  {"pac_samples", d.pac_samples},
                  {"pac",
                   {{"kappa0_min", d.pac.kappa0_min},
                    {"kappa0_max", d.pac.kappa0_max},
                    {"kappa1_min", d.pac.kappa1_min},
                    {"kappa1_max", d.pac.kappa1_max},
                    {"length", d.pac.length}}}};
  j["fusion"] = {{"h", c.fusion.h}, {"max_iterations", c.fusion.max_iterations}};
  const SparsificationConfig& s = c.sparsification;
  j["sparsification"] = {{"enabled", s.enabled},
                         {"e_max", s.e_max},
                         {"g_max", s.g_max},
                         {"k_max", vec3(s.k_max)},
                         {"max_iterations", s.max_iterations}};
  j["noise"] = {{"enabled", c.noise.enabled},
                {"sigma_position", c.noise.sigma_position},
                {"sigma_orientation", c.noise.sigma_orientation},
                {"apply_to_fusion", c.noise.apply_to_fusion}};
  j["pipeline"] = {{"savgol_order", c.pipeline.savgol_order},
                   {"savgol_window", c.pipeline.savgol_window},
                   {"exact_derivatives", c.pipeline.exact_derivatives},
                   {"trim_edges", c.pipeline.trim_edges},
                   {"filter_torques", c.pipeline.filter_torques}};
  const ControlConfig& k = c.control;
  j["control"] = {{"num_setpoints", k.num_setpoints},
                  {"hold", k.hold},
                  {"setpoint_fraction", k.setpoint_fraction},
                  {"kp_scale", k.gains.kp_scale},
                  {"zeta", k.gains.zeta},
                  {"ki_scale", k.gains.ki_scale},
                  {"upsilon", k.gains.upsilon},
                  {"dt_out", k.loop.dt_out},
                  {"settle_window", k.loop.settle_window},
                  {"reset_integral", k.loop.reset_integral},
                  {"max_step", k.loop.integrator.max_step}};
  return j.dump(2) + "\n";
}

RobotGeometry true_geometry(const ExperimentConfig& config) {
  const CaseSpec spec = case_spec(config.case_id);
  if (spec.affine_curvature) throw ConfigError("the affine-curvature case has no dynamic model");
  return circular_geometry(spec.segment_lengths, config.physical.radius);
}

PcsModel ground_truth_model(const ExperimentConfig& config) {
  const CaseSpec spec = case_spec(config.case_id);
  const RobotGeometry geom = true_geometry(config);
  const int ns = geom.num_segments();
  const double rho = config.physical.density;
  InertialParams inertial{std::vector<double>(ns, rho * geom.cross_section_area()),
                          std::vector<double>(ns, rho * geom.second_moment()), config.physical.gravity};
  Eigen::VectorXd k = baseline_stiffness(config, ns);
  for (int i = 0; i < ns; ++i) k.segment<3>(3 * i).array() *= spec.stiffness_scale[i].array();
  Eigen::VectorXd d = config.physical.damping_time * k;
  if (config.physical.max_damping_ratio > 0.0) {
    const Eigen::VectorXd m = mass_matrix(make_model(geom, inertial, ElasticityParams{k, d}),
                                          Eigen::VectorXd::Zero(k.size()))
                                  .diagonal();
    for (Eigen::Index e = 0; e < k.size(); ++e) {
      d[e] = std::min(d[e], 2.0 * config.physical.max_damping_ratio * std::sqrt(k[e] * m[e]));
    }
  }
  return make_model(geom, inertial, ElasticityParams{k, d});
}

Eigen::VectorXd strain_half_range(const ExperimentConfig& config, int num_segments) {
  Eigen::VectorXd r(3 * num_segments);
  for (int i = 0; i < num_segments; ++i) r.segment<3>(3 * i) = config.physical.strain_range;
  return r;
}

Eigen::VectorXd training_torque_bound(const ExperimentConfig& config) {
  const PcsModel model = ground_truth_model(config);
  return config.dataset.torque_factor * config.dataset.strain_fraction *
         model.stiffness.cwiseProduct(strain_half_range(config, model.geometry.num_segments()));
}

ExperimentData generate_datasets(const ExperimentConfig& config) {
  config.validate();
  const CaseSpec spec = case_spec(config.case_id);
  const DatasetConfig& d = config.dataset;
  ExperimentData out;
  if (spec.affine_curvature) {
    out.pac = pac_sample(d.pac, d.pac_samples, d.num_markers, stream_seed(config.seed, kPacStream));
    return out;
  }
  const PcsModel model = ground_truth_model(config);
  const int n = model.num_coordinates();
  const int ns = model.geometry.num_segments();
  const BackboneAbscissas s = BackboneAbscissas::equally_spaced(model.geometry.total_length(), d.num_markers);
  const Eigen::VectorXd bound = training_torque_bound(config);
  const Eigen::VectorXd base_k = baseline_stiffness(config, ns);
  const Eigen::VectorXd init = d.initial_fraction * strain_half_range(config, ns).cwiseProduct(base_k)
                                                        .cwiseQuotient(model.stiffness);
  RolloutOptions train_opts;
  train_opts.t_final = d.train_duration;
  train_opts.dt = d.dt;
  train_opts.max_internal_step = d.max_internal_step;
  std::vector<std::future<TrajectoryDataset>> train;
  for (int k = 0; k < d.num_train; ++k) {
    const std::uint64_t seed = stream_seed(config.seed, kTrainStream + static_cast<std::uint64_t>(k));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd q0(n);
    for (int e = 0; e < n; ++e) q0[e] = init[e] * u(rng);
    const ActuationSignal tau = ActuationSignal::stepwise_random(d.hold, bound, d.train_duration, rng());
    train.push_back(std::async(std::launch::async, [&model, &s, train_opts, q0, tau, n] {
      return rollout(model, q0, Eigen::VectorXd::Zero(n), tau, train_opts, s);
    }));
  }
  std::mt19937_64 rng(stream_seed(config.seed, kTestStream));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> w(d.omega_min, d.omega_max);
  Eigen::VectorXd a1(n), a2(n);
  for (int e = 0; e < n; ++e) a1[e] = d.amplitude_fraction * bound[e] * u(rng);
  for (int e = 0; e < n; ++e) a2[e] = d.amplitude_fraction * bound[e] * u(rng);
  const double w1 = w(rng), w2 = w(rng);
  RolloutOptions test_opts = train_opts;
  test_opts.t_final = d.test_duration;
  out.test = rollout(model, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n),
                     ActuationSignal::sinusoidal(a1, w1, a2, w2), test_opts, s);
  for (auto& f : train) out.train.push_back(f.get());
  return out;
}

std::vector<TrajectoryDataset> noisy_training_set(const ExperimentConfig& config,
                                                  const std::vector<TrajectoryDataset>& train) {
  if (!config.noise.enabled) return train;
  std::vector<TrajectoryDataset> out;
  out.reserve(train.size());
  for (std::size_t k = 0; k < train.size(); ++k) {
    out.push_back(add_measurement_noise(train[k], config.noise.sigma_position, config.noise.sigma_orientation,
                                        stream_seed(config.seed, kNoiseStream + k)));
  }
  return out;
}

MarkerData stacked_markers(const std::vector<TrajectoryDataset>& sets) {
  if (sets.empty()) throw InsufficientDataError("no trajectories");
  Eigen::Index rows = 0;
  for (const TrajectoryDataset& d : sets) rows += d.markers.rows();
  MarkerData out{sets.front().s, Eigen::MatrixXd(rows, sets.front().markers.cols())};
  Eigen::Index r = 0;
  for (const TrajectoryDataset& d : sets) {
    if (d.markers.cols() != out.poses.cols()) throw DimensionMismatchError("trajectories differ in markers");
    out.poses.middleRows(r, d.markers.rows()) = d.markers;
    r += d.markers.rows();
  }
  return out;
}

MarkerData pac_markers(const PacDataset& pac) { return {pac.s, pac.markers}; }

Eigen::MatrixXd sample_centered_torques(const TrajectoryDataset& d) {
  Eigen::MatrixXd out = d.torques;
  if (!d.actuation_held()) return out;
  for (Eigen::Index r = out.rows() - 1; r > 0; --r) out.row(r) = 0.5 * (d.torques.row(r) + d.torques.row(r - 1));
  return out;
}

RegressionData pipeline_regression_data(const std::vector<TrajectoryDataset>& sets, const std::vector<int>& kept,
                                        const PipelineConfig& pipeline) {
  pipeline.validate();
  const SavitzkyGolay filter(pipeline.savgol_order, pipeline.savgol_window);
  const int trim = pipeline.trim_edges ? pipeline.savgol_window / 2 : 0;
  std::vector<Eigen::MatrixXd> q, qd, qdd, tau;
  Eigen::Index rows = 0;
  for (const TrajectoryDataset& d : sets) {
    const MarkerData md{d.s, d.markers};
    const Eigen::MatrixXd qs = fused_configurations(md, kept);
    const Eigen::Index T = qs.rows() - 2 * trim;
    if (T < 1) throw InsufficientDataError("trajectory shorter than the filter window");
    if (d.torques.cols() != qs.cols()) {
      throw ConfigError("identified segmentation has " + std::to_string(qs.cols() / 3) +
                        " segments but the torques act on " + std::to_string(d.torques.cols() / 3));
    }
    q.push_back(filter.apply(qs, 0, d.dt).middleRows(trim, T));
    qd.push_back(filter.apply(qs, 1, d.dt).middleRows(trim, T));
    qdd.push_back(filter.apply(qs, 2, d.dt).middleRows(trim, T));
    const Eigen::MatrixXd tk = sample_centered_torques(d);
    tau.push_back((pipeline.filter_torques ? filter.apply(tk, 0, d.dt) : tk).middleRows(trim, T));
    rows += T;
  }
  RegressionData out;
  const Eigen::Index n = q.front().cols();
  out.q.resize(rows, n);
  out.qd.resize(rows, n);
  out.qdd.resize(rows, n);
  out.tau.resize(rows, n);
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const Eigen::Index T = q[k].rows();
    out.q.middleRows(r, T) = q[k];
    out.qd.middleRows(r, T) = qd[k];
    out.qdd.middleRows(r, T) = qdd[k];
    out.tau.middleRows(r, T) = tau[k];
    r += T;
  }
  return out;
}

RegressionData exact_regression_data(const std::vector<TrajectoryDataset>& sets) {
  Eigen::Index rows = 0;
  for (const TrajectoryDataset& d : sets) {
    if (!d.has_states()) throw ConfigError("exact derivatives need simulator states");
    rows += d.q.rows();
  }
  const Eigen::Index n = sets.front().q.cols();
  RegressionData out{Eigen::MatrixXd(rows, n), Eigen::MatrixXd(rows, n), Eigen::MatrixXd(rows, n),
                     Eigen::MatrixXd(rows, n)};
  Eigen::Index r = 0;
  for (const TrajectoryDataset& d : sets) {
    const Eigen::Index T = d.q.rows();
    out.q.middleRows(r, T) = d.q;
    out.qd.middleRows(r, T) = d.qd;
    out.qdd.middleRows(r, T) = d.qdd;
    out.tau.middleRows(r, T) = d.torques;
    r += T;
  }
  return out;
}

RobotGeometry fused_geometry(const FusionResult& fusion, const ExperimentConfig& config) {
  return circular_geometry(fusion.segment_lengths, config.physical.radius);
}

PipelineResult run_pipeline(const ExperimentConfig& config, const std::vector<TrajectoryDataset>& train) {
  config.validate();
  PipelineResult out;
  const std::vector<TrajectoryDataset> measured = noisy_training_set(config, train);
  out.fusion = kinematic_fusion(stacked_markers(config.noise.apply_to_fusion ? measured : train), config.fusion);
  RegressionData data;
  if (config.pipeline.exact_derivatives) {
    out.geometry = true_geometry(config);
    data = exact_regression_data(train);
  } else {
    out.geometry = fused_geometry(out.fusion, config);
    data = pipeline_regression_data(measured, out.fusion.kept_markers, config.pipeline);
  }
  out.model = identify(data, out.geometry, config.sparsification);
  return out;
}

ShapeErrorReport evaluate_model(const IdentifiedModel& model, const TrajectoryDataset& test,
                                double max_internal_step) {
  const PcsModel m = model.to_model();
  const Eigen::VectorXd q0 = to_full(m.mask, to_active(m.mask, fit_configuration(m.geometry, test.frame_poses(0),
                                                                                    test.s)));
  CompareOptions opts;
  opts.max_internal_step = max_internal_step;
  return compare_rollout(m, test, q0, Eigen::VectorXd::Zero(m.num_coordinates()), replay_signal(test), opts);
}

ParetoSweep run_pareto(const ExperimentConfig& config, const PacDataset& pac) {
  const MarkerData measured = pac_markers(pac);
  const std::vector<double> thresholds =
      config.h_sweep.empty() ? adaptive_thresholds(measured, log_thresholds(1e-3, 1.0, 60)) : config.h_sweep;
  return pareto_sweep(measured, thresholds, nullptr, config.fusion.max_iterations);
}

ControlDemo run_control_demo(const ExperimentConfig& config, const IdentifiedModel& model) {
  const PcsModel plant = ground_truth_model(config);
  const int n = model.library.geometry().num_coordinates();
  if (n != plant.num_coordinates()) {
    throw ConfigError("control: identified model and plant differ in configuration size");
  }
  Eigen::VectorXd hi = config.control.setpoint_fraction * strain_half_range(config, n / 3);
  for (int e = 0; e < n; ++e) {
    if (!model.mask().is_active(e)) hi[e] = 0.0;
  }
  ControlDemo out;
  out.setpoints = random_setpoints(config.control.num_setpoints, config.control.hold, -hi, hi,
                                   stream_seed(config.seed, kSetpointStream));
  Eigen::MatrixXd qd(n, out.setpoints.size());
  for (std::size_t k = 0; k < out.setpoints.size(); ++k) qd.col(static_cast<Eigen::Index>(k)) = out.setpoints[k].q_d;
  out.setpoint_range = qd.rowwise().maxCoeff() - qd.rowwise().minCoeff();
  out.gains = rule_of_thumb_gains(model, config.control.gains);
  out.result = closed_loop(plant, model, out.gains, out.setpoints, config.control.loop);
  return out;
}

}  // namespace pcsid
