#include "pcsid/regression.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "pcsid/errors.hpp"

namespace pcsid {

void RegressionData::validate(int num_coordinates) const {
  const Eigen::Index t = q.rows();
  if (t < 1) {
    throw InsufficientDataError("regression: no samples");
  }
  for (const Eigen::MatrixXd* m : {&q, &qd, &qdd, &tau}) {
    if (m->rows() != t || m->cols() != num_coordinates) {
      throw DimensionMismatchError("regression: q, qd, qdd and tau must all be T x n_q");
    }
  }
}

RegressorSystem assemble_regressor(const RegressionData& data, const BasisLibrary& library) {
  data.validate(library.num_coordinates());
  const std::vector<int>& active = library.damping_coordinates();
  const auto na = static_cast<Eigen::Index>(active.size());
  const Eigen::Index frames = data.q.rows();
  RegressorSystem sys;
  sys.rows_per_frame = static_cast<int>(na);
  sys.X.resize(frames * na, library.size());
  sys.tau.resize(frames * na);
  Eigen::MatrixXd psi(library.size(), library.num_coordinates());
  for (Eigen::Index k = 0; k < frames; ++k) {
    eval_eom_basis(library, data.q.row(k).transpose(), data.qd.row(k).transpose(), data.qdd.row(k).transpose(),
                   psi);
    for (Eigen::Index a = 0; a < na; ++a) {
      const int e = active[static_cast<std::size_t>(a)];
      sys.X.row(k * na + a) = psi.col(e).transpose();
      sys.tau[k * na + a] = data.tau(k, e);
    }
  }
  return sys;
}

LeastSquaresResult solve_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) {
    throw DimensionMismatchError("solve_least_squares: row count does not match the right-hand side");
  }
  if (X.rows() < X.cols()) {
    throw InsufficientDataError("solve_least_squares: fewer equations than unknowns");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw NumericalError("solve_least_squares: non-finite regressor entries");
  }
  Eigen::VectorXd scale = X.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < scale.size(); ++j) {
    scale[j] = scale[j] > 0.0 ? 1.0 / scale[j] : 1.0;
  }
  const Eigen::MatrixXd Xs = X * scale.asDiagonal();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Xs);
  LeastSquaresResult r;
  r.coefficients = scale.asDiagonal() * cod.solve(y);
  r.residual = (y - X * r.coefficients).norm();
  const double ynorm = y.norm();
  r.relative_residual = ynorm > 0.0 ? r.residual / ynorm : r.residual;
  r.rank = static_cast<int>(cod.rank());
  r.rank_deficient = r.rank < X.cols();
  if (r.rank > 0) {
    const Eigen::VectorXd d = cod.matrixQTZ().diagonal().head(r.rank).cwiseAbs();
    r.condition = d.maxCoeff() / d.minCoeff();
  } else {
    r.condition = std::numeric_limits<double>::infinity();
  }
  return r;
}

LeastSquaresResult solve_least_squares(const RegressorSystem& system) {
  return solve_least_squares(system.X, system.tau);
}

Eigen::Vector3d SparsificationConfig::thresholds(const RobotGeometry& geometry) const {
  const double g = g_max > 0.0 ? g_max : e_max / 3.0;
  Eigen::Vector3d k(geometry.second_moment() * e_max, geometry.cross_section_area() * g,
                    geometry.cross_section_area() * e_max);
  for (int c = 0; c < 3; ++c) {
    if (k_max[c] > 0.0) {
      k[c] = k_max[c];
    }
  }
  return k;
}

void SparsificationConfig::validate() const {
  if (!(e_max > 0.0) || g_max < 0.0) {
    throw ConfigError("sparsification: E_max must be positive and G_max non-negative");
  }
  if (max_iterations < 1) {
    throw ConfigError("sparsification: max_iterations must be at least 1");
  }
}

std::vector<double> IdentifiedModel::gravity_consistency(double g) const {
  std::vector<double> out;
  for (int i = 0; i < library.geometry().num_segments(); ++i) {
    const int jg = library.find(BasisKind::Gravitational, i);
    const int ja = library.find(BasisKind::KineticTranslational, i);
    out.push_back(jg >= 0 && ja >= 0 && g > 0.0 ? coefficients[jg] / (coefficients[ja] * g)
                                                : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

std::vector<StiffnessEstimate> extract_stiffness(const IdentifiedModel& model) {
  std::vector<StiffnessEstimate> out;
  for (int e : model.mask().active_indices()) {
    const int j = model.library.find(BasisKind::Elastic, e);
    out.push_back({e, j >= 0 ? model.coefficients[j] : 0.0});
  }
  return out;
}

SparsifyResult sparsify_step(const IdentifiedModel& model, const SparsificationConfig& config) {
  config.validate();
  const Eigen::Vector3d k_max = config.thresholds(model.library.geometry());
  std::vector<int> over;
  int best = -1;
  double best_ratio = std::numeric_limits<double>::infinity();
  for (const StiffnessEstimate& k : extract_stiffness(model)) {
    const double ratio = k.value / k_max[static_cast<int>(strain_kind_of(k.coordinate))];
    if (ratio > 1.0) {
      over.push_back(k.coordinate);
    }
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best = k.coordinate;
    }
  }
  if (static_cast<int>(over.size()) == model.mask().num_active()) {
    over.erase(std::remove(over.begin(), over.end(), best), over.end());
  }
  SparsifyResult r{model.library, over};
  for (int e : over) {
    r.library = reduce_library(r.library, e);
  }
  return r;
}

namespace {

IterationRecord record(int iteration, const IdentifiedModel& m, const LeastSquaresResult& ls) {
  IterationRecord rec;
  rec.iteration = iteration;
  rec.mask = m.mask();
  for (int j = 0; j < m.library.size(); ++j) {
    rec.labels.push_back(m.library.coefficient_label(j));
  }
  rec.coefficients = m.coefficients;
  rec.residual = ls.residual;
  rec.relative_residual = ls.relative_residual;
  rec.rank = ls.rank;
  rec.condition = ls.condition;
  return rec;
}

}  // namespace

IdentifiedModel fit(const RegressionData& data, const BasisLibrary& library) {
  const LeastSquaresResult ls = solve_least_squares(assemble_regressor(data, library));
  IdentifiedModel m;
  m.library = library;
  m.coefficients = ls.coefficients;
  m.residual = ls.residual;
  m.relative_residual = ls.relative_residual;
  m.rank_deficient = ls.rank_deficient;
  m.history.push_back(record(1, m, ls));
  return m;
}

IdentifiedModel identify(const RegressionData& data, const RobotGeometry& geometry,
                         const SparsificationConfig& config) {
  config.validate();
  BasisLibrary library = build_library(geometry, StrainMask::full(geometry.num_coordinates()));
  std::vector<IterationRecord> history;
  IdentifiedModel model;
  for (int iteration = 1;; ++iteration) {
    model = fit(data, library);
    IterationRecord rec = model.history.front();
    rec.iteration = iteration;
    if (!config.enabled || iteration >= config.max_iterations) {
      history.push_back(std::move(rec));
      break;
    }
    SparsifyResult step = sparsify_step(model, config);
    rec.removed = step.removed;
    history.push_back(std::move(rec));
    if (step.removed.empty()) {
      break;
    }
    library = std::move(step.library);
  }
  model.history = std::move(history);
  return model;
}

TrajectoryDataset predict_rollout(const IdentifiedModel& model, const Eigen::VectorXd& q0, const Eigen::VectorXd& qd0,
                                  const ActuationSignal& actuation, const RolloutOptions& options,
                                  const BackboneAbscissas& s) {
  return rollout(model.to_model(), q0, qd0, actuation, options, s);
}

namespace {

using nlohmann::json;

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double finite_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string identified_model_to_json(const IdentifiedModel& model) {
  const BasisLibrary& lib = model.library;
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["geometry"] = {{"segment_lengths", lib.geometry().segment_lengths()},
                   {"cross_section_area", lib.geometry().cross_section_area()},
                   {"second_moment", lib.geometry().second_moment()}};
  j["mask"] = lib.mask().flags();
  json coeffs = json::array();
  for (int k = 0; k < lib.num_functions(); ++k) {
    const BasisDescriptor& d = lib.descriptors()[static_cast<std::size_t>(k)];
    coeffs.push_back({{"kind", to_string(d.kind)}, {"index", d.index}, {"unit", d.unit()},
                      {"value", model.coefficients[k]}});
  }
  j["coefficients"] = coeffs;
  json damping = json::array();
  for (int k = 0; k < lib.num_damping(); ++k) {
    damping.push_back({{"coordinate", lib.damping_coordinates()[static_cast<std::size_t>(k)]},
                       {"value", model.coefficients[lib.num_functions() + k]}});
  }
  j["damping"] = damping;
  j["residual"] = model.residual;
  j["relative_residual"] = model.relative_residual;
  j["rank_deficient"] = model.rank_deficient;
  json hist = json::array();
  for (const IterationRecord& r : model.history) {
    hist.push_back({{"iteration", r.iteration},
                    {"mask", r.mask.flags()},
                    {"labels", r.labels},
                    {"coefficients", vector_json(r.coefficients)},
                    {"residual", r.residual},
                    {"relative_residual", r.relative_residual},
                    {"rank", r.rank},
                    {"condition", number(r.condition)},
                    {"removed", r.removed}});
  }
  j["history"] = hist;
  return j.dump(2) + "\n";
}

IdentifiedModel identified_model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
      throw ConfigError("identified model: unsupported schema_version");
    }
    const json& g = j.at("geometry");
    const RobotGeometry geom(g.at("segment_lengths").get<std::vector<double>>(),
                             g.at("cross_section_area").get<double>(), g.at("second_moment").get<double>());
    const StrainMask mask(j.at("mask").get<std::vector<bool>>());
    std::vector<BasisDescriptor> descriptors;
    std::vector<double> values;
    for (const json& c : j.at("coefficients")) {
      descriptors.push_back({basis_kind_from_string(c.at("kind").get<std::string>()), c.at("index").get<int>()});
      values.push_back(c.at("value").get<double>());
    }
    IdentifiedModel m;
    m.library = BasisLibrary(geom, mask, descriptors);
    const json& damping = j.at("damping");
    if (static_cast<int>(damping.size()) != m.library.num_damping()) {
      throw ConfigError("identified model: damping entries do not match the active coordinates");
    }
    for (const json& d : damping) {
      if (m.library.find_damping(d.at("coordinate").get<int>()) < 0) {
        throw ConfigError("identified model: damping for an inactive coordinate");
      }
    }
    m.coefficients.resize(m.library.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      m.coefficients[static_cast<Eigen::Index>(k)] = values[k];
    }
    for (const json& d : damping) {
      m.coefficients[m.library.find_damping(d.at("coordinate").get<int>())] = d.at("value").get<double>();
    }
    m.residual = j.value("residual", 0.0);
    m.relative_residual = j.value("relative_residual", 0.0);
    m.rank_deficient = j.value("rank_deficient", false);
    for (const json& h : j.value("history", json::array())) {
      IterationRecord r;
      r.iteration = h.at("iteration").get<int>();
      r.mask = StrainMask(h.at("mask").get<std::vector<bool>>());
      r.labels = h.at("labels").get<std::vector<std::string>>();
      r.coefficients = vector_from(h.at("coefficients"));
      r.residual = h.at("residual").get<double>();
      r.relative_residual = h.at("relative_residual").get<double>();
      r.rank = h.at("rank").get<int>();
      r.condition = finite_or_nan(h.at("condition"));
      r.removed = h.at("removed").get<std::vector<int>>();
      m.history.push_back(std::move(r));
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("identified model: malformed JSON: ") + e.what());
  }
}

}  // namespace pcsid
