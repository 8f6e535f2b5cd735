#include "pcsid/dynamics.hpp"

#include <Eigen/Cholesky>

#include <sstream>

#include "pcsid/quadrature.hpp"
#include "point_jets.hpp"

namespace pcsid {

namespace {

using detail::PointEvaluator;
using detail::PointJets;

void check_size(const PcsModel& model, const Eigen::VectorXd& v, const char* what) {
  if (v.size() != model.num_coordinates()) {
    std::ostringstream msg;
    msg << what << ": expected " << model.num_coordinates() << " entries, got " << v.size();
    throw DimensionMismatchError(msg.str());
  }
}

template <class Jac>
void accumulate_mass(Eigen::MatrixXd& mass, const Jac& jac, double w_a, double w_i) {
  mass.noalias() += w_a * jac.topRows(2).transpose() * jac.topRows(2);
  mass.noalias() += w_i * jac.row(2).transpose() * jac.row(2);
}

}  // namespace

void PcsModel::validate() const {
  const auto n = static_cast<std::size_t>(geometry.num_segments());
  if (rho_a.size() != n || rho_i.size() != n || gravity_weight.size() != n) {
    throw DimensionMismatchError("PcsModel: per-segment parameter count does not match geometry");
  }
  if (stiffness.size() != geometry.num_coordinates() || damping.size() != geometry.num_coordinates()) {
    throw DimensionMismatchError("PcsModel: stiffness/damping size does not match geometry");
  }
  if (mask.size() != geometry.num_coordinates()) {
    throw DimensionMismatchError("PcsModel: mask size does not match geometry");
  }
}

PcsModel make_model(const RobotGeometry& geom, const InertialParams& inertial, const ElasticityParams& elastic) {
  PcsModel m;
  m.geometry = geom;
  m.rho_a = inertial.rho_a;
  m.rho_i = inertial.rho_i;
  for (double ra : inertial.rho_a) {
    if (!(ra > 0.0)) {
      throw InvalidArgumentError("InertialParams: rho_a must be positive");
    }
    m.gravity_weight.push_back(ra * inertial.g);
  }
  for (double ri : inertial.rho_i) {
    if (!(ri > 0.0)) {
      throw InvalidArgumentError("InertialParams: rho_i must be positive");
    }
  }
  if (inertial.g < 0.0) {
    throw InvalidArgumentError("InertialParams: g must be non-negative");
  }
  m.stiffness = elastic.stiffness;
  m.damping = elastic.damping;
  if ((m.stiffness.array() < 0.0).any() || (m.damping.array() < 0.0).any()) {
    throw InvalidArgumentError("ElasticityParams: stiffness and damping must be non-negative");
  }
  m.mask = StrainMask::full(geom.num_coordinates());
  m.validate();
  return m;
}

PcsModel make_model(const RobotGeometry& geom, const InertialParams& inertial) {
  const int n = geom.num_coordinates();
  return make_model(geom, inertial, ElasticityParams{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)});
}

Eigen::VectorXd to_active(const StrainMask& mask, const Eigen::VectorXd& full) {
  const std::vector<int> idx = mask.active_indices();
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t a = 0; a < idx.size(); ++a) {
    out[static_cast<Eigen::Index>(a)] = full[idx[a]];
  }
  return out;
}

Eigen::VectorXd to_full(const StrainMask& mask, const Eigen::VectorXd& active) {
  const std::vector<int> idx = mask.active_indices();
  if (static_cast<std::size_t>(active.size()) != idx.size()) {
    throw DimensionMismatchError("to_full: active vector size does not match mask");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mask.size());
  for (std::size_t a = 0; a < idx.size(); ++a) {
    out[idx[a]] = active[static_cast<Eigen::Index>(a)];
  }
  return out;
}

Eigen::MatrixXd mass_matrix(const PcsModel& model, const Eigen::VectorXd& q) {
  check_size(model, q, "mass_matrix");
  PointEvaluator eval(model);
  const int na = eval.num_active();
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(na, na);
  PointJets jets;
  for (const QuadraturePoint& pt : backbone_quadrature(model.geometry)) {
    eval.jacobian(q, pt.s, jets);
    const auto i = static_cast<std::size_t>(pt.segment);
    accumulate_mass(mass, jets.jac, pt.weight * model.rho_a[i], pt.weight * model.rho_i[i]);
  }
  return mass;
}

Eigen::VectorXd gravity_vector(const PcsModel& model, const Eigen::VectorXd& q) {
  check_size(model, q, "gravity_vector");
  PointEvaluator eval(model);
  Eigen::VectorXd grav = Eigen::VectorXd::Zero(eval.num_active());
  PointJets jets;
  for (const QuadraturePoint& pt : backbone_quadrature(model.geometry)) {
    const double w = pt.weight * model.gravity_weight[static_cast<std::size_t>(pt.segment)];
    if (w == 0.0) {
      continue;
    }
    eval.jacobian(q, pt.s, jets);
    grav.noalias() += w * jets.jac.row(1).transpose();
  }
  return grav;
}

DynamicsTerms dynamics_terms(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
  check_size(model, q, "dynamics_terms");
  check_size(model, qd, "dynamics_terms");
  PointEvaluator eval(model);
  const int na = eval.num_active();
  DynamicsTerms out;
  out.mass = Eigen::MatrixXd::Zero(na, na);
  out.gravity = Eigen::VectorXd::Zero(na);
  Eigen::MatrixXd mass_rate = Eigen::MatrixXd::Zero(na, na);
  Eigen::VectorXd half_grad = Eigen::VectorXd::Zero(na);  // 1/2 d/dq (qd^T M qd)
  PointJets jets;
  for (const QuadraturePoint& pt : backbone_quadrature(model.geometry)) {
    eval.jets(q, qd, pt.s, jets);
    const auto i = static_cast<std::size_t>(pt.segment);
    const double wa = pt.weight * model.rho_a[i];
    const double wi = pt.weight * model.rho_i[i];
    accumulate_mass(out.mass, jets.jac, wa, wi);
    out.gravity.noalias() += pt.weight * model.gravity_weight[i] * jets.jac.row(1).transpose();
    const auto jp = jets.jac.topRows(2);
    const auto rp = jets.jac_rate.topRows(2);
    mass_rate.noalias() += wa * (rp.transpose() * jp + jp.transpose() * rp);
    mass_rate.noalias() += wi * (jets.jac_rate.row(2).transpose() * jets.jac.row(2) +
                                 jets.jac.row(2).transpose() * jets.jac_rate.row(2));
    // d/dq_a (J qd) = column a of dJ/dt by symmetry of second derivatives.
    half_grad.noalias() += wa * rp.transpose() * jets.velocity.head<2>();
    half_grad.noalias() += wi * jets.velocity[2] * jets.jac_rate.row(2).transpose();
  }
  out.coriolis = mass_rate * to_active(model.mask, qd) - half_grad;
  return out;
}

Eigen::VectorXd coriolis_force(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
  return dynamics_terms(model, q, qd).coriolis;
}

std::vector<Eigen::MatrixXd> mass_matrix_partials(const PcsModel& model, const Eigen::VectorXd& q) {
  check_size(model, q, "mass_matrix_partials");
  PointEvaluator eval(model);
  const int na = eval.num_active();
  std::vector<Eigen::MatrixXd> partials(static_cast<std::size_t>(na), Eigen::MatrixXd::Zero(na, na));
  PointJets jets;
  std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>> hess;
  for (const QuadraturePoint& pt : backbone_quadrature(model.geometry)) {
    eval.hessian(q, pt.s, jets, hess);
    const auto i = static_cast<std::size_t>(pt.segment);
    const double wa = pt.weight * model.rho_a[i];
    const double wi = pt.weight * model.rho_i[i];
    for (int k = 0; k < jets.columns; ++k) {
      const auto& h = hess[static_cast<std::size_t>(k)];
      Eigen::MatrixXd& dm = partials[static_cast<std::size_t>(k)];
      dm.noalias() += wa * (h.topRows(2).transpose() * jets.jac.topRows(2) +
                            jets.jac.topRows(2).transpose() * h.topRows(2));
      dm.noalias() += wi * (h.row(2).transpose() * jets.jac.row(2) + jets.jac.row(2).transpose() * h.row(2));
    }
  }
  return partials;
}

Eigen::MatrixXd mass_matrix_rate(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
  check_size(model, qd, "mass_matrix_rate");
  const std::vector<Eigen::MatrixXd> partials = mass_matrix_partials(model, q);
  const Eigen::VectorXd qa = to_active(model.mask, qd);
  Eigen::MatrixXd rate = Eigen::MatrixXd::Zero(qa.size(), qa.size());
  for (Eigen::Index k = 0; k < qa.size(); ++k) {
    rate += partials[static_cast<std::size_t>(k)] * qa[k];
  }
  return rate;
}

Eigen::MatrixXd coriolis_matrix(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
  check_size(model, qd, "coriolis_matrix");
  const std::vector<Eigen::MatrixXd> dm = mass_matrix_partials(model, q);
  const Eigen::VectorXd qa = to_active(model.mask, qd);
  const Eigen::Index na = qa.size();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(na, na);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) {
      double sum = 0.0;
      for (Eigen::Index k = 0; k < na; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const double gamma = 0.5 * (dm[ku](i, j) + dm[static_cast<std::size_t>(j)](i, k) -
                                    dm[static_cast<std::size_t>(i)](j, k));
        sum += gamma * qa[k];
      }
      c(i, j) = sum;
    }
  }
  return c;
}

Eigen::VectorXd forward_dynamics(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                 const Eigen::VectorXd& tau) {
  check_size(model, tau, "forward_dynamics");
  const DynamicsTerms terms = dynamics_terms(model, q, qd);
  const Eigen::VectorXd qa = to_active(model.mask, q);
  const Eigen::VectorXd qda = to_active(model.mask, qd);
  const Eigen::VectorXd k = to_active(model.mask, model.stiffness);
  const Eigen::VectorXd d = to_active(model.mask, model.damping);
  const Eigen::VectorXd rhs = to_active(model.mask, tau) - terms.coriolis - terms.gravity -
                              k.cwiseProduct(qa) - d.cwiseProduct(qda);
  Eigen::LLT<Eigen::MatrixXd> llt(terms.mass);
  if (llt.info() != Eigen::Success) {
    throw IllConditionedMassError("forward_dynamics: mass matrix is not positive definite");
  }
  return to_full(model.mask, llt.solve(rhs));
}

double kinetic_energy(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
  const Eigen::VectorXd qda = to_active(model.mask, qd);
  return 0.5 * qda.dot(mass_matrix(model, q) * qda);
}

double gravitational_energy(const PcsModel& model, const Eigen::VectorXd& q) {
  check_size(model, q, "gravitational_energy");
  Eigen::VectorXd qm = to_full(model.mask, to_active(model.mask, q));
  double u = 0.0;
  for (const QuadraturePoint& pt : backbone_quadrature(model.geometry)) {
    u += pt.weight * model.gravity_weight[static_cast<std::size_t>(pt.segment)] * robot_fk(model.geometry, qm, pt.s).py;
  }
  return u;
}

double elastic_energy(const PcsModel& model, const Eigen::VectorXd& q) {
  const Eigen::VectorXd qa = to_active(model.mask, q);
  const Eigen::VectorXd k = to_active(model.mask, model.stiffness);
  return 0.5 * qa.dot(k.cwiseProduct(qa));
}

Eigen::MatrixXd mass_matrix(const RobotGeometry& geom, const InertialParams& inertial, const Eigen::VectorXd& q) {
  return mass_matrix(make_model(geom, inertial), q);
}

Eigen::VectorXd gravity_vector(const RobotGeometry& geom, const InertialParams& inertial, const Eigen::VectorXd& q) {
  return gravity_vector(make_model(geom, inertial), q);
}

Eigen::VectorXd coriolis_force(const RobotGeometry& geom, const InertialParams& inertial, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& qd) {
  return coriolis_force(make_model(geom, inertial), q, qd);
}

Eigen::VectorXd forward_dynamics(const RobotGeometry& geom, const InertialParams& inertial,
                                 const ElasticityParams& elastic, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& tau) {
  return forward_dynamics(make_model(geom, inertial, elastic), q, qd, tau);
}

}  // namespace pcsid
