#pragma once

// Planar PCS Lagrangian dynamics:
//   M(q) qdd + C(q, qd) qd + G(q) + K q + D qd = tau
// with all backbone integrals evaluated by the 8-point Gauss-Legendre rule.
//
// Every function works on the active subset of coordinates described by the
// model's StrainMask. Configuration inputs are full length (n_q) with inactive
// entries ignored (treated as zero); matrix and force outputs are expressed
// in active coordinates (n_a entries), except forward_dynamics which returns a
// full-length acceleration with zeros at inactive coordinates.

#include <Eigen/Core>

#include <vector>

#include "pcsid/kinematics.hpp"
#include "pcsid/mask.hpp"

namespace pcsid {

struct InertialParams {
  std::vector<double> rho_a;  // mass per unit length, kg/m
  std::vector<double> rho_i;  // rotary inertia per unit length, kg m
  double g = 9.81;            // acts along -y
};

// Diagonal stiffness and damping, one entry per configuration coordinate.
struct ElasticityParams {
  Eigen::VectorXd stiffness;
  Eigen::VectorXd damping;
};

// Lumped parameters of the EOM. The gravity weight is kept separate from
// rho_a so that an identified model, whose gravity and kinetic coefficients
// are regressed independently, fits the same structure.
struct PcsModel {
  RobotGeometry geometry;
  std::vector<double> rho_a;           // per segment
  std::vector<double> rho_i;           // per segment
  std::vector<double> gravity_weight;  // per segment, rho_a * g for the simulator
  Eigen::VectorXd stiffness;           // n_q
  Eigen::VectorXd damping;             // n_q
  StrainMask mask;

  int num_coordinates() const { return geometry.num_coordinates(); }
  int num_active() const { return mask.num_active(); }
  void validate() const;
};

PcsModel make_model(const RobotGeometry& geom, const InertialParams& inertial, const ElasticityParams& elastic);
PcsModel make_model(const RobotGeometry& geom, const InertialParams& inertial);

// M, G and the velocity product C(q, qd) qd evaluated together.
struct DynamicsTerms {
  Eigen::MatrixXd mass;
  Eigen::VectorXd gravity;
  Eigen::VectorXd coriolis;
};

Eigen::MatrixXd mass_matrix(const PcsModel& model, const Eigen::VectorXd& q);
Eigen::VectorXd gravity_vector(const PcsModel& model, const Eigen::VectorXd& q);

// C(q, qd) qd = Mdot qd - 1/2 d/dq (qd^T M qd), the Christoffel contraction,
// with Mdot and the gradient term from exact directional derivatives.
Eigen::VectorXd coriolis_force(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd);

// Full Coriolis matrix from Christoffel symbols of the first kind,
// C_ij = sum_k 1/2 (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i) qd_k.
Eigen::MatrixXd coriolis_matrix(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd);

// dM/dq_k for every active k, in active coordinates.
std::vector<Eigen::MatrixXd> mass_matrix_partials(const PcsModel& model, const Eigen::VectorXd& q);

// dM/dt along qd.
Eigen::MatrixXd mass_matrix_rate(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd);

DynamicsTerms dynamics_terms(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd);

// Solves M qdd = tau - C qd - G - K q - D qd with a Cholesky factorization.
// Throws IllConditionedMassError if M is not numerically positive definite.
Eigen::VectorXd forward_dynamics(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                                 const Eigen::VectorXd& tau);

double kinetic_energy(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd);
double gravitational_energy(const PcsModel& model, const Eigen::VectorXd& q);
double elastic_energy(const PcsModel& model, const Eigen::VectorXd& q);
inline double total_energy(const PcsModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qd) {
  return kinetic_energy(model, q, qd) + gravitational_energy(model, q) + elastic_energy(model, q);
}

// Restrict a full-length vector to active coordinates and back.
Eigen::VectorXd to_active(const StrainMask& mask, const Eigen::VectorXd& full);
Eigen::VectorXd to_full(const StrainMask& mask, const Eigen::VectorXd& active);

// Convenience overloads with the simulator's parameter types.
Eigen::MatrixXd mass_matrix(const RobotGeometry& geom, const InertialParams& inertial, const Eigen::VectorXd& q);
Eigen::VectorXd gravity_vector(const RobotGeometry& geom, const InertialParams& inertial, const Eigen::VectorXd& q);
Eigen::VectorXd coriolis_force(const RobotGeometry& geom, const InertialParams& inertial, const Eigen::VectorXd& q,
                               const Eigen::VectorXd& qd);
Eigen::VectorXd forward_dynamics(const RobotGeometry& geom, const InertialParams& inertial,
                                 const ElasticityParams& elastic, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qd, const Eigen::VectorXd& tau);

}  // namespace pcsid
