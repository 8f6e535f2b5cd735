#pragma once

// Linear-in-parameters parametrization of the PCS Lagrangian,
//   L(q, qd) = sum_j pi_j f_j(q, qd),
// with one energy functional per segment and kind plus one elastic term per
// active coordinate, and its Euler-Lagrange image
//   Psi_j = d/dt df_j/dqd - df_j/dq.
// Damping enters as extra rows qd_e e_e so that Psi^T pi+ = tau.
//
// Basis functions and coefficients:
//   kinetic-translational(i)  f = 1/2 int_i |J_p qd|^2 ds    pi = rho A_i    [kg/m]
//   kinetic-rotational(i)     f = 1/2 int_i (J_th qd)^2 ds   pi = rho I_i    [kg m]
//   gravitational(i)          f = -int_i p_y ds              pi = rho A_i g  [N/m]
//   elastic(e)                f = -1/2 q_e^2                 pi = k_e
//   damping(e)                row qd_e e_e                   d_e

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "pcsid/dynamics.hpp"
#include "pcsid/kinematics.hpp"
#include "pcsid/mask.hpp"

namespace pcsid {

enum class BasisKind { KineticTranslational, KineticRotational, Gravitational, Elastic };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

struct BasisDescriptor {
  BasisKind kind = BasisKind::Elastic;
  int index = 0;  // segment for kinetic and gravitational terms, coordinate for elastic terms

  std::string label() const;
  const char* unit() const;
  bool operator==(const BasisDescriptor&) const = default;
};

class BasisLibrary {
 public:
  BasisLibrary() = default;
  BasisLibrary(RobotGeometry geometry, StrainMask mask, std::vector<BasisDescriptor> descriptors);

  const RobotGeometry& geometry() const { return geometry_; }
  const StrainMask& mask() const { return mask_; }
  const std::vector<BasisDescriptor>& descriptors() const { return descriptors_; }
  const std::vector<int>& damping_coordinates() const { return damping_; }

  int num_functions() const { return static_cast<int>(descriptors_.size()); }
  int num_damping() const { return static_cast<int>(damping_.size()); }
  int size() const { return num_functions() + num_damping(); }
  int num_coordinates() const { return geometry_.num_coordinates(); }

  // Position of a descriptor in the coefficient vector, or -1.
  int find(BasisKind kind, int index) const;
  // Position of the damping coefficient of coordinate e, or -1.
  int find_damping(int coordinate) const;
  // Human-readable label of coefficient j (basis functions, then damping).
  std::string coefficient_label(int j) const;

 private:
  RobotGeometry geometry_;
  StrainMask mask_;
  std::vector<BasisDescriptor> descriptors_;
  std::vector<int> damping_;
};

BasisLibrary build_library(const RobotGeometry& geometry, const StrainMask& mask);

// f_j(q, qd) for every basis function.
Eigen::VectorXd eval_lagrangian_basis(const BasisLibrary& library, const Eigen::VectorXd& q,
                                      const Eigen::VectorXd& qd);

// Lagrangian sum_j pi_j f_j (damping coefficients ignored).
double eval_lagrangian(const BasisLibrary& library, const Eigen::VectorXd& coefficients, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& qd);

// n_psi x n_q matrix whose rows are the Euler-Lagrange images; columns of
// inactive coordinates are zero. Inactive entries of the inputs are ignored.
Eigen::MatrixXd eval_eom_basis(const BasisLibrary& library, const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                               const Eigen::VectorXd& qdd);

// Same, writing into a preallocated n_psi x n_q block.
void eval_eom_basis(const BasisLibrary& library, const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                    const Eigen::VectorXd& qdd, Eigen::Ref<Eigen::MatrixXd> out);

struct ProbeOptions {
  int states = 64;
  double zero_tolerance = 1e-12;
  std::uint64_t seed = 0x5eed;
};

// Removes coordinate e: marks it inactive, drops its damping coefficient and
// every basis function whose Euler-Lagrange image vanishes on a probe set of
// random masked states. Throws InvalidMaskError when e is the last active
// coordinate.
BasisLibrary reduce_library(const BasisLibrary& library, int coordinate, const ProbeOptions& probe = {});

// Worst relative deviation of the Euler-Lagrange rows from central finite
// differences of the basis functions over random states.
double derivative_selfcheck(const BasisLibrary& library, int trials, std::uint64_t seed = 1);

// Coefficient vector pi+ of a physical model in the library's layout.
Eigen::VectorXd model_coefficients(const BasisLibrary& library, const PcsModel& model);

// Physical model read out of a coefficient vector. Parameters of dropped
// basis functions are zero; stiffness and damping are zero at inactive
// coordinates.
PcsModel model_from_coefficients(const BasisLibrary& library, const Eigen::VectorXd& coefficients);

}  // namespace pcsid
