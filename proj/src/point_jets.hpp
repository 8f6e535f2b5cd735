#pragma once

// Per-point kinematic jets shared by the dynamics and the basis library.

#include <Eigen/Core>

#include <vector>

#include "pcsid/dual.hpp"
#include "pcsid/dynamics.hpp"
#include "pcsid/kinematics.hpp"
#include "pcsid/mask.hpp"

namespace pcsid::detail {

using D1 = Dual<double>;
using D2 = Dual<D1>;

// Pose, velocity, Jacobian and Jacobian rate at one backbone point, with
// Jacobian columns in active-coordinate order.
struct PointJets {
  Eigen::Vector3d pose = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac;
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac_rate;
  int columns = 0;  // active columns that can influence this point
};

class PointEvaluator {
 public:
  PointEvaluator(const RobotGeometry& geometry, const StrainMask& mask)
      : geometry_(geometry), active_(mask.active_indices()),
        x1_(static_cast<std::size_t>(geometry.num_coordinates())),
        x2_(static_cast<std::size_t>(geometry.num_coordinates())) {}
  explicit PointEvaluator(const PcsModel& model) : PointEvaluator(model.geometry, model.mask) {}

  const std::vector<int>& active() const { return active_; }
  int num_active() const { return static_cast<int>(active_.size()); }

  int columns_within(double s) const {
    const int reach = kStrainsPerSegment * (locate(geometry_, s).segment + 1);
    int n = 0;
    while (n < num_active() && active_[static_cast<std::size_t>(n)] < reach) {
      ++n;
    }
    return n;
  }

  // Jacobian only (first-order passes).
  void jacobian(const Eigen::VectorXd& q, double s, PointJets& out) {
    const int na = num_active();
    out.jac.setZero(3, na);
    out.columns = columns_within(s);
    load_first_order(q);
    if (out.columns == 0) {
      const auto p = robot_fk_flat<D1>(geometry_, x1_, s);
      out.pose = {p.px.v, p.py.v, p.theta.v};
      return;
    }
    for (int a = 0; a < out.columns; ++a) {
      const auto c = static_cast<std::size_t>(active_[static_cast<std::size_t>(a)]);
      x1_[c].d = 1.0;
      const auto p = robot_fk_flat<D1>(geometry_, x1_, s);
      x1_[c].d = 0.0;
      out.pose = {p.px.v, p.py.v, p.theta.v};
      out.jac.col(a) << p.px.d, p.py.d, p.theta.d;
    }
  }

  // Jacobian, velocity J qd and its rate dJ/dt along qd.
  void jets(const Eigen::VectorXd& q, const Eigen::VectorXd& qd, double s, PointJets& out) {
    const int na = num_active();
    out.jac.setZero(3, na);
    out.jac_rate.setZero(3, na);
    out.velocity.setZero();
    out.columns = columns_within(s);
    for (std::size_t c = 0; c < x2_.size(); ++c) {
      x2_[c] = D2(0.0);
    }
    for (int a = 0; a < na; ++a) {
      const auto c = static_cast<std::size_t>(active_[static_cast<std::size_t>(a)]);
      x2_[c] = D2(D1(q[static_cast<Eigen::Index>(c)], 0.0), D1(qd[static_cast<Eigen::Index>(c)], 0.0));
    }
    if (out.columns == 0) {
      const auto p = robot_fk_flat<D2>(geometry_, x2_, s);
      out.pose = {p.px.v.v, p.py.v.v, p.theta.v.v};
      return;
    }
    for (int a = 0; a < out.columns; ++a) {
      const auto c = static_cast<std::size_t>(active_[static_cast<std::size_t>(a)]);
      x2_[c].v.d = 1.0;
      const auto p = robot_fk_flat<D2>(geometry_, x2_, s);
      x2_[c].v.d = 0.0;
      out.pose = {p.px.v.v, p.py.v.v, p.theta.v.v};
      out.velocity = {p.px.d.v, p.py.d.v, p.theta.d.v};
      out.jac.col(a) << p.px.v.d, p.py.v.d, p.theta.v.d;
      out.jac_rate.col(a) << p.px.d.d, p.py.d.d, p.theta.d.d;
    }
  }

  // Second derivatives d^2 pose / dq_a dq_k for active a, k: hess[k].col(a).
  void hessian(const Eigen::VectorXd& q, double s, PointJets& out,
               std::vector<Eigen::Matrix<double, 3, Eigen::Dynamic>>& hess) {
    const int na = num_active();
    out.jac.setZero(3, na);
    out.columns = columns_within(s);
    hess.assign(static_cast<std::size_t>(na), Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, na));
    for (std::size_t c = 0; c < x2_.size(); ++c) {
      x2_[c] = D2(0.0);
    }
    for (int a = 0; a < na; ++a) {
      const auto c = static_cast<std::size_t>(active_[static_cast<std::size_t>(a)]);
      x2_[c] = D2(D1(q[static_cast<Eigen::Index>(c)], 0.0), D1(0.0, 0.0));
    }
    for (int k = 0; k < out.columns; ++k) {
      const auto ck = static_cast<std::size_t>(active_[static_cast<std::size_t>(k)]);
      x2_[ck].d.v = 1.0;
      for (int a = 0; a <= k; ++a) {
        const auto ca = static_cast<std::size_t>(active_[static_cast<std::size_t>(a)]);
        x2_[ca].v.d = 1.0;
        const auto p = robot_fk_flat<D2>(geometry_, x2_, s);
        x2_[ca].v.d = 0.0;
        const Eigen::Vector3d h(p.px.d.d, p.py.d.d, p.theta.d.d);
        hess[static_cast<std::size_t>(k)].col(a) = h;
        hess[static_cast<std::size_t>(a)].col(k) = h;
        if (a == k) {
          out.jac.col(k) << p.px.d.v, p.py.d.v, p.theta.d.v;
        }
      }
      x2_[ck].d.v = 0.0;
    }
  }

 private:
  void load_first_order(const Eigen::VectorXd& q) {
    for (std::size_t c = 0; c < x1_.size(); ++c) {
      x1_[c] = D1(0.0);
    }
    for (int c : active_) {
      x1_[static_cast<std::size_t>(c)] = D1(q[c], 0.0);
    }
  }

  const RobotGeometry& geometry_;
  std::vector<int> active_;
  std::vector<D1> x1_;
  std::vector<D2> x2_;
};

}  // namespace pcsid::detail
