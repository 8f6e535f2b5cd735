#include <gtest/gtest.h>

#include <random>

#include "pcsid/basis.hpp"
#include "pcsid/dual.hpp"
#include "pcsid/quadrature.hpp"
#include "support/oracles.hpp"

using namespace pcsid;

namespace {

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;

PcsModel truth_model(const RobotGeometry& g) {
  const int n = g.num_coordinates();
  InertialParams inertial;
  for (int i = 0; i < g.num_segments(); ++i) {
    inertial.rho_a.push_back(1070.0 * g.cross_section_area() * (1.0 + 0.1 * i));
    inertial.rho_i.push_back(1070.0 * g.second_moment() * (1.0 - 0.05 * i));
  }
  Eigen::VectorXd k(n), d(n);
  for (int i = 0; i < n; ++i) {
    k[i] = (i % 3 == 0) ? 0.025 : (i % 3 == 1 ? 1.26 : 250.0);
    d[i] = 1e-3 * k[i] * (1.0 + i);
  }
  return make_model(g, inertial, ElasticityParams{k, d});
}

Eigen::VectorXd masked_random(std::mt19937_64& rng, const StrainMask& mask, double kb, double kl) {
  Eigen::VectorXd v = oracle::random_q(rng, mask.size(), kb, kl, -kl, kl);
  for (int i = 0; i < mask.size(); ++i) {
    if (!mask.is_active(i)) v[i] = 0.0;
  }
  return v;
}

// Euler-Lagrange image of every per-segment basis function by nested dual
// numbers directly on robot_fk_flat: t (trajectory time), b (velocity
// perturbation), e (velocity direction that turns p into pdot).
Eigen::MatrixXd el_oracle(const RobotGeometry& g, const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                          const Eigen::VectorXd& qdd) {
  const int n = g.num_coordinates();
  const int ns = g.num_segments();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(3 * ns, n);
  const auto pts = backbone_quadrature(g);
  for (int a = 0; a < n; ++a) {
    // d/dt df/dqd_a.
    std::vector<D3> x(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
      const D2 value(D1(q[c], qd[c]), D1(0.0, c == a ? 1.0 : 0.0));
      const D2 rate(D1(qd[c], qdd[c]), D1(0.0, 0.0));
      x[static_cast<std::size_t>(c)] = D3(value, rate);
    }
    // df/dq_a.
    std::vector<D2> y(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
      y[static_cast<std::size_t>(c)] = D2(D1(q[c], qd[c]), D1(c == a ? 1.0 : 0.0, 0.0));
    }
    for (const QuadraturePoint& p : pts) {
      const auto P = robot_fk_flat<D3>(g, x, p.s);
      auto eps = [](const D3& z) { return Dual<Dual<double>>(D1(z.v.v.d, z.v.d.d), D1(z.d.v.d, z.d.d.d)); };
      const auto vx = eps(P.px), vy = eps(P.py), vt = eps(P.theta);
      const double ta_dt = (0.5 * (vx * vx + vy * vy)).d.d;
      const double tr_dt = (0.5 * vt * vt).d.d;

      const auto Q = robot_fk_flat<D2>(g, y, p.s);
      const double ta_dq = Q.px.v.d * Q.px.d.d + Q.py.v.d * Q.py.d.d;
      const double tr_dq = Q.theta.v.d * Q.theta.d.d;
      const double g_dq = -Q.py.d.v;

      out(3 * p.segment, a) += p.weight * (ta_dt - ta_dq);
      out(3 * p.segment + 1, a) += p.weight * (tr_dt - tr_dq);
      out(3 * p.segment + 2, a) += p.weight * (0.0 - g_dq);
    }
  }
  return out;
}

}  // namespace

TEST(BuildLibrary, CountingRule) {
  const RobotGeometry g = circular_geometry({0.1}, 0.02);
  const BasisLibrary lib = build_library(g, StrainMask::full(3));
  EXPECT_EQ(lib.num_functions(), 6);
  EXPECT_EQ(lib.size(), 9);
  const RobotGeometry g3 = circular_geometry({0.05, 0.1, 0.06}, 0.02);
  const BasisLibrary lib3 = build_library(g3, StrainMask({true, true, false, true, false, true, true, true, true}));
  EXPECT_EQ(lib3.num_functions(), 9 + 7);
  EXPECT_EQ(lib3.size(), lib3.num_functions() + 7);
  EXPECT_THROW(build_library(g, StrainMask({false, false, false})), InvalidMaskError);
}

TEST(BuildLibrary, ElasticBasisValue) {
  const RobotGeometry g = circular_geometry({0.1}, 0.02);
  const BasisLibrary lib = build_library(g, StrainMask::full(3));
  const int j = lib.find(BasisKind::Elastic, 2);
  ASSERT_GE(j, 0);
  const Eigen::VectorXd f = eval_lagrangian_basis(lib, Eigen::Vector3d(0.0, 0.0, 2.0), Eigen::Vector3d::Zero());
  EXPECT_DOUBLE_EQ(f[j], -2.0);
  EXPECT_EQ(lib.descriptors()[static_cast<std::size_t>(j)].unit(), std::string("N"));
  EXPECT_EQ(lib.coefficient_label(lib.size() - 1), "damping[2]");
}

TEST(BuildLibrary, LagrangianMatchesSimulator) {
  std::mt19937_64 rng(1);
  for (const RobotGeometry& g :
       {circular_geometry({0.1}, 0.02), circular_geometry({0.07, 0.1}, 0.02), circular_geometry({0.05, 0.1, 0.06}, 0.02)}) {
    const PcsModel m = truth_model(g);
    const BasisLibrary lib = build_library(g, m.mask);
    const Eigen::VectorXd pi = model_coefficients(lib, m);
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd q = oracle::random_q(rng, g.num_coordinates());
      const Eigen::VectorXd qd = oracle::random_vec(rng, g.num_coordinates(), 2.0);
      const double ref = kinetic_energy(m, q, qd) - gravitational_energy(m, q) - elastic_energy(m, q);
      EXPECT_NEAR(eval_lagrangian(lib, pi, q, qd), ref, 1e-10 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST(EomBasis, ContractionMatchesSimulatorEom) {
  std::mt19937_64 rng(2);
  for (const RobotGeometry& g :
       {circular_geometry({0.1}, 0.02), circular_geometry({0.07, 0.1}, 0.02), circular_geometry({0.05, 0.1, 0.06}, 0.02)}) {
    const PcsModel m = truth_model(g);
    const BasisLibrary lib = build_library(g, m.mask);
    const Eigen::VectorXd pi = model_coefficients(lib, m);
    for (int t = 0; t < 100; ++t) {
      const Eigen::VectorXd q = oracle::random_q(rng, g.num_coordinates());
      const Eigen::VectorXd qd = oracle::random_vec(rng, g.num_coordinates(), 3.0);
      const Eigen::VectorXd qdd = oracle::random_vec(rng, g.num_coordinates(), 30.0);
      const DynamicsTerms dt = dynamics_terms(m, q, qd);
      const Eigen::VectorXd ref = dt.mass * qdd + dt.coriolis + dt.gravity + m.stiffness.cwiseProduct(q) +
                                  m.damping.cwiseProduct(qd);
      const Eigen::VectorXd got = eval_eom_basis(lib, q, qd, qdd).transpose() * pi;
      EXPECT_LE(oracle::rel_err(got, ref), 1e-8);
    }
  }
}

TEST(EomBasis, MatchesNestedDualOracle) {
  std::mt19937_64 rng(3);
  const RobotGeometry g = circular_geometry({0.05, 0.1, 0.06}, 0.02);
  const BasisLibrary lib = build_library(g, StrainMask::full(9));
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd q = oracle::random_q(rng, 9);
    const Eigen::VectorXd qd = oracle::random_vec(rng, 9, 3.0);
    const Eigen::VectorXd qdd = oracle::random_vec(rng, 9, 30.0);
    const Eigen::MatrixXd psi = eval_eom_basis(lib, q, qd, qdd);
    const Eigen::MatrixXd ref = el_oracle(g, q, qd, qdd);
    EXPECT_LE(oracle::rel_err(psi.topRows(9), ref), 1e-11);
  }
}

TEST(EomBasis, VelocityQuadraticRowsVanishAtRest) {
  std::mt19937_64 rng(4);
  const RobotGeometry g = circular_geometry({0.07, 0.1}, 0.02);
  const BasisLibrary lib = build_library(g, StrainMask::full(6));
  const Eigen::VectorXd q = oracle::random_q(rng, 6);
  const Eigen::MatrixXd psi = eval_eom_basis(lib, q, Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(6));
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(psi.row(lib.find(BasisKind::KineticTranslational, i)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(psi.row(lib.find(BasisKind::KineticRotational, i)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT(psi.row(lib.find(BasisKind::Gravitational, i)).cwiseAbs().maxCoeff(), 0.0);
  }
  for (int e = 0; e < 6; ++e) {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(6);
    unit[e] = q[e];
    EXPECT_EQ((psi.row(lib.find(BasisKind::Elastic, e)).transpose() - unit).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(EomBasis, LinearInAcceleration) {
  std::mt19937_64 rng(5);
  const RobotGeometry g = circular_geometry({0.07, 0.1}, 0.02);
  const BasisLibrary lib = build_library(g, StrainMask::full(6));
  const Eigen::VectorXd q = oracle::random_q(rng, 6);
  const Eigen::VectorXd qd = oracle::random_vec(rng, 6, 2.0);
  const Eigen::VectorXd qdd = oracle::random_vec(rng, 6, 20.0);
  const Eigen::MatrixXd base = eval_eom_basis(lib, q, qd, Eigen::VectorXd::Zero(6));
  const Eigen::MatrixXd one = eval_eom_basis(lib, q, qd, qdd) - base;
  const Eigen::MatrixXd two = eval_eom_basis(lib, q, qd, 2.0 * qdd) - base;
  EXPECT_LE((two - 2.0 * one).cwiseAbs().maxCoeff(), 1e-14 * std::max(1.0, one.cwiseAbs().maxCoeff()) * 10);
}

TEST(ReduceLibrary, RemovingShearDropsOnlyItsElasticTerm) {
  const RobotGeometry g = circular_geometry({0.1}, 0.02);
  const BasisLibrary lib = build_library(g, StrainMask::full(3));
  const BasisLibrary red = reduce_library(lib, 1);
  EXPECT_FALSE(red.mask().is_active(1));
  EXPECT_EQ(red.find(BasisKind::Elastic, 1), -1);
  EXPECT_EQ(red.find_damping(1), -1);
  EXPECT_GE(red.find(BasisKind::KineticTranslational, 0), 0);
  EXPECT_GE(red.find(BasisKind::KineticRotational, 0), 0);
  EXPECT_GE(red.find(BasisKind::Gravitational, 0), 0);
  EXPECT_EQ(red.size(), red.num_functions() + red.mask().num_active());
  EXPECT_EQ(red.size(), 5 + 2);
}

TEST(ReduceLibrary, LastCoordinateCannotBeRemoved) {
  const RobotGeometry g = circular_geometry({0.1}, 0.02);
  BasisLibrary lib = build_library(g, StrainMask::full(3));
  lib = reduce_library(lib, 0);
  lib = reduce_library(lib, 2);
  EXPECT_THROW(reduce_library(lib, 1), InvalidMaskError);
}

TEST(ReduceLibrary, FullyRemovedProximalSegmentDropsItsEnergyTerms) {
  const RobotGeometry g = circular_geometry({0.07, 0.1}, 0.02);
  BasisLibrary lib = build_library(g, StrainMask::full(6));
  for (int e : {0, 1, 2}) lib = reduce_library(lib, e);
  EXPECT_EQ(lib.find(BasisKind::KineticTranslational, 0), -1);
  EXPECT_EQ(lib.find(BasisKind::KineticRotational, 0), -1);
  EXPECT_EQ(lib.find(BasisKind::Gravitational, 0), -1);
  EXPECT_GE(lib.find(BasisKind::KineticTranslational, 1), 0);
  EXPECT_EQ(lib.size(), 3 + 3 + 3);
}

TEST(ReduceLibrary, MaskedColumnsZeroAndRowsMatchFullLibrary) {
  std::mt19937_64 rng(6);
  const RobotGeometry g = circular_geometry({0.07, 0.1}, 0.02);
  const BasisLibrary full = build_library(g, StrainMask::full(6));
  BasisLibrary red = reduce_library(full, 2);
  red = reduce_library(red, 4);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd q = masked_random(rng, red.mask(), 10.0, 0.1);
    const Eigen::VectorXd qd = masked_random(rng, red.mask(), 2.0, 0.2);
    const Eigen::VectorXd qdd = masked_random(rng, red.mask(), 20.0, 2.0);
    // Unmasked junk in inactive entries must be ignored.
    Eigen::VectorXd qj = q;
    qj[2] = 0.3;
    qj[4] = -0.2;
    const Eigen::MatrixXd pr = eval_eom_basis(red, qj, qd, qdd);
    const Eigen::MatrixXd pf = eval_eom_basis(full, q, qd, qdd);
    EXPECT_EQ(pr.col(2).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(pr.col(4).cwiseAbs().maxCoeff(), 0.0);
    for (int j = 0; j < red.num_functions(); ++j) {
      const BasisDescriptor& d = red.descriptors()[static_cast<std::size_t>(j)];
      const int jf = full.find(d.kind, d.index);
      for (int c : red.mask().active_indices()) {
        EXPECT_NEAR(pr(j, c), pf(jf, c), 1e-14 * std::max(1.0, std::abs(pf(jf, c))));
      }
    }
  }
}

TEST(DerivativeSelfcheck, FullAndReducedLibraries) {
  const RobotGeometry g1 = circular_geometry({0.1}, 0.02);
  EXPECT_LE(derivative_selfcheck(build_library(g1, StrainMask::full(3)), 5), 1e-5);
  const RobotGeometry g3 = circular_geometry({0.05, 0.1, 0.06}, 0.02);
  BasisLibrary lib = build_library(g3, StrainMask::full(9));
  EXPECT_LE(derivative_selfcheck(lib, 3), 1e-5);
  lib = reduce_library(lib, 1);
  lib = reduce_library(lib, 5);
  EXPECT_LE(derivative_selfcheck(lib, 3), 1e-5);

  std::vector<BasisDescriptor> elastic;
  for (int e = 0; e < 3; ++e) elastic.push_back({BasisKind::Elastic, e});
  EXPECT_LE(derivative_selfcheck(BasisLibrary(g1, StrainMask::full(3), elastic), 5), 1e-10);
}

TEST(Coefficients, RoundTripThroughModel) {
  const RobotGeometry g = circular_geometry({0.07, 0.1}, 0.02);
  const PcsModel m = truth_model(g);
  const BasisLibrary lib = build_library(g, m.mask);
  const Eigen::VectorXd pi = model_coefficients(lib, m);
  const PcsModel back = model_from_coefficients(lib, pi);
  EXPECT_EQ(back.rho_a, m.rho_a);
  EXPECT_EQ(back.rho_i, m.rho_i);
  EXPECT_EQ(back.gravity_weight, m.gravity_weight);
  EXPECT_EQ(back.stiffness, m.stiffness);
  EXPECT_EQ(back.damping, m.damping);
  EXPECT_EQ(model_coefficients(lib, back), pi);
}
