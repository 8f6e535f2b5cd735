#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pcsid/metrics.hpp"
#include "support/oracles.hpp"

using namespace pcsid;

namespace {

Eigen::MatrixXd random_markers(int frames, int markers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(frames, 3 * markers);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace

TEST(Metrics, IdenticalInputsGiveZero) {
  const Eigen::MatrixXd m = random_markers(10, 4, 1);
  const PoseErrors b = body_errors(m, m);
  const PoseErrors e = ee_errors(m, m);
  EXPECT_EQ(b.position, 0.0);
  EXPECT_EQ(b.orientation, 0.0);
  EXPECT_EQ(e.position, 0.0);
  EXPECT_EQ(e.orientation, 0.0);
}

TEST(Metrics, UniformOffsetAndRotation) {
  const Eigen::MatrixXd truth = random_markers(7, 5, 2);
  Eigen::MatrixXd est = truth;
  for (int j = 0; j < 5; ++j) est.col(3 * j).array() += 1e-3;
  const PoseErrors b = body_errors(est, truth);
  EXPECT_NEAR(b.position, 1e-3, 1e-15);
  EXPECT_EQ(b.orientation, 0.0);

  Eigen::MatrixXd rot = truth;
  rot.col(14).array() += std::numbers::pi / 6.0;
  const PoseErrors e = ee_errors(rot, truth);
  EXPECT_EQ(e.position, 0.0);
  EXPECT_NEAR(e.orientation, std::numbers::pi / 6.0, 1e-12);
}

TEST(Metrics, OrientationDifferencesAreWrapped) {
  Eigen::MatrixXd truth = Eigen::MatrixXd::Zero(1, 3);
  Eigen::MatrixXd est = truth;
  truth(0, 2) = 3.1;
  est(0, 2) = -3.1;
  EXPECT_NEAR(body_errors(est, truth).orientation, 2.0 * std::numbers::pi - 6.2, 1e-12);
}

TEST(Metrics, InvariantUnderFramePermutation) {
  const Eigen::MatrixXd a = random_markers(20, 3, 3);
  const Eigen::MatrixXd b = random_markers(20, 3, 4);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(20);
  perm.setIdentity();
  std::mt19937_64 rng(5);
  std::shuffle(perm.indices().data(), perm.indices().data() + 20, rng);
  const PoseErrors x = body_errors(a, b);
  const PoseErrors y = body_errors(perm * a, perm * b);
  EXPECT_NEAR(x.position, y.position, 1e-14);
  EXPECT_NEAR(x.orientation, y.orientation, 1e-14);
}

TEST(Metrics, EndEffectorEqualsBodyErrorOnTipMarker) {
  const Eigen::MatrixXd a = random_markers(15, 6, 6);
  const Eigen::MatrixXd b = random_markers(15, 6, 7);
  const PoseErrors ee = ee_errors(a, b);
  const PoseErrors tip = body_errors(a.rightCols(3), b.rightCols(3));
  EXPECT_DOUBLE_EQ(ee.position, tip.position);
  EXPECT_DOUBLE_EQ(ee.orientation, tip.orientation);
}

TEST(Metrics, NonNegativeAndSeriesConsistent) {
  const Eigen::MatrixXd a = random_markers(12, 4, 8);
  const Eigen::MatrixXd b = random_markers(12, 4, 9);
  const ShapeErrorReport r = shape_error_report(Eigen::VectorXd::LinSpaced(12, 0.0, 0.011), a, b);
  EXPECT_GT(r.e_p_body, 0.0);
  EXPECT_GT(r.e_theta_ee, 0.0);
  EXPECT_NEAR(r.e_p_body, body_errors(a, b).position, 1e-14);
  EXPECT_NEAR(r.e_theta_ee, ee_errors(a, b).orientation, 1e-14);
  EXPECT_GE(r.series.body_position.minCoeff(), 0.0);
  EXPECT_NE(report_to_csv(r).find("e_p_body"), std::string::npos);
  EXPECT_NE(report_to_json(r).find("\"diverged\": false"), std::string::npos);
}

TEST(Metrics, ShapeMismatchThrows) {
  EXPECT_THROW(body_errors(Eigen::MatrixXd::Zero(2, 6), Eigen::MatrixXd::Zero(3, 6)), DimensionMismatchError);
  EXPECT_THROW(body_errors(Eigen::MatrixXd::Zero(2, 5), Eigen::MatrixXd::Zero(2, 5)), DimensionMismatchError);
}

namespace {

PcsModel small_model(double stiffness_scale) {
  const RobotGeometry geom = circular_geometry({0.1}, 0.02);
  InertialParams inertial{{1070.0 * geom.cross_section_area()}, {1070.0 * geom.second_moment()}, 9.81};
  ElasticityParams elastic;
  elastic.stiffness = Eigen::Vector3d(0.0251, 1.2566, 25.1) * stiffness_scale;
  elastic.damping = Eigen::Vector3d(2e-5, 1e-3, 1e-2);
  return make_model(geom, inertial, elastic);
}

}  // namespace

TEST(CompareRollout, GroundTruthModelReproducesDataset) {
  const PcsModel model = small_model(1.0);
  RolloutOptions opts;
  opts.t_final = 1.0;
  const auto s = BackboneAbscissas::equally_spaced(0.1, 6);
  const ActuationSignal sig = ActuationSignal::stepwise_random(0.01, Eigen::Vector3d(2e-3, 0.02, 0.2), 1.0, 3);
  const TrajectoryDataset truth = rollout(model, Eigen::Vector3d(1.0, 0.0, 0.0), Eigen::Vector3d::Zero(), sig, opts, s);
  const ShapeErrorReport r = compare_rollout(model, truth);
  EXPECT_FALSE(r.diverged);
  EXPECT_LE(r.e_p_body, 1e-5);
  EXPECT_LE(r.e_theta_body, 1e-5);
  EXPECT_LE(r.e_p_ee, 1e-5);
  EXPECT_LE(r.e_theta_ee, 1e-5);
}

TEST(CompareRollout, ZeroedStiffnessErrorsGrowWithHorizon) {
  const PcsModel model = small_model(1.0);
  const auto s = BackboneAbscissas::equally_spaced(0.1, 6);
  const ActuationSignal sig = ActuationSignal::sinusoidal(Eigen::Vector3d(2e-3, 0.0, 0.05), 5.0,
                                                          Eigen::Vector3d::Zero(), 0.0);
  PcsModel soft = model;
  soft.stiffness.setZero();
  double prev = 0.0;
  for (double horizon : {0.05, 0.2, 0.5}) {
    RolloutOptions opts;
    opts.t_final = horizon;
    const TrajectoryDataset truth = rollout(model, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), sig, opts, s);
    const ShapeErrorReport r = compare_rollout(soft, truth);
    ASSERT_FALSE(r.diverged);
    EXPECT_GT(r.e_p_ee, prev);
    prev = r.e_p_ee;
  }
}
