#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pcsid/simulate.hpp"
#include "support/oracles.hpp"

using namespace pcsid;

namespace {

PcsModel test_model(const RobotGeometry& g, double grav, double damping_scale, double axial = 250.0) {
  const int n = g.num_coordinates();
  Eigen::VectorXd k(n), d(n);
  for (int i = 0; i < n; ++i) {
    k[i] = (i % 3 == 0) ? 0.025 : (i % 3 == 1 ? 1.26 : axial);
    d[i] = damping_scale * k[i];
  }
  const auto ns = static_cast<std::size_t>(g.num_segments());
  InertialParams in{std::vector<double>(ns, 1070.0 * g.cross_section_area()),
                    std::vector<double>(ns, 1070.0 * g.second_moment()), grav};
  return make_model(g, in, ElasticityParams{k, d});
}

RobotGeometry two_segment() { return circular_geometry({0.07, 0.10}, 0.02); }

Eigen::VectorXd small_q(std::mt19937_64& rng, int n) { return oracle::random_q(rng, n, 8.0, 0.05, -0.02, 0.02); }

// Static equilibrium K q + G(q) = 0 by fixed-point iteration.
Eigen::VectorXd equilibrium(const PcsModel& m) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(m.num_coordinates());
  for (int it = 0; it < 200; ++it) {
    q = -gravity_vector(m, q).cwiseQuotient(m.stiffness);
  }
  return q;
}

// Smooth excitation that vanishes at t = 0, so a rollout started at the
// static equilibrium does not ring its fastest modes.
ActuationSignal smooth_signal() {
  Eigen::VectorXd a1(6), a2(6);
  a1 << 0.01, 0.1, 5.0, -0.01, 0.1, 3.0;
  a2 = Eigen::VectorXd::Zero(6);
  return ActuationSignal::sinusoidal(a1, 20.0, a2, 0.0);
}

double total_energy_at(const PcsModel& m, const TrajectoryDataset& d, int k) {
  return total_energy(m, d.q.row(k).transpose(), d.qd.row(k).transpose());
}

}  // namespace

TEST(Actuation, StepwiseHoldsAndIsBounded) {
  Eigen::VectorXd bound(3);
  bound << 0.1, 0.2, 3.0;
  const ActuationSignal a = ActuationSignal::stepwise_random(0.01, bound, 0.5, 42);
  EXPECT_TRUE(a.piecewise_constant());
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd v0 = a(i * 0.01 + 1e-6), v1 = a(i * 0.01 + 0.0099);
    EXPECT_EQ(v0, v1);
    EXPECT_TRUE((v0.cwiseAbs().array() <= bound.array()).all());
  }
  EXPECT_NE(a(0.005), a(0.015));
  const ActuationSignal b = ActuationSignal::stepwise_random(0.01, bound, 0.5, 42);
  EXPECT_EQ(a(0.237), b(0.237));
  EXPECT_THROW(ActuationSignal::stepwise_random(0.0, bound, 0.5, 1), InvalidArgumentError);
}

TEST(Actuation, SinusoidAndSamples) {
  Eigen::VectorXd a1(2), a2(2);
  a1 << 1.0, 2.0;
  a2 << 0.5, -1.0;
  const ActuationSignal s = ActuationSignal::sinusoidal(a1, 3.0, a2, 5.0);
  const Eigen::VectorXd v = s(0.7);
  EXPECT_NEAR(v[0], std::sin(2.1) + 0.5 * std::cos(3.5), 1e-15);
  EXPECT_NEAR(v[1], 2.0 * std::sin(2.1) - std::cos(3.5), 1e-15);

  Eigen::MatrixXd samples(3, 1);
  samples << 0.0, 1.0, 4.0;
  const ActuationSignal zoh = ActuationSignal::from_samples(0.0, 0.1, samples, SampleInterpolation::ZeroOrderHold);
  const ActuationSignal lin = ActuationSignal::from_samples(0.0, 0.1, samples, SampleInterpolation::Linear);
  EXPECT_DOUBLE_EQ(zoh(0.15)[0], 1.0);
  EXPECT_DOUBLE_EQ(zoh(0.1)[0], 1.0);
  EXPECT_NEAR(lin(0.15)[0], 2.5, 1e-12);
  EXPECT_DOUBLE_EQ(lin(1.0)[0], 4.0);
  EXPECT_FALSE(lin.piecewise_constant());
}

TEST(Rollout, RestIsConstant) {
  const PcsModel m = test_model(two_segment(), 0.0, 1e-3);
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(6);
  RolloutOptions opt;
  opt.t_final = 0.1;
  const TrajectoryDataset d =
      rollout(m, z, z, ActuationSignal::zero(6), opt, BackboneAbscissas::equally_spaced(0.17, 5));
  ASSERT_EQ(d.num_frames(), 101);
  EXPECT_EQ(d.q.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d.qd.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(d.marker(100, 4).py, 0.17);
}

TEST(Rollout, UndampedEnergyConservation) {
  std::mt19937_64 rng(31);
  // Soft axial stiffness keeps omega * h small enough for RK4's amplitude
  // error, which scales with (omega h)^6, to stay below the bound.
  PcsModel m = test_model(two_segment(), 0.0, 0.0, 10.0);
  m.stiffness *= 0.25;
  EXPECT_LT(max_natural_frequency(m, Eigen::VectorXd::Zero(6)), 400.0);
  const Eigen::VectorXd q0 = small_q(rng, 6);
  RolloutOptions opt;
  opt.t_final = 1.0;
  opt.accuracy_factor = 0.0;
  opt.stability_factor = 0.0;
  opt.max_internal_step = 1e-4;
  const TrajectoryDataset d =
      rollout(m, q0, Eigen::VectorXd::Zero(6), ActuationSignal::zero(6), opt, BackboneAbscissas({0.17}));
  const double e0 = total_energy_at(m, d, 0);
  double drift = 0.0;
  for (int k = 0; k < d.num_frames(); ++k) {
    drift = std::max(drift, std::abs(total_energy_at(m, d, k) - e0));
  }
  EXPECT_LE(drift / e0, 1e-6);
}

TEST(Rollout, EnergyBalanceWithDampingAndTorque) {
  const PcsModel m = test_model(two_segment(), 9.81, 1e-3);
  RolloutOptions opt;
  opt.t_final = 0.2;
  opt.dt = 1e-4;
  const TrajectoryDataset d =
      rollout(m, equilibrium(m), Eigen::VectorXd::Zero(6), smooth_signal(), opt, BackboneAbscissas({0.17}));
  const double h = d.dt;
  double worst = 0.0, scale = 0.0;
  for (int k = 2; k + 2 < d.num_frames(); k += 37) {
    const double de = (-total_energy_at(m, d, k + 2) + 8 * total_energy_at(m, d, k + 1) -
                       8 * total_energy_at(m, d, k - 1) + total_energy_at(m, d, k - 2)) /
                      (12 * h);
    const Eigen::VectorXd qd = d.qd.row(k).transpose();
    const double power = qd.dot(d.torques.row(k).transpose() - m.damping.cwiseProduct(qd));
    worst = std::max(worst, std::abs(de - power));
    scale = std::max(scale, std::abs(power));
  }
  EXPECT_LE(worst, 1e-6 * scale);
}

TEST(Rollout, StepHalvingConvergence) {
  const PcsModel m = test_model(two_segment(), 9.81, 1e-3);
  const Eigen::VectorXd q0 = equilibrium(m);
  RolloutOptions opt;
  opt.t_final = 0.2;
  opt.accuracy_factor = 0.0;
  opt.stability_factor = 0.0;
  const BackboneAbscissas s({0.17});
  auto final_q = [&](double h) {
    opt.max_internal_step = h;
    const TrajectoryDataset d = rollout(m, q0, Eigen::VectorXd::Zero(6), smooth_signal(), opt, s);
    return Eigen::VectorXd(d.q.row(d.num_frames() - 1).transpose());
  };
  const Eigen::VectorXd a = final_q(1e-4), b = final_q(5e-5);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-8);
  // Fourth order: successive differences shrink by about 16 while the
  // truncation error dominates rounding.
  const Eigen::VectorXd c = final_q(5e-4), e = final_q(2.5e-4), f = final_q(1.25e-4);
  EXPECT_NEAR((c - e).norm() / (e - f).norm(), 16.0, 2.0);
}

TEST(Rollout, RecordedAccelerationMatchesFiniteDifferences) {
  const PcsModel m = test_model(two_segment(), 9.81, 1e-3);
  RolloutOptions opt;
  opt.t_final = 0.1;
  opt.dt = 1e-4;
  const TrajectoryDataset d =
      rollout(m, equilibrium(m), Eigen::VectorXd::Zero(6), smooth_signal(), opt, BackboneAbscissas({0.17}));
  // Richardson-extrapolated central differences of the recorded velocity.
  for (int k = 10; k < 990; k += 97) {
    const Eigen::VectorXd d1 = (d.qd.row(k + 1) - d.qd.row(k - 1)).transpose() / (2 * d.dt);
    const Eigen::VectorXd d2 = (d.qd.row(k + 2) - d.qd.row(k - 2)).transpose() / (4 * d.dt);
    const Eigen::VectorXd fd = (4.0 * d1 - d2) / 3.0;
    EXPECT_LE(oracle::rel_err(d.qdd.row(k).transpose(), fd), 1e-4);
  }
}

TEST(Rollout, DeterministicAndDataConsistent) {
  const PcsModel m = test_model(two_segment(), 9.81, 1e-3);
  Eigen::VectorXd bound = Eigen::VectorXd::Constant(6, 0.01);
  const BackboneAbscissas s = BackboneAbscissas::equally_spaced(0.17, 21);
  RolloutOptions opt;
  opt.t_final = 0.05;
  auto run = [&] {
    return rollout(m, Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(6),
                   ActuationSignal::stepwise_random(0.01, bound, 0.05, 9), opt, s);
  };
  const TrajectoryDataset a = run(), b = run();
  EXPECT_EQ(a.markers, b.markers);
  EXPECT_EQ(a.torques, b.torques);
  EXPECT_EQ(a.q, b.q);
  a.validate();
  // Torques held over 10 frames.
  EXPECT_EQ(a.torques.row(0), a.torques.row(9));
  EXPECT_NE(a.torques.row(9), a.torques.row(10));
  EXPECT_EQ(a.actuation, ActuationKind::StepwiseRandom);
  // Markers equal FK of the recorded configuration.
  const Eigen::VectorXd mk = sample_markers(m.geometry, a.q.row(30).transpose(), s);
  EXPECT_LE((mk - a.markers.row(30).transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Rollout, DivergenceIsReported) {
  PcsModel m = test_model(circular_geometry({0.1}, 0.02), 0.0, 0.0);
  m.stiffness << 0.025, 1.26, -250.0;
  Eigen::VectorXd q0 = Eigen::VectorXd::Zero(3);
  q0[2] = 1e-3;
  RolloutOptions opt;
  opt.t_final = 1.0;
  opt.accuracy_factor = 0.0;
  opt.stability_factor = 0.0;
  opt.divergence_bound = 10.0;
  try {
    rollout(m, q0, Eigen::VectorXd::Zero(3), ActuationSignal::zero(3), opt, BackboneAbscissas({0.1}));
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.time(), 0.0);
    EXPECT_LT(e.time(), 1.0);
  }
}

TEST(Rollout, InvalidInputs) {
  const PcsModel m = test_model(two_segment(), 9.81, 1e-3);
  const Eigen::VectorXd z = Eigen::VectorXd::Zero(6);
  RolloutOptions opt;
  EXPECT_THROW(rollout(m, Eigen::VectorXd::Zero(3), z, ActuationSignal::zero(6), opt, BackboneAbscissas({0.1})),
               DimensionMismatchError);
  const ActuationSignal odd = ActuationSignal::stepwise_random(0.0015, Eigen::VectorXd::Ones(6), 0.1, 1);
  EXPECT_THROW(rollout(m, z, z, odd, opt, BackboneAbscissas({0.1})), InvalidArgumentError);
}

TEST(Markers, StraightAndTwoMarkers) {
  const RobotGeometry g = two_segment();
  const BackboneAbscissas s = BackboneAbscissas::equally_spaced(0.17, 6);
  const Eigen::VectorXd mk = sample_markers(g, Eigen::VectorXd::Zero(6), s);
  for (int j = 0; j < 6; ++j) {
    EXPECT_EQ(mk[3 * j], 0.0);
    EXPECT_NEAR(mk[3 * j + 1], s[j], 1e-15);
    EXPECT_EQ(mk[3 * j + 2], 0.0);
  }
  Eigen::VectorXd q(6);
  q << 3, 0.01, 0.02, -4, 0.02, 0.01;
  const Eigen::VectorXd tip = sample_markers(g, q, BackboneAbscissas({0.0, 0.17}));
  EXPECT_EQ(tip.head<3>(), Eigen::Vector3d::Zero());
  const Pose2 p = robot_fk(g, q, 0.17);
  EXPECT_EQ(tip[3], p.px);
  EXPECT_EQ(tip[5], p.theta);
}

TEST(Markers, InverseKinematicsRoundTrip) {
  const RobotGeometry g = two_segment();
  Eigen::VectorXd q(6);
  q << 3, 0.01, 0.02, -4, 0.02, 0.01;
  const BackboneAbscissas s({0.035, 0.07, 0.12, 0.17});
  const Eigen::VectorXd mk = sample_markers(g, q, s);
  std::vector<Pose2> poses;
  for (int j = 0; j < 4; ++j) poses.push_back({mk[3 * j], mk[3 * j + 1], mk[3 * j + 2]});
  const Eigen::VectorXd r = robot_ik(poses, s).to_vector();
  for (int i = 0; i < 4; ++i) {
    const int seg = i < 2 ? 0 : 1;
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(r[3 * i + c], q[3 * seg + c], 1e-10);
  }
}

TEST(Noise, StatisticsAndDeterminism) {
  TrajectoryDataset d;
  d.dt = 1e-3;
  d.s = BackboneAbscissas::equally_spaced(0.1, 21);
  d.times = Eigen::VectorXd::LinSpaced(500, 0.0, 0.499);
  d.markers = Eigen::MatrixXd::Zero(500, 63);
  EXPECT_EQ(add_measurement_noise(d, 0.0, 0.0, 1).markers, d.markers);
  const double sp = 5e-4, st = std::numbers::pi / 180.0;
  const TrajectoryDataset a = add_measurement_noise(d, sp, st, 77);
  const TrajectoryDataset b = add_measurement_noise(d, sp, st, 77);
  EXPECT_EQ(a.markers, b.markers);
  double s2p = 0.0, s2t = 0.0;
  long np = 0, nt = 0;
  for (Eigen::Index k = 0; k < a.markers.rows(); ++k) {
    for (Eigen::Index c = 0; c < a.markers.cols(); ++c) {
      const double v = a.markers(k, c);
      if (c % 3 == 2) {
        s2t += v * v;
        ++nt;
      } else {
        s2p += v * v;
        ++np;
      }
    }
  }
  EXPECT_NEAR(std::sqrt(s2p / np), sp, 0.05 * sp);
  EXPECT_NEAR(std::sqrt(s2t / nt), st, 0.05 * st);
  EXPECT_THROW(add_measurement_noise(d, -1.0, 0.0, 1), InvalidArgumentError);
}

TEST(Unwrap, RemovesFullTurnJumps) {
  Eigen::MatrixXd m(3, 3);
  m << 0, 0, 3.1, 0, 0, -3.1, 0, 0, -3.0;
  unwrap_orientations(m);
  EXPECT_NEAR(m(1, 2), 2 * std::numbers::pi - 3.1, 1e-12);
  EXPECT_NEAR(m(2, 2), 2 * std::numbers::pi - 3.0, 1e-12);
}

TEST(Pac, StraightAndConstantCurvature) {
  const BackboneAbscissas s = BackboneAbscissas::equally_spaced(0.15, 21);
  const std::vector<Pose2> straight = pac_poses(0.0, 0.0, 0.15, s);
  for (int j = 0; j < 21; ++j) {
    EXPECT_NEAR(straight[static_cast<std::size_t>(j)].px, 0.0, 1e-15);
    EXPECT_NEAR(straight[static_cast<std::size_t>(j)].py, s[j], 1e-14);
  }
  const std::vector<Pose2> arc = pac_poses(12.0, 0.0, 0.15, s);
  for (int j = 0; j < 21; ++j) {
    const Pose2 ref = segment_fk(Pose2{}, SegmentStrains{12.0, 0, 0}, s[j]);
    EXPECT_NEAR(arc[static_cast<std::size_t>(j)].px, ref.px, 1e-8);
    EXPECT_NEAR(arc[static_cast<std::size_t>(j)].py, ref.py, 1e-8);
  }
  const std::vector<Pose2> aff = pac_poses(5.0, -80.0, 0.15, s);
  EXPECT_DOUBLE_EQ(aff.back().theta, 5.0 * 0.15 + 0.5 * -80.0 * 0.15 * 0.15);
}

TEST(Pac, SampleShapeAndDeterminism) {
  PacParams p;
  const PacDataset a = pac_sample(p, 50, 21, 3);
  const PacDataset b = pac_sample(p, 50, 21, 3);
  EXPECT_EQ(a.markers.rows(), 50);
  EXPECT_EQ(a.markers.cols(), 63);
  EXPECT_EQ(a.markers, b.markers);
  EXPECT_TRUE((a.kappa0.array() >= p.kappa0_min).all() && (a.kappa0.array() <= p.kappa0_max).all());
  const std::vector<Pose2> ref = pac_poses(a.kappa0[7], a.kappa1[7], p.length, a.s);
  EXPECT_EQ(a.markers(7, 62), ref.back().theta);
  p.length = 0.0;
  EXPECT_THROW(pac_sample(p, 5, 21, 1), InvalidArgumentError);
}
