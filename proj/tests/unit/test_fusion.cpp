#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pcsid/fusion.hpp"
#include "pcsid/simulate.hpp"
#include "support/oracles.hpp"

using namespace pcsid;

namespace {

// Static random configurations of a PCS robot sampled at the abscissas.
MarkerData pcs_markers(const std::vector<double>& lengths, int markers, int frames, std::uint64_t seed) {
  const RobotGeometry geom(lengths, 1.0, 1.0);
  MarkerData data;
  data.s = BackboneAbscissas::equally_spaced(geom.total_length(), markers);
  data.poses.resize(frames, 3 * markers);
  std::mt19937_64 rng(seed);
  for (int k = 0; k < frames; ++k) {
    const Eigen::VectorXd q = oracle::random_q(rng, geom.num_coordinates(), 10.0, 0.05, -0.05, 0.05);
    data.poses.row(k) = sample_markers(geom, q, data.s).transpose();
  }
  return data;
}

std::vector<double> boundaries(const FusionResult& r) {
  return {r.abscissas.begin() + 1, r.abscissas.end() - 1};
}

}  // namespace

TEST(StrainBounds, TrivialCases) {
  const StrainBounds zero = strain_bounds(Eigen::MatrixXd::Zero(1, 6));
  EXPECT_EQ(zero.q_min, Eigen::Vector3d::Zero());
  EXPECT_EQ(zero.q_max, Eigen::Vector3d::Zero());
  EXPECT_EQ(zero.inverse_range(), Eigen::Vector3d::Zero());

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2, 3);
  q(0, 0) = -1.0;
  q(1, 0) = 2.0;
  const StrainBounds b = strain_bounds(q);
  EXPECT_DOUBLE_EQ(b.q_min[0], -1.0);
  EXPECT_DOUBLE_EQ(b.q_max[0], 2.0);
}

TEST(StrainBounds, MatchesExhaustiveScan) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd q(37, 12);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = n(rng);
  const StrainBounds b = strain_bounds(q);
  for (int c = 0; c < 3; ++c) {
    double lo = 1e300, hi = -1e300;
    for (Eigen::Index k = 0; k < q.rows(); ++k) {
      for (Eigen::Index j = c; j < q.cols(); j += 3) {
        lo = std::min(lo, q(k, j));
        hi = std::max(hi, q(k, j));
      }
    }
    EXPECT_EQ(b.q_min[c], lo);
    EXPECT_EQ(b.q_max[c], hi);
  }
}

TEST(StrainDistance, TrivialAndHandCases) {
  Eigen::MatrixXd same(4, 6);
  same.leftCols(3) << 1, 2, 3, 4, 5, 6, 7, 8, 9, 1, 1, 1;
  same.rightCols(3) = same.leftCols(3);
  EXPECT_DOUBLE_EQ(strain_distance(same, 0, strain_bounds(same)), 0.0);

  StrainBounds b;
  b.q_min << -1.0, -0.1, -0.2;
  b.q_max << 3.0, 0.1, 0.2;
  Eigen::MatrixXd unit(1, 6);
  unit << 0, 0, 0, 4.0, 0, 0;
  EXPECT_DOUBLE_EQ(strain_distance(unit, 0, b), 1.0);

  // Frame 1: (2, 0.1, 0)/(4, 0.2, 0.4) = (0.5, 0.5, 0) -> sqrt(0.5).
  // Frame 2: (0, 0, -0.12)/(4, 0.2, 0.4) = (0, 0, -0.3) -> 0.3.
  Eigen::MatrixXd two(2, 6);
  two << 1.0, 0.0, 0.1, 3.0, 0.1, 0.1,
         0.5, 0.02, 0.05, 0.5, 0.02, -0.07;
  EXPECT_NEAR(strain_distance(two, 0, b), 0.5 * (std::sqrt(0.5) + 0.3), 1e-15);
}

TEST(StrainDistance, ZeroRangeComponentContributesNothing) {
  Eigen::MatrixXd q(3, 6);
  q << 0, 0.5, 0, 1, 0.5, 0,
       1, 0.5, 0, 0, 0.5, 0,
       0, 0.5, 0, 0, 0.5, 0;
  const StrainBounds b = strain_bounds(q);
  EXPECT_EQ(b.range()[1], 0.0);
  EXPECT_NEAR(strain_distance(q, 0, b), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(strain_distance(q, 1, b), OutOfRangeError);
}

TEST(StrainDistance, InvariantUnderComponentwiseScaling) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd q(50, 15);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = u(rng);
  Eigen::MatrixXd scaled = q;
  const double scale[3] = {37.0, 0.013, 2.5};
  for (Eigen::Index j = 0; j < q.cols(); ++j) scaled.col(j) *= scale[j % 3];
  const Eigen::VectorXd d = strain_distances(q, strain_bounds(q));
  const Eigen::VectorXd ds = strain_distances(scaled, strain_bounds(scaled));
  EXPECT_LE((d - ds).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FuseOnce, AllPairsBelowThresholdGiveOneSegment) {
  const auto data = std::make_shared<const MarkerData>(pcs_markers({0.1}, 11, 20, 1));
  const FusionState st = initial_fusion_state(data);
  EXPECT_EQ(st.num_segments(), 10);
  const FusionState next = fuse_once(st, strain_bounds(st.q), 0.2);
  ASSERT_EQ(next.num_segments(), 1);
  EXPECT_NEAR(next.segment_lengths()[0], 0.1, 1e-12);
  EXPECT_EQ(next.iteration, 2);
}

TEST(FuseOnce, NoPairBelowThresholdIsFixedPoint) {
  const auto data = std::make_shared<const MarkerData>(pcs_markers({0.02, 0.02, 0.02}, 4, 30, 2));
  const FusionState st = initial_fusion_state(data);
  Eigen::VectorXd d;
  const FusionState next = fuse_once(st, strain_bounds(st.q), 1e-6, &d);
  EXPECT_EQ(d.size(), 2);
  EXPECT_GT(d.minCoeff(), 1e-6);
  EXPECT_EQ(next.kept, st.kept);
  EXPECT_EQ(next.s, st.s);
  EXPECT_EQ(next.q, st.q);
}

TEST(FuseOnce, ChainMergesRunsOfSimilarPairs) {
  // Boundaries at 0.03 and 0.05 on a 1 cm grid: runs {0..2}, {3..4}, {5..7}.
  const auto data = std::make_shared<const MarkerData>(pcs_markers({0.03, 0.02, 0.03}, 9, 40, 3));
  const FusionState st = initial_fusion_state(data);
  const FusionState next = fuse_once(st, strain_bounds(st.q), 1e-3);
  ASSERT_EQ(next.num_segments(), 3);
  EXPECT_NEAR(next.s[1], 0.03, 1e-12);
  EXPECT_NEAR(next.s[2], 0.05, 1e-12);
  EXPECT_EQ(next.kept.front(), 0);
  EXPECT_EQ(next.kept.back(), 8);
}

TEST(FuseOnce, MarkersWithoutBaseUseImpliedIdentity) {
  const RobotGeometry geom({0.04, 0.04}, 1.0, 1.0);
  MarkerData data;
  data.s = BackboneAbscissas({0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08});
  data.poses.resize(25, 24);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 25; ++k) {
    data.poses.row(k) = sample_markers(geom, oracle::random_q(rng, 6, 10.0, 0.05, -0.05, 0.05), data.s).transpose();
  }
  FusionConfig cfg;
  cfg.h = 1e-3;
  const FusionResult r = kinematic_fusion(data, cfg);
  ASSERT_EQ(r.num_segments(), 2);
  EXPECT_NEAR(r.segment_lengths[0], 0.04, 1e-12);
  EXPECT_NEAR(r.abscissas.front(), 0.0, 0.0);
}

TEST(KinematicFusion, RecoversMarkerAlignedBoundariesOverThresholdInterval) {
  const MarkerData data = pcs_markers({0.05, 0.10, 0.06}, 22, 60, 4);
  for (double h : {1e-4, 1e-3, 0.01, 0.05, 0.1}) {
    FusionConfig cfg;
    cfg.h = h;
    const FusionResult r = kinematic_fusion(data, cfg);
    ASSERT_EQ(r.num_segments(), 3) << "h = " << h;
    EXPECT_NEAR(boundaries(r)[0], 0.05, 1e-12);
    EXPECT_NEAR(boundaries(r)[1], 0.15, 1e-12);
    EXPECT_NEAR(r.segment_lengths[0] + r.segment_lengths[1] + r.segment_lengths[2], 0.21, 1e-9);
    const PoseErrors e = body_errors(fused_reprojection(data, r), data.poses);
    EXPECT_LE(e.position, 1e-10);
    EXPECT_LE(e.orientation, 1e-10);
  }
}

TEST(KinematicFusion, SegmentCountNonIncreasingAndTerminates) {
  const MarkerData data = pcs_markers({0.05, 0.10, 0.06}, 22, 60, 6);
  for (double h : {1e-3, 0.1, 0.3, 0.6, 5.0}) {
    FusionConfig cfg;
    cfg.h = h;
    const FusionResult r = kinematic_fusion(data, cfg);
    EXPECT_LE(r.iterations, data.num_markers() - 2);
    std::size_t prev = 1000;
    for (const DistanceProfile& p : r.profiles) {
      EXPECT_LE(p.boundaries.size(), prev);
      prev = p.boundaries.size();
      EXPECT_EQ(static_cast<Eigen::Index>(p.boundaries.size()), p.distances.size());
    }
    double total = 0.0;
    for (double l : r.segment_lengths) total += l;
    EXPECT_NEAR(total, 0.21, 1e-9);
  }
}

TEST(KinematicFusion, ComponentwiseScaledStrainsSelectSameBoundaries) {
  // Same shape family with bending and linear strain magnitudes rescaled.
  const RobotGeometry geom({0.03, 0.05, 0.02}, 1.0, 1.0);
  auto make = [&](double kscale, double lscale) {
    MarkerData data;
    data.s = BackboneAbscissas::equally_spaced(0.1, 11);
    data.poses.resize(40, 33);
    std::mt19937_64 rng(21);
    for (int k = 0; k < 40; ++k) {
      Eigen::VectorXd q = oracle::random_q(rng, 9, 1.0, 1.0, -1.0, 1.0);
      for (int i = 0; i < 9; ++i) q[i] *= (i % 3 == 0) ? kscale : lscale;
      data.poses.row(k) = sample_markers(geom, q, data.s).transpose();
    }
    return data;
  };
  FusionConfig cfg;
  cfg.h = 0.05;
  const FusionResult a = kinematic_fusion(make(10.0, 0.05), cfg);
  const FusionResult b = kinematic_fusion(make(2.0, 0.005), cfg);
  EXPECT_EQ(a.kept_markers, b.kept_markers);
  EXPECT_EQ(a.num_segments(), 3);
}

TEST(ParetoSweep, ExtremeThresholdsAndMonotoneFront) {
  const RobotGeometry geom({0.15}, 1.0, 1.0);
  const PacDataset pac = pac_sample(PacParams{}, 60, 21, 7);
  MarkerData data{pac.s, pac.markers};
  const ParetoSweep sweep = pareto_sweep(data, {1e-9, 1e6});
  EXPECT_EQ(sweep.points[0].num_segments, 20);
  EXPECT_EQ(sweep.points[1].num_segments, 1);
  // With one segment per marker pair the fit reproduces every marker.
  EXPECT_LE(sweep.points[0].e_p_body, 1e-10);
  EXPECT_GT(sweep.points[1].e_p_body, 1e-4);

  const ParetoSweep full = pareto_sweep(data, log_thresholds(1e-3, 2.0, 25));
  ASSERT_GE(full.front.size(), 2u);
  for (std::size_t i = 1; i < full.front.size(); ++i) {
    EXPECT_GT(full.front[i].num_segments, full.front[i - 1].num_segments);
    EXPECT_LT(full.front[i].e_p_body, full.front[i - 1].e_p_body);
  }
}

TEST(ParetoFront, KeepsBestPerCountAndDropsDominated) {
  std::vector<ParetoPoint> pts{{0.1, 3, 0.5, 0, {}}, {0.2, 3, 0.4, 0, {}}, {0.3, 1, 2.0, 0, {}},
                               {0.4, 5, 0.45, 0, {}}, {0.5, 6, 0.1, 0, {}}};
  const auto front = pareto_front(pts);
  ASSERT_EQ(front.size(), 3u);
  EXPECT_EQ(front[0].num_segments, 1);
  EXPECT_EQ(front[1].num_segments, 3);
  EXPECT_DOUBLE_EQ(front[1].e_p_body, 0.4);
  EXPECT_EQ(front[2].num_segments, 6);
}

TEST(Fusion, RejectsInvalidInput) {
  FusionConfig cfg;
  cfg.h = 0.0;
  MarkerData data = pcs_markers({0.1}, 5, 3, 1);
  EXPECT_THROW(kinematic_fusion(data, cfg), ConfigError);
  data.poses.resize(3, 4);
  EXPECT_THROW(kinematic_fusion(data, FusionConfig{}), DimensionMismatchError);
}
