#include "pcsid/quadrature.hpp"

namespace pcsid {

std::vector<QuadraturePoint> segment_quadrature(const RobotGeometry& geom, int segment) {
  const double start = geom.segment_start(segment);
  const double half = 0.5 * geom.segment_length(segment);
  std::vector<QuadraturePoint> pts;
  pts.reserve(GaussLegendre8::kPoints);
  for (int k = 0; k < GaussLegendre8::kPoints; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    pts.push_back({segment, start + half * (1.0 + GaussLegendre8::nodes[ku]), half * GaussLegendre8::weights[ku]});
  }
  return pts;
}

std::vector<QuadraturePoint> backbone_quadrature(const RobotGeometry& geom) {
  std::vector<QuadraturePoint> pts;
  for (int i = 0; i < geom.num_segments(); ++i) {
    auto seg = segment_quadrature(geom, i);
    pts.insert(pts.end(), seg.begin(), seg.end());
  }
  return pts;
}

}  // namespace pcsid
