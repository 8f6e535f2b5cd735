#pragma once

#include <array>
#include <vector>

#include "pcsid/kinematics.hpp"

namespace pcsid {

// 8-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre8 {
  static constexpr int kPoints = 8;
  static constexpr std::array<double, kPoints> nodes{
      -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
      0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
  static constexpr std::array<double, kPoints> weights{
      0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
      0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
};

struct QuadraturePoint {
  int segment = 0;
  double s = 0.0;       // backbone abscissa
  double weight = 0.0;  // includes the interval half-length
};

// Quadrature points of one segment, mapped onto [start_i, start_i + l_i].
std::vector<QuadraturePoint> segment_quadrature(const RobotGeometry& geom, int segment);

// All segments, proximal to distal.
std::vector<QuadraturePoint> backbone_quadrature(const RobotGeometry& geom);

}  // namespace pcsid
