#pragma once

// Standalone SVG line charts.

#include <Eigen/Core>

#include <string>
#include <vector>

namespace pcsid {

struct PlotSeries {
  std::string label;
  Eigen::VectorXd x, y;
  bool dashed = false;
  bool markers = false;  // draw a dot at every point
};

struct LineChart {
  std::string title;
  std::string x_label, y_label;
  std::vector<PlotSeries> series;
  int width = 720, height = 420;
  bool log_y = false;  // non-positive values are dropped
};

// Throws DimensionMismatchError when a series has x and y of different length.
std::string render_svg(const LineChart& chart);

}  // namespace pcsid
