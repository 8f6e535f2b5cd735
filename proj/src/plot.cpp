#include "pcsid/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "pcsid/errors.hpp"

namespace pcsid {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// Round tick step covering the span with about `count` intervals.
double nice_step(double span, int count) {
  const double raw = span / count;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-300) {
      const double pad = std::abs(lo) > 0 ? 0.05 * std::abs(lo) : 1.0;
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

std::string render_svg(const LineChart& chart) {
  for (const PlotSeries& s : chart.series) {
    if (s.x.size() != s.y.size()) throw DimensionMismatchError("render_svg: series '" + s.label + "' x and y differ");
  }
  auto ymap = [&](double v) { return chart.log_y ? std::log10(v) : v; };
  Range xr, yr;
  for (const PlotSeries& s : chart.series) {
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (chart.log_y && s.y[i] <= 0.0)) continue;
      xr.add(s.x[i]);
      yr.add(ymap(s.y[i]));
    }
  }
  xr.finish();
  yr.finish();

  const double W = chart.width, H = chart.height;
  const double left = 80, right = 150, top = 40, bottom = 55;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(chart.width) + "\" height=\"" +
         std::to_string(chart.height) + "\" viewBox=\"0 0 " + std::to_string(chart.width) + " " +
         std::to_string(chart.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(chart.title) +
         "</text>\n";

  const double xs = nice_step(xr.hi - xr.lo, 6);
  for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi + 1e-9 * xs; t += xs) {
    out += "<line x1=\"" + num(px(t)) + "\" y1=\"" + num(top) + "\" x2=\"" + num(px(t)) + "\" y2=\"" +
           num(top + ph) + "\" stroke=\"#e0e0e0\"/>\n";
    out += "<text x=\"" + num(px(t)) + "\" y=\"" + num(top + ph + 16) + "\" text-anchor=\"middle\">" +
           tick_label(std::abs(t) < 1e-12 * xs ? 0.0 : t) + "</text>\n";
  }
  const double ys = chart.log_y ? std::max(1.0, std::round(nice_step(yr.hi - yr.lo, 5))) : nice_step(yr.hi - yr.lo, 5);
  for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi + 1e-9 * ys; t += ys) {
    out += "<line x1=\"" + num(left) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(left + pw) + "\" y2=\"" +
           num(py(t)) + "\" stroke=\"#e0e0e0\"/>\n";
    const double label = chart.log_y ? std::pow(10.0, t) : (std::abs(t) < 1e-12 * ys ? 0.0 : t);
    out += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(t) + 4) + "\" text-anchor=\"end\">" +
           tick_label(label) + "</text>\n";
  }
  out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(H - 12) + "\" text-anchor=\"middle\">" +
         escape(chart.x_label) + "</text>\n";
  out += "<text transform=\"translate(18," + num(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(chart.y_label) + "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const PlotSeries& s = chart.series[k];
    const std::string color = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string pts;
    std::string dots;
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (chart.log_y && s.y[i] <= 0.0)) continue;
      const std::string p = num(px(s.x[i])) + "," + num(py(ymap(s.y[i])));
      pts += p + " ";
      if (s.markers) {
        dots += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(ymap(s.y[i]))) + "\" r=\"3\" fill=\"" +
                color + "\"/>\n";
      }
    }
    out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"" +
           (s.dashed ? std::string(" stroke-dasharray=\"6 4\"") : std::string()) + " points=\"" + pts + "\"/>\n";
    out += dots;
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    out += "<line x1=\"" + num(left + pw + 12) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(left + pw + 36) +
           "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"" +
           (s.dashed ? std::string(" stroke-dasharray=\"6 4\"") : std::string()) + "/>\n";
    out += "<text x=\"" + num(left + pw + 42) + "\" y=\"" + num(ly) + "\">" + escape(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace pcsid
