#include "pcsid/savgol.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pcsid/errors.hpp"
#include "pcsid/kernels.hpp"

namespace pcsid {

SavitzkyGolay::SavitzkyGolay(int order, int window) : order_(order), window_(window) {
  if (order < 0 || window % 2 == 0 || window < order + 2) {
    throw InvalidArgumentError("SavitzkyGolay: window must be odd and at least order + 2");
  }
  const double half = 0.5 * (window - 1);
  const int max_deriv = std::min(order, 2);
  taps_.assign(static_cast<std::size_t>(max_deriv + 1), std::vector<Eigen::VectorXd>(static_cast<std::size_t>(window)));
  for (int pos = 0; pos < window; ++pos) {
    // Scaled abscissas keep the Vandermonde matrix well conditioned.
    Eigen::MatrixXd v(window, order + 1);
    for (int j = 0; j < window; ++j) {
      const double x = (j - pos) / half;
      double p = 1.0;
      for (int k = 0; k <= order; ++k) {
        v(j, k) = p;
        p *= x;
      }
    }
    const Eigen::MatrixXd pinv = v.householderQr().solve(Eigen::MatrixXd::Identity(window, window));
    double fact = 1.0;
    double scale = 1.0;
    for (int d = 0; d <= max_deriv; ++d) {
      if (d > 0) {
        fact *= d;
        scale *= half;
      }
      taps_[static_cast<std::size_t>(d)][static_cast<std::size_t>(pos)] = (fact / scale) * pinv.row(d).transpose();
    }
  }
}

const Eigen::VectorXd& SavitzkyGolay::taps(int deriv, int pos) const {
  if (deriv < 0 || deriv >= static_cast<int>(taps_.size()) || pos < 0 || pos >= window_) {
    throw OutOfRangeError("SavitzkyGolay: derivative order or window position out of range");
  }
  return taps_[static_cast<std::size_t>(deriv)][static_cast<std::size_t>(pos)];
}

Eigen::MatrixXd SavitzkyGolay::apply(const Eigen::MatrixXd& series, int deriv, double dt) const {
  const Eigen::Index t = series.rows();
  if (t < window_) {
    std::ostringstream msg;
    msg << "SavitzkyGolay: " << t << " samples is fewer than the window length " << window_;
    throw InsufficientDataError(msg.str());
  }
  if (!(dt > 0.0)) {
    throw InvalidArgumentError("SavitzkyGolay: dt must be positive");
  }
  const int h = window_ / 2;
  const double scale = 1.0 / std::pow(dt, deriv);
  Eigen::MatrixXd out(t, series.cols());
  const Eigen::VectorXd& center = taps(deriv, h);
  const auto interior = static_cast<std::size_t>(t - window_ + 1);
  for (Eigen::Index c = 0; c < series.cols(); ++c) {
    const double* x = series.col(c).data();
    double* y = out.col(c).data();
    kernels::correlate(center.data(), window_, x, y + h, interior);
    for (int i = 0; i < h; ++i) {
      y[i] = taps(deriv, i).dot(series.col(c).head(window_));
      const Eigen::Index r = t - h + i;
      y[r] = taps(deriv, h + 1 + i).dot(series.col(c).tail(window_));
    }
    out.col(c) *= scale;
  }
  return out;
}

SavgolDerivatives savgol_derivatives(const Eigen::MatrixXd& series, double dt, int order, int window) {
  const SavitzkyGolay filter(order, window);
  SavgolDerivatives out;
  out.smoothed = filter.apply(series, 0, dt);
  out.first = filter.apply(series, 1, dt);
  out.second = filter.apply(series, 2, dt);
  return out;
}

}  // namespace pcsid
