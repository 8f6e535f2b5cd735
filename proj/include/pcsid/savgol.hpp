#pragma once

// Savitzky-Golay smoothing and differentiation of uniformly sampled series.

#include <Eigen/Core>

#include <vector>

namespace pcsid {

class SavitzkyGolay {
 public:
  // Requires an odd window with window >= order + 2.
  SavitzkyGolay(int order, int window);

  int order() const { return order_; }
  int window() const { return window_; }

  // Filter taps for the deriv-th derivative at position pos of the window
  // (0 <= pos < window), for unit sample spacing.
  const Eigen::VectorXd& taps(int deriv, int pos) const;

  // Filters every column of a T x m series. Interior samples use centered
  // windows, the first and last window/2 samples use the end windows. Throws
  // InsufficientDataError if T < window.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& series, int deriv, double dt) const;

 private:
  int order_;
  int window_;
  // taps_[deriv][pos]
  std::vector<std::vector<Eigen::VectorXd>> taps_;
};

struct SavgolDerivatives {
  Eigen::MatrixXd smoothed;
  Eigen::MatrixXd first;
  Eigen::MatrixXd second;
};

SavgolDerivatives savgol_derivatives(const Eigen::MatrixXd& series, double dt, int order = 3, int window = 25);

}  // namespace pcsid
