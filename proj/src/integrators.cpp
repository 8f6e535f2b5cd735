#include "pcsid/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pcsid/errors.hpp"

namespace pcsid {

namespace {

void check_finite(const Eigen::VectorXd& x, double t) {
  if (!x.allFinite()) {
    std::ostringstream msg;
    msg << "integrator: non-finite state at t = " << t;
    throw DivergenceError(msg.str(), t);
  }
}

}  // namespace

Rk4Integrator::Rk4Integrator(double max_step) : max_step_(max_step) {
  if (!(max_step > 0.0)) {
    throw InvalidArgumentError("Rk4Integrator: step must be positive");
  }
}

void Rk4Integrator::advance(const OdeRhs& f, double t0, double t1, Eigen::VectorXd& x) {
  if (!(t1 > t0)) {
    throw InvalidArgumentError("Rk4Integrator: t1 must exceed t0");
  }
  const long n = std::max(1L, static_cast<long>(std::ceil((t1 - t0) / max_step_ * (1.0 - 1e-12))));
  const double h = (t1 - t0) / static_cast<double>(n);
  for (long i = 0; i < n; ++i) {
    const double t = t0 + static_cast<double>(i) * h;
    f(t, x, k1_);
    tmp_ = x + 0.5 * h * k1_;
    f(t + 0.5 * h, tmp_, k2_);
    tmp_ = x + 0.5 * h * k2_;
    f(t + 0.5 * h, tmp_, k3_);
    tmp_ = x + h * k3_;
    f(t + h, tmp_, k4_);
    x += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
    stats_.rhs_evaluations += 4;
    ++stats_.accepted_steps;
    check_finite(x, t + h);
  }
}

Tsit5Integrator::Tsit5Integrator(AdaptiveOptions options) : options_(options) {
  if (!(options_.max_step > 0.0) || !(options_.min_step > 0.0) || !(options_.rtol > 0.0) ||
      !(options_.atol > 0.0)) {
    throw InvalidArgumentError("Tsit5Integrator: tolerances and step bounds must be positive");
  }
}

void Tsit5Integrator::restart() {
  have_k1_ = false;
  h_ = 0.0;
}

void Tsit5Integrator::advance(const OdeRhs& f, double t0, double t1, Eigen::VectorXd& x) {
  using Tab = Tsit5Tableau;
  if (!(t1 > t0)) {
    throw InvalidArgumentError("Tsit5Integrator: t1 must exceed t0");
  }
  if (h_ <= 0.0) {
    h_ = std::min(options_.initial_step, options_.max_step);
  }
  if (!have_k1_ || k1_time_ != t0 || last_x_.size() != x.size() || last_x_ != x) {
    f(t0, x, k_[0]);
    ++stats_.rhs_evaluations;
  }
  double t = t0;
  while (t < t1) {
    double h = std::min(h_, options_.max_step);
    const bool last = t + h >= t1 - 1e-14 * std::max(1.0, std::abs(t1));
    if (last) {
      h = t1 - t;
    }
    for (int s = 1; s < 7; ++s) {
      stage_ = x;
      for (int j = 0; j < s; ++j) {
        if (Tab::a[s][j] != 0.0) {
          stage_.noalias() += (h * Tab::a[s][j]) * k_[j];
        }
      }
      if (s == 6) {
        next_ = stage_;
      }
      f(t + Tab::c[s] * h, stage_, k_[s]);
    }
    stats_.rhs_evaluations += 6;
    err_ = Eigen::VectorXd::Zero(x.size());
    for (int j = 0; j < 7; ++j) {
      err_.noalias() += (h * Tab::e[j]) * k_[j];
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double sc = options_.atol + options_.rtol * std::max(std::abs(x[i]), std::abs(next_[i]));
      const double r = err_[i] / sc;
      sum += r * r;
    }
    const double err = x.size() > 0 ? std::sqrt(sum / static_cast<double>(x.size())) : 0.0;
    if (!std::isfinite(err)) {
      h_ = 0.2 * h;
    } else if (err <= 1.0) {
      t = last ? t1 : t + h;
      x = next_;
      k_[0] = k_[6];
      ++stats_.accepted_steps;
      check_finite(x, t);
      const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      // Keep the controller's step when the interval end truncated it.
      if (!last || h >= h_) {
        h_ = h * std::clamp(fac, 0.2, 5.0);
      }
      continue;
    } else {
      ++stats_.rejected_steps;
      h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
    }
    if (h_ < options_.min_step) {
      std::ostringstream msg;
      msg << "Tsit5Integrator: step size collapsed below " << options_.min_step << " at t = " << t;
      throw DivergenceError(msg.str(), t);
    }
  }
  have_k1_ = true;
  k1_time_ = t1;
  last_x_ = x;
}

}  // namespace pcsid
