#pragma once

// Explicit Runge-Kutta integrators for first-order systems x' = f(t, x).

#include <Eigen/Core>

#include <functional>
#include <memory>

namespace pcsid {

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& x, Eigen::VectorXd& dxdt)>;

struct IntegratorStats {
  long accepted_steps = 0;
  long rejected_steps = 0;
  long rhs_evaluations = 0;
};

class Integrator {
 public:
  virtual ~Integrator() = default;

  // Advances x in place from t0 to t1 (t1 > t0). Throws DivergenceError if
  // the state stops being finite or an adaptive step collapses.
  virtual void advance(const OdeRhs& f, double t0, double t1, Eigen::VectorXd& x) = 0;

  const IntegratorStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }

 protected:
  IntegratorStats stats_;
};

// Classical fourth-order Runge-Kutta with a fixed step no larger than
// max_step; each advance() call is split into equal substeps.
class Rk4Integrator : public Integrator {
 public:
  explicit Rk4Integrator(double max_step);
  void advance(const OdeRhs& f, double t0, double t1, Eigen::VectorXd& x) override;
  double max_step() const { return max_step_; }

 private:
  double max_step_;
  Eigen::VectorXd k1_, k2_, k3_, k4_, tmp_;
};

struct AdaptiveOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = 5e-5;
  double min_step = 1e-12;
  double initial_step = 1e-6;
};

// Tsitouras 5(4) embedded pair with first-same-as-last stage reuse and an
// elementary step-size controller. The step size carries over between calls.
class Tsit5Integrator : public Integrator {
 public:
  explicit Tsit5Integrator(AdaptiveOptions options = {});
  void advance(const OdeRhs& f, double t0, double t1, Eigen::VectorXd& x) override;
  const AdaptiveOptions& options() const { return options_; }

  // Forgets the cached derivative and step size. Needed when the right-hand
  // side changes discontinuously between calls; a changed state is detected
  // automatically.
  void restart();

 private:
  AdaptiveOptions options_;
  double h_ = 0.0;
  bool have_k1_ = false;
  double k1_time_ = 0.0;
  Eigen::VectorXd k_[7];
  Eigen::VectorXd stage_, next_, err_, last_x_;
};

// Butcher tableau of the Tsitouras 5(4) pair; exposed for order-condition tests.
struct Tsit5Tableau {
  static constexpr double c[7] = {0.0, 0.161, 0.327, 0.9, 0.9800255409045097, 1.0, 1.0};
  static constexpr double a[7][6] = {
      {0, 0, 0, 0, 0, 0},
      {0.161, 0, 0, 0, 0, 0},
      {-0.008480655492356989, 0.335480655492357, 0, 0, 0, 0},
      {2.897153057105493, -6.359448489975075, 4.3622954328695815, 0, 0, 0},
      {5.325864828439257, -11.748883564062828, 7.4955393428898365, -0.09249506636175525, 0, 0},
      {5.86145544294642, -12.92096931784711, 8.159367898576159, -0.071584973281401, -0.028269050394068383, 0},
      {0.09646076681806523, 0.01, 0.4798896504144996, 1.379008574103742, -3.290069515436081, 2.324710524099774}};
  // Fifth-order weights equal the last row of a (FSAL); b7 = 0.
  static constexpr double b[7] = {0.09646076681806523, 0.01, 0.4798896504144996, 1.379008574103742,
                                  -3.290069515436081,  2.324710524099774, 0.0};
  // b - b_hat.
  static constexpr double e[7] = {-0.00178001105222577714, -0.0008164344596567469, 0.007880878010261995,
                                  -0.1447110071732629,     0.5823571654525552,     -0.45808210592918697,
                                  0.015151515151515152};
};

}  // namespace pcsid
