#include <gtest/gtest.h>

#include <cmath>

#include "pcsid/errors.hpp"
#include "pcsid/integrators.hpp"

using namespace pcsid;

namespace {

// x'' = -x as a first-order system; exact solution (cos t, -sin t).
void oscillator(double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
  dx.resize(2);
  dx << x[1], -x[0];
}

double oscillator_error(Integrator& integ, double t1) {
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  integ.advance(oscillator, 0.0, t1, x);
  return std::hypot(x[0] - std::cos(t1), x[1] + std::sin(t1));
}

}  // namespace

TEST(Tsit5Tableau, OrderConditions) {
  using T = Tsit5Tableau;
  const auto& c = T::c;
  double ac[7] = {}, ac2[7] = {}, ac3[7] = {}, aac[7] = {}, acac[7] = {}, aac2[7] = {}, aaac[7] = {};
  for (int i = 0; i < 7; ++i) {
    double row = 0.0;
    for (int j = 0; j < i; ++j) {
      row += T::a[i][j];
      ac[i] += T::a[i][j] * c[j];
      ac2[i] += T::a[i][j] * c[j] * c[j];
      ac3[i] += T::a[i][j] * c[j] * c[j] * c[j];
    }
    EXPECT_NEAR(row, c[i], 1e-14);
  }
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < i; ++j) {
      aac[i] += T::a[i][j] * ac[j];
      acac[i] += T::a[i][j] * c[j] * ac[j];
      aac2[i] += T::a[i][j] * ac2[j];
    }
  }
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < i; ++j) {
      aaac[i] += T::a[i][j] * aac[j];
    }
  }
  auto check = [&](const double* w, int order, double tol) {
    auto dot = [&](auto f) {
      double s = 0.0;
      for (int i = 0; i < 7; ++i) s += w[i] * f(i);
      return s;
    };
    EXPECT_NEAR(dot([](int) { return 1.0; }), 1.0, tol);
    EXPECT_NEAR(dot([&](int i) { return c[i]; }), 0.5, tol);
    EXPECT_NEAR(dot([&](int i) { return c[i] * c[i]; }), 1.0 / 3, tol);
    EXPECT_NEAR(dot([&](int i) { return ac[i]; }), 1.0 / 6, tol);
    EXPECT_NEAR(dot([&](int i) { return c[i] * c[i] * c[i]; }), 0.25, tol);
    EXPECT_NEAR(dot([&](int i) { return c[i] * ac[i]; }), 1.0 / 8, tol);
    EXPECT_NEAR(dot([&](int i) { return ac2[i]; }), 1.0 / 12, tol);
    EXPECT_NEAR(dot([&](int i) { return aac[i]; }), 1.0 / 24, tol);
    if (order >= 5) {
      EXPECT_NEAR(dot([&](int i) { return std::pow(c[i], 4); }), 1.0 / 5, tol);
      EXPECT_NEAR(dot([&](int i) { return c[i] * c[i] * ac[i]; }), 1.0 / 10, tol);
      EXPECT_NEAR(dot([&](int i) { return c[i] * ac2[i]; }), 1.0 / 15, tol);
      EXPECT_NEAR(dot([&](int i) { return c[i] * aac[i]; }), 1.0 / 30, tol);
      EXPECT_NEAR(dot([&](int i) { return ac[i] * ac[i]; }), 1.0 / 20, tol);
      EXPECT_NEAR(dot([&](int i) { return ac3[i]; }), 1.0 / 20, tol);
      EXPECT_NEAR(dot([&](int i) { return acac[i]; }), 1.0 / 40, tol);
      EXPECT_NEAR(dot([&](int i) { return aac2[i]; }), 1.0 / 60, tol);
      EXPECT_NEAR(dot([&](int i) { return aaac[i]; }), 1.0 / 120, tol);
    }
  };
  check(T::b, 5, 1e-14);
  double bhat[7];
  for (int i = 0; i < 7; ++i) bhat[i] = T::b[i] - T::e[i];
  check(bhat, 4, 1e-14);
  // FSAL: b equals the last stage row.
  for (int j = 0; j < 6; ++j) EXPECT_EQ(T::b[j], T::a[6][j]);
}

TEST(Rk4, FourthOrderConvergence) {
  Rk4Integrator coarse(0.1), fine(0.05);
  const double e1 = oscillator_error(coarse, 2.0);
  const double e2 = oscillator_error(fine, 2.0);
  EXPECT_NEAR(e1 / e2, 16.0, 1.0);
  EXPECT_EQ(coarse.stats().accepted_steps, 20);
  EXPECT_EQ(coarse.stats().rhs_evaluations, 80);
}

TEST(Rk4, SplitsIntervalIntoEqualSubsteps) {
  Rk4Integrator integ(1e-4);
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  integ.advance(oscillator, 0.0, 1e-3, x);
  EXPECT_EQ(integ.stats().accepted_steps, 10);
  EXPECT_THROW(integ.advance(oscillator, 1.0, 1.0, x), InvalidArgumentError);
  EXPECT_THROW(Rk4Integrator(0.0), InvalidArgumentError);
}

TEST(Tsit5, MeetsTolerance) {
  AdaptiveOptions opt;
  opt.rtol = 1e-10;
  opt.atol = 1e-12;
  opt.max_step = 0.5;
  opt.initial_step = 1e-3;
  Tsit5Integrator integ(opt);
  const double err = oscillator_error(integ, 10.0);
  EXPECT_LE(err, 1e-8);
  EXPECT_GT(integ.stats().accepted_steps, 10);
}

TEST(Tsit5, FifthOrderAtFixedStep) {
  // With loose tolerance control disabled via max_step, the global error
  // scales with h^5.
  auto run = [](double h) {
    AdaptiveOptions opt;
    opt.rtol = 1.0;
    opt.atol = 1.0;
    opt.max_step = h;
    opt.initial_step = h;
    Tsit5Integrator integ(opt);
    return oscillator_error(integ, 2.0);
  };
  const double ratio = run(0.1) / run(0.05);
  EXPECT_NEAR(ratio, 32.0, 4.0);
}

TEST(Tsit5, RespectsMaxStepAndContinuesAcrossCalls) {
  AdaptiveOptions opt;
  opt.max_step = 5e-5;
  Tsit5Integrator integ(opt);
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  for (int k = 0; k < 10; ++k) {
    integ.advance(oscillator, k * 1e-3, (k + 1) * 1e-3, x);
  }
  EXPECT_GE(integ.stats().accepted_steps, 200);
  EXPECT_NEAR(x[0], std::cos(0.01), 1e-12);
}

TEST(Tsit5, BlowUpIsReported) {
  Tsit5Integrator integ(AdaptiveOptions{1e-8, 1e-10, 0.1, 1e-12, 1e-3});
  Eigen::VectorXd x(1);
  x << 1.0;
  auto f = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = y.array().square(); };
  EXPECT_THROW(integ.advance(f, 0.0, 2.0, x), DivergenceError);
}
