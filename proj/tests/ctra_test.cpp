#include "lmbox/ctra.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace lmbox;

namespace {

constexpr double kPi = std::numbers::pi;

// Oracle: RK4 integration of the CTRA kinematics with a small fixed step.
Vec8 rk4_ctra(const Vec8& s0, double dt, int steps = 2000) {
  auto deriv = [](const Vec8& s) {
    Vec8 d = Vec8::Zero();
    d[sv::X] = s[sv::V] * std::cos(s[sv::Phi]);
    d[sv::Y] = s[sv::V] * std::sin(s[sv::Phi]);
    d[sv::Phi] = s[sv::PhiDot];
    d[sv::V] = s[sv::A];
    return d;
  };
  Vec8 s = s0;
  const double h = dt / steps;
  for (int i = 0; i < steps; ++i) {
    const Vec8 k1 = deriv(s);
    const Vec8 k2 = deriv(s + 0.5 * h * k1);
    const Vec8 k3 = deriv(s + 0.5 * h * k2);
    const Vec8 k4 = deriv(s + h * k3);
    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  s[sv::Phi] = wrap_angle(s[sv::Phi]);
  return s;
}

Vec8 make_state(double x, double y, double phi, double om, double v, double a,
                double w = 2.0, double l = 4.5) {
  Vec8 s;
  s << x, y, phi, om, v, a, w, l;
  return s;
}

TEST(CtraTransition, QuarterCircleMatchesRk4) {
  const Vec8 s0 = make_state(0, 0, 0, kPi / 2, 5.0, 0.0);
  const Vec8 got = ctra_transition(s0, 1.0);
  const Vec8 want = rk4_ctra(s0, 1.0);
  EXPECT_LT((got - want).norm(), 1e-6);
  // Analytic arc: radius v / omega, ends a quarter turn later.
  EXPECT_NEAR(got[sv::Phi], kPi / 2, 1e-12);
  EXPECT_NEAR(got[sv::X], 10.0 / kPi, 1e-9);
  EXPECT_NEAR(got[sv::Y], 10.0 / kPi, 1e-9);
}

TEST(CtraTransition, RandomStatesMatchRk4) {
  std::mt19937 gen(61);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const Vec8 s0 = make_state(10 * u(gen), 10 * u(gen), kPi * u(gen), 1.5 * u(gen),
                               8.0 + 4 * u(gen), 2 * u(gen));
    const double dt = 0.35 + 0.3 * u(gen);
    const Vec8 got = ctra_transition(s0, dt);
    const Vec8 want = rk4_ctra(s0, dt);
    EXPECT_LT((got - want).norm(), 1e-6) << "state " << s0.transpose();
  }
}

TEST(CtraTransition, ExtentNeverChanges) {
  const Vec8 s0 = make_state(1, 2, 0.4, 0.3, 6, 1, 1.87, 4.31);
  const Vec8 s1 = ctra_transition(s0, 0.7);
  EXPECT_EQ(s1[sv::W], 1.87);
  EXPECT_EQ(s1[sv::L], 4.31);
}

TEST(CtraTransition, BranchContinuityAtThreshold) {
  // Crossing the small-turn-rate threshold must not jump: compare the Taylor
  // branch just below eps against the exact branch just above.
  const double dt = 0.5;
  for (double v : {2.0, 10.0}) {
    for (double a : {0.0, 3.0}) {
      const Vec8 below = ctra_transition(make_state(0, 0, 0.3, 0.9999e-4, v, a), dt);
      const Vec8 above = ctra_transition(make_state(0, 0, 0.3, 1.0001e-4, v, a), dt);
      EXPECT_LT((below - above).norm(), 1e-6);
    }
  }
}

TEST(CtraTransition, ZeroDtIsIdentity) {
  const Vec8 s0 = make_state(3, -1, 2.9, -0.4, 7, 0.5);
  const Vec8 s1 = ctra_transition(s0, 0.0);
  EXPECT_LT((s1 - s0).norm(), 1e-15);
}

TEST(CtraTransition, NegativeDtThrows) {
  EXPECT_THROW(ctra_transition(make_state(0, 0, 0, 0, 5, 0), -0.1), std::invalid_argument);
}

TEST(ProcessNoise, ExtentVarianceGrowsLinearly) {
  const ProcessNoise pn{1.0, 0.5, 0.1};
  const Mat8 q = ctra_process_noise(0.1, 0.7, pn);
  EXPECT_NEAR(q(sv::W, sv::W), 0.01 * 0.1, 1e-15);
  EXPECT_NEAR(q(sv::L, sv::L), 0.01 * 0.1, 1e-15);
  // Jerk feeds the longitudinal chain.
  EXPECT_GT(q(sv::A, sv::A), 0.0);
  EXPECT_GT(q(sv::V, sv::V), 0.0);
  EXPECT_GT(q(sv::Phi, sv::Phi), 0.0);
}

TEST(ProcessNoise, ZeroSigmasGiveZeroMatrix) {
  const Mat8 q = ctra_process_noise(0.1, 0.0, ProcessNoise{0.0, 0.0, 0.0});
  EXPECT_EQ(q.norm(), 0.0);
}

GaussianComponent box_component(const Vec8& mean, const Mat8& cov, double w = 1.0) {
  GaussianComponent c;
  c.weight = w;
  c.mean = mean;
  c.cov = cov;
  return c;
}

TEST(PredictComponent, LinearRegimeMatchesLinearKalmanPrediction) {
  // With yaw, turn rate and acceleration known exactly the CTRA map is affine
  // in the uncertain states, so the UT must reproduce F P F' exactly.
  const double dt = 0.1, phi0 = 0.6;
  const Vec8 mean = make_state(1.0, -2.0, phi0, 0.0, 8.0, 0.0);
  Vec8 diag;
  diag << 1.0, 2.0, 0.0, 0.0, 0.25, 0.0, 0.04, 0.09;
  const Mat8 p = diag.asDiagonal();

  Mat8 f = Mat8::Identity();
  f(sv::X, sv::V) = dt * std::cos(phi0);
  f(sv::Y, sv::V) = dt * std::sin(phi0);
  f(sv::V, sv::A) = dt;
  f(sv::Phi, sv::PhiDot) = dt;

  const GaussianComponent out =
      predict_component(box_component(mean, p), dt, ProcessNoise{0, 0, 0}, UtParams{});
  EXPECT_LT((out.mean - ctra_transition(mean, dt)).norm(), 1e-10);
  EXPECT_LT((Mat8(out.cov) - f * p * f.transpose()).norm(), 1e-8);
}

TEST(PredictComponent, MeanMatchesMonteCarloUnderTurn) {
  // Oracle: 1e6-sample Monte Carlo propagation of the same density.
  const double dt = 0.5;
  const Vec8 mean = make_state(0, 0, 0.4, 0.5, 10.0, 0.5);
  Vec8 diag;
  diag << 0.5, 0.5, 0.04, 0.01, 1.0, 0.25, 0.02, 0.05;
  const Mat8 p = diag.asDiagonal();

  const GaussianComponent out =
      predict_component(box_component(mean, p), dt, ProcessNoise{0, 0, 0}, UtParams{});

  std::mt19937_64 gen(987);
  std::normal_distribution<double> n;
  const Mat8 root = Eigen::LLT<Mat8>(p).matrixL();
  const int samples = 1000000;
  Vec8 mc = Vec8::Zero();
  for (int i = 0; i < samples; ++i) {
    Vec8 eps;
    for (int j = 0; j < sv::Dim; ++j) eps[j] = n(gen);
    mc += ctra_transition(mean + root * eps, dt);
  }
  mc /= samples;
  EXPECT_LT((out.mean.head<2>() - mc.head<2>()).norm(), 0.05);
  EXPECT_NEAR(out.mean[sv::Phi], mc[sv::Phi], 0.01);
}

TEST(PredictComponent, ZeroDtZeroNoiseIsIdentity) {
  std::mt19937 gen(67);
  std::normal_distribution<double> n;
  MatX m(sv::Dim, sv::Dim);
  for (int i = 0; i < sv::Dim; ++i)
    for (int j = 0; j < sv::Dim; ++j) m(i, j) = n(gen);
  Mat8 p = m * m.transpose() + 0.1 * Mat8::Identity();
  // Keep the yaw marginal well inside (-pi, pi); the reconstruction is only
  // linear while no sigma point wraps around the circle.
  p.row(sv::Phi) *= 0.05;
  p.col(sv::Phi) *= 0.05;
  const Vec8 mean = make_state(1, 2, 0.3, 0.2, 5, 1);

  const GaussianComponent out =
      predict_component(box_component(mean, p), 0.0, ProcessNoise{0, 0, 0}, UtParams{});
  EXPECT_LT((out.mean - mean).norm(), 1e-12);
  EXPECT_LT((Mat8(out.cov) - p).norm(), 1e-10);
}

TEST(PredictComponent, PreservesWeightAndTag) {
  GaussianComponent c = box_component(make_state(0, 0, 0, 0, 5, 0), Mat8::Identity(), 0.25);
  c.origin_tag = RefPoint::FR;
  const GaussianComponent out = predict_component(c, 0.1, ProcessNoise{}, UtParams{});
  EXPECT_EQ(out.weight, 0.25);
  EXPECT_EQ(out.origin_tag, RefPoint::FR);
}

TEST(PredictComponent, RejectsIndefiniteCovariance) {
  Mat8 p = Mat8::Identity();
  p(0, 0) = -1.0;
  EXPECT_THROW(
      predict_component(box_component(make_state(0, 0, 0, 0, 5, 0), p), 0.1,
                        ProcessNoise{}, UtParams{}),
      std::invalid_argument);
}

TEST(PredictComponent, SemidefiniteCovarianceAccepted) {
  // Zero-variance directions are legal (used by sharp birth priors).
  Vec8 diag;
  diag << 1, 1, 0, 0, 0.1, 0, 0.01, 0.01;
  const GaussianComponent out = predict_component(
      box_component(make_state(0, 0, 0, 0, 5, 0), Mat8(diag.asDiagonal())), 0.1,
      ProcessNoise{}, UtParams{});
  EXPECT_TRUE(out.mean.allFinite());
  EXPECT_TRUE(out.cov.allFinite());
}

TEST(PredictComponent, YawCovarianceHandledAcrossBranchCut) {
  // A component pointed at the pi branch cut must not blow up its yaw
  // variance through naive residual arithmetic.
  Vec8 mean = make_state(0, 0, kPi - 1e-3, 0.0, 5, 0);
  Mat8 p = Mat8::Identity() * 0.1;
  p(sv::Phi, sv::Phi) = 0.2;
  const GaussianComponent out =
      predict_component(box_component(mean, p), 0.1, ProcessNoise{0, 0, 0}, UtParams{});
  EXPECT_LT(out.cov(sv::Phi, sv::Phi), 0.3);
  EXPECT_NEAR(std::abs(out.mean[sv::Phi]), kPi, 2e-3);
}

}  // namespace
