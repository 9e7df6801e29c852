#pragma once

#include "lmbox/gaussian_mixture.hpp"
#include "lmbox/geometry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace lmbox {

/// Constant turn rate and acceleration motion with white jerk and turn
/// acceleration driving noise, plus a small extent pseudo-noise that lets the
/// filter keep adapting w and l.
struct ProcessNoise {
  double sigma_jerk = 1.0;      // m/s^3, longitudinal
  double sigma_turn_acc = 0.35;  // rad/s^2
  double sigma_extent = 0.1;    // m / sqrt(s)
};

/// Unscented transform parameters; kappa defaults to 3 - n for n = 8.
struct UtParams {
  double alpha = 1.0;
  double beta = 2.0;
  double kappa = -5.0;
};

/// Turn rates below this magnitude take the straight-line branch.
inline constexpr double kTurnRateEps = 1e-4;

/// Closed-form CTRA propagation over dt >= 0. Heading is wrapped to
/// (-pi, pi]; extent is carried along unchanged.
inline Vec8 ctra_transition(const Vec8& state, double dt) {
  if (dt < 0.0) throw std::invalid_argument("ctra_transition: negative dt");
  const double phi = state[sv::Phi];
  const double om = state[sv::PhiDot];
  const double v = state[sv::V];
  const double a = state[sv::A];

  double dx, dy;
  if (std::abs(om) < kTurnRateEps) {
    // Second-order expansion around zero turn rate; continuous with the
    // exact branch to O(eps^2) at the threshold.
    const double c = std::cos(phi), s = std::sin(phi);
    const double arc = v * dt + 0.5 * a * dt * dt;
    const double sweep = om * (0.5 * v * dt * dt + a * dt * dt * dt / 3.0);
    dx = arc * c - sweep * s;
    dy = arc * s + sweep * c;
  } else {
    const double phi1 = phi + om * dt;
    const double v1 = v + a * dt;
    dx = (v1 * std::sin(phi1) - v * std::sin(phi)) / om +
         a * (std::cos(phi1) - std::cos(phi)) / (om * om);
    dy = (-v1 * std::cos(phi1) + v * std::cos(phi)) / om +
         a * (std::sin(phi1) - std::sin(phi)) / (om * om);
  }

  Vec8 out = state;
  out[sv::X] += dx;
  out[sv::Y] += dy;
  out[sv::Phi] = wrap_angle(phi + om * dt);
  out[sv::V] = v + a * dt;
  return out;
}

/// Discrete process noise for one step. Jerk acts along the heading through
/// the (x, y, v, a) chain, turn acceleration through (phi, phi_dot), and the
/// extent picks up sigma_extent^2 * dt on its diagonal.
inline Mat8 ctra_process_noise(double dt, double phi, const ProcessNoise& pn) {
  Mat8 q = Mat8::Zero();
  Vec8 g = Vec8::Zero();
  g[sv::X] = dt * dt * dt / 6.0 * std::cos(phi);
  g[sv::Y] = dt * dt * dt / 6.0 * std::sin(phi);
  g[sv::V] = 0.5 * dt * dt;
  g[sv::A] = dt;
  q += (pn.sigma_jerk * pn.sigma_jerk) * g * g.transpose();

  Vec8 gt = Vec8::Zero();
  gt[sv::Phi] = 0.5 * dt * dt;
  gt[sv::PhiDot] = dt;
  q += (pn.sigma_turn_acc * pn.sigma_turn_acc) * gt * gt.transpose();

  const double qe = pn.sigma_extent * pn.sigma_extent * dt;
  q(sv::W, sv::W) += qe;
  q(sv::L, sv::L) += qe;
  return q;
}

namespace detail {

/// Square root of a PSD matrix: Cholesky when possible, otherwise an
/// eigendecomposition with negative eigenvalues checked and clamped.
inline Mat8 psd_sqrt(const Mat8& m) {
  const Eigen::LLT<Mat8> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Mat8> es(m);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("psd_sqrt: eigendecomposition failed");
  }
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-9 * scale) {
    throw std::invalid_argument("psd_sqrt: covariance not positive semidefinite");
  }
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace detail

/// Unscented prediction of a single box-state component through the CTRA
/// model. The yaw mean is taken on the circle and yaw residuals are wrapped.
inline GaussianComponent predict_component(const GaussianComponent& comp, double dt,
                                           const ProcessNoise& noise, const UtParams& ut) {
  if (comp.mean.size() != sv::Dim) {
    throw std::invalid_argument("predict_component: expected an 8-dim box state");
  }
  const int n = sv::Dim;
  const double lambda = ut.alpha * ut.alpha * (n + ut.kappa) - n;
  const double c = n + lambda;
  if (c <= 0.0) throw std::invalid_argument("predict_component: alpha^2 (n + kappa) must be > 0");

  const Mat8 root = std::sqrt(c) * detail::psd_sqrt(Mat8(comp.cov));

  constexpr int kPoints = 2 * sv::Dim + 1;
  Eigen::Matrix<double, sv::Dim, kPoints> chi;
  chi.col(0) = comp.mean;
  for (int i = 0; i < n; ++i) {
    chi.col(1 + i) = Vec8(comp.mean) + root.col(i);
    chi.col(1 + n + i) = Vec8(comp.mean) - root.col(i);
  }

  const double wm0 = lambda / c;
  const double wc0 = wm0 + 1.0 - ut.alpha * ut.alpha + ut.beta;
  const double wi = 0.5 / c;

  Eigen::Matrix<double, sv::Dim, kPoints> prop;
  for (int i = 0; i < kPoints; ++i) prop.col(i) = ctra_transition(chi.col(i), dt);

  Vec8 mean = Vec8::Zero();
  double sin_sum = 0.0, cos_sum = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const double w = (i == 0) ? wm0 : wi;
    mean += w * prop.col(i);
    sin_sum += w * std::sin(prop(sv::Phi, i));
    cos_sum += w * std::cos(prop(sv::Phi, i));
  }
  mean[sv::Phi] = std::atan2(sin_sum, cos_sum);

  Mat8 cov = Mat8::Zero();
  for (int i = 0; i < kPoints; ++i) {
    const double w = (i == 0) ? wc0 : wi;
    Vec8 d = prop.col(i) - mean;
    d[sv::Phi] = wrap_angle(d[sv::Phi]);
    cov += w * d * d.transpose();
  }
  cov += ctra_process_noise(dt, mean[sv::Phi], noise);
  cov = (0.5 * (cov + cov.transpose())).eval();

  GaussianComponent out;
  out.weight = comp.weight;
  out.origin_tag = comp.origin_tag;
  out.mean = mean;
  out.cov = cov;
  return out;
}

}  // namespace lmbox
