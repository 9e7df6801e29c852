#pragma once

#include "lmbox/measurement_models.hpp"

#include <cmath>
#include <vector>

namespace lmbox {

/// Kinematic and shape plausibility constraints for road vehicles, applied
/// to posterior component means. Each check can be toggled individually;
/// with every flag off the gate passes everything through untouched.
struct ConstraintSet {
  double ratio_min = 1.2;   // length over width, lower bound
  double ratio_max = 6.0;
  double steer_max = 75.0 * std::numbers::pi / 180.0;  // rad
  double yaw_rate_floor = 0.35;  // rad/s tolerated regardless of speed
  double a_max = 10.0;      // m/s^2, forward acceleration only
  double v_min = -5.0;      // m/s, slow reversing allowed

  bool check_extent = true;
  bool check_ratio = true;
  bool check_yaw_rate = true;
  bool check_acceleration = true;
  bool check_velocity = true;

  bool any_enabled() const {
    return check_extent || check_ratio || check_yaw_rate || check_acceleration ||
           check_velocity;
  }
};

enum class Constraint { Extent, Ratio, YawRate, Acceleration, Velocity };

struct GateCheck {
  bool pass = true;
  std::vector<Constraint> violated;
};

/// Evaluates every enabled constraint on a component mean. The yaw-rate
/// bound is the single-track limit v * steer_max / l with a small floor so
/// noisy near-stationary estimates are not rejected.
inline GateCheck check_component(const VecX& mean, const ConstraintSet& cs) {
  if (mean.size() != sv::Dim) {
    throw std::invalid_argument("check_component: expected an 8-dim box state");
  }
  GateCheck out;
  const double w = mean[sv::W], l = mean[sv::L];
  const double v = mean[sv::V], a = mean[sv::A], yaw_rate = mean[sv::PhiDot];

  if (cs.check_extent && !(w >= 0.0 && l >= 0.0)) {
    out.violated.push_back(Constraint::Extent);
  }
  if (cs.check_ratio) {
    const bool ok = w > 0.0 && l / w >= cs.ratio_min && l / w <= cs.ratio_max;
    if (!ok) out.violated.push_back(Constraint::Ratio);
  }
  if (cs.check_yaw_rate) {
    const double limit =
        std::max(cs.yaw_rate_floor, l > 0.0 ? std::abs(v) * cs.steer_max / l : 0.0);
    if (std::abs(yaw_rate) > limit) out.violated.push_back(Constraint::YawRate);
  }
  if (cs.check_acceleration && a > cs.a_max) {
    out.violated.push_back(Constraint::Acceleration);
  }
  if (cs.check_velocity && v < cs.v_min) {
    out.violated.push_back(Constraint::Velocity);
  }
  out.pass = out.violated.empty();
  return out;
}

/// Removes implausible components from an update result and renormalizes,
/// scaling the association evidence down to the surviving mass so rejected
/// hypotheses stop contributing to data association. If every component
/// fails, the ungated result is returned with `gate_bypassed` set.
inline UpdateResult gate_mixture(UpdateResult result, const ConstraintSet& cs) {
  if (result.effectively_missed || result.posterior.empty()) return result;

  std::vector<char> keep(result.posterior.components.size(), 0);
  double surviving = 0.0;
  int kept = 0;
  for (size_t i = 0; i < result.posterior.components.size(); ++i) {
    if (check_component(result.posterior.components[i].mean, cs).pass) {
      keep[i] = 1;
      surviving += result.posterior.components[i].weight;
      ++kept;
    }
  }
  if (kept == static_cast<int>(keep.size())) return result;  // untouched, bit-identical
  if (kept == 0) {
    result.gate_bypassed = true;
    return result;
  }

  GaussianMixture gated;
  gated.components.reserve(kept);
  for (size_t i = 0; i < keep.size(); ++i) {
    if (!keep[i]) continue;
    GaussianComponent c = std::move(result.posterior.components[i]);
    c.weight /= surviving;
    gated.components.push_back(std::move(c));
  }
  result.posterior = std::move(gated);
  result.eta *= surviving;
  result.log_eta += std::log(surviving);
  if (result.eta < kLikelihoodFloor) {
    result.eta = kLikelihoodFloor;
    result.log_eta = std::log(kLikelihoodFloor);
  }
  return result;
}

}  // namespace lmbox
