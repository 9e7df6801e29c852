#pragma once

#include "lmbox/gaussian_mixture.hpp"
#include "lmbox/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace lmbox {

/// A sensor detection: a Gaussian in the masked feature space, optionally
/// labeled with the reference point the sensor claims to have measured.
struct Measurement {
  VecX mean;
  MatX cov;
  FeatureMask feature_mask = kPositionMask;
  std::optional<RefPoint> ref_point;
  int sensor_id = 0;
  double timestamp = 0.0;

  int dim() const { return mask_dim(feature_mask); }

  void validate() const {
    if ((feature_mask & kPositionMask) != kPositionMask) {
      throw std::invalid_argument("measurement: feature mask must include position");
    }
    if (mean.size() != dim() || cov.rows() != dim() || cov.cols() != dim()) {
      throw std::invalid_argument("measurement: dimension does not match feature mask");
    }
    if (!mean.allFinite() || !cov.allFinite()) {
      throw std::invalid_argument("measurement: non-finite entries");
    }
  }
};

/// Prior weights over the corner hypotheses, in kCorners order.
struct HypothesisWeights {
  std::array<double, 4> w{0.25, 0.25, 0.25, 0.25};

  static HypothesisWeights uniform() { return {}; }

  double at(RefPoint zeta) const {
    for (size_t i = 0; i < kCorners.size(); ++i) {
      if (kCorners[i] == zeta) return w[i];
    }
    throw std::invalid_argument("hypothesis weights are defined on corners only");
  }

  void validate() const {
    double s = 0.0;
    for (double x : w) {
      if (x < 0.0) throw std::invalid_argument("hypothesis weight < 0");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw std::invalid_argument("hypothesis weights must sum to 1");
    }
  }
};

/// Smallest association evidence the models report; anything below is
/// treated as an effective miss with the prior passed through unchanged.
inline constexpr double kLikelihoodFloor = 1e-300;

/// Outcome of conditioning a track density on one measurement.
struct UpdateResult {
  GaussianMixture posterior;
  double eta = 0.0;  // association evidence <prior, g(z | .)>
  double log_eta = -std::numeric_limits<double>::infinity();
  /// Known-reference-point evidence per hypothesis (no hypothesis weight).
  std::vector<std::pair<RefPoint, double>> per_hypothesis;
  std::optional<RefPoint> chosen;  // set by the max-likelihood model
  bool effectively_missed = false;
  bool gate_bypassed = false;
};

/// Corner alphabet a measurement activates: the reported reference point if
/// the sensor names one, otherwise all four corners.
inline std::vector<RefPoint> measurement_alphabet(const Measurement& z) {
  if (z.ref_point) return {*z.ref_point};
  return {kCorners.begin(), kCorners.end()};
}

namespace detail {

inline double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

/// Row index of the yaw entry among masked rows, or -1 when yaw is not
/// measured. Rows are emitted in state-index order and position always
/// precedes yaw, so the index is the popcount of the lower bits.
inline int yaw_row(FeatureMask mask) {
  if (!(mask & (1u << sv::Phi))) return -1;
  return mask_dim(mask & ((1u << sv::Phi) - 1));
}

/// Per-corner conditioning of every prior component. The measurement matrix
/// is rebuilt per component at that component's own yaw. Yaw innovations are
/// wrapped when the sensor reports yaw.
struct ZetaUpdate {
  std::vector<double> log_like;              // per prior component
  double log_evidence = -std::numeric_limits<double>::infinity();
  std::vector<GaussianComponent> posterior;  // empty when only evidence is needed
};

inline ZetaUpdate condition_on_corner(const GaussianMixture& prior, const Measurement& z,
                                      RefPoint zeta, bool want_posterior) {
  ZetaUpdate out;
  out.log_like.reserve(prior.size());
  if (want_posterior) out.posterior.reserve(prior.size());
  const int yr = yaw_row(z.feature_mask);
  std::vector<double> masses;
  masses.reserve(prior.size());
  for (const auto& comp : prior.components) {
    const TransformMatrix t = build_transform(comp.mean[sv::Phi], zeta);
    const MatX h = t.rows(z.feature_mask);
    VecX zz = z.mean;
    if (yr >= 0) {
      const double pred = h.row(yr).dot(comp.mean);
      zz[yr] = pred + wrap_angle(zz[yr] - pred);
    }
    Conditioned c = kalman_condition(comp, zz, h, z.cov);
    out.log_like.push_back(c.log_likelihood);
    masses.push_back(std::log(comp.weight) + c.log_likelihood);
    if (want_posterior) {
      c.posterior.mean[sv::Phi] = wrap_angle(c.posterior.mean[sv::Phi]);
      c.posterior.origin_tag = zeta;
      out.posterior.push_back(std::move(c.posterior));
    }
  }
  out.log_evidence = log_sum_exp(masses);
  return out;
}

inline void check_box_prior(const GaussianMixture& prior) {
  if (prior.empty()) throw std::invalid_argument("likelihood: empty prior mixture");
  if (prior.dim() != sv::Dim) {
    throw std::invalid_argument("likelihood: prior must be an 8-dim box mixture");
  }
}

inline UpdateResult floored_miss(const GaussianMixture& prior,
                                 std::vector<std::pair<RefPoint, double>> per_hyp) {
  UpdateResult out;
  out.posterior = prior;
  out.eta = kLikelihoodFloor;
  out.log_eta = std::log(kLikelihoodFloor);
  out.per_hypothesis = std::move(per_hyp);
  out.effectively_missed = true;
  return out;
}

/// Shared core of the known-corner and multi-hypothesis updates: mixes the
/// per-corner conditioned components with the given log hypothesis weights.
inline UpdateResult mix_hypotheses(const GaussianMixture& prior, const Measurement& z,
                                   const std::vector<RefPoint>& alphabet,
                                   const std::vector<double>& log_hyp_weight) {
  std::vector<ZetaUpdate> per_zeta;
  per_zeta.reserve(alphabet.size());
  std::vector<std::pair<RefPoint, double>> per_hyp;
  std::vector<double> masses;
  for (size_t k = 0; k < alphabet.size(); ++k) {
    per_zeta.push_back(condition_on_corner(prior, z, alphabet[k], true));
    per_hyp.emplace_back(alphabet[k], std::exp(per_zeta.back().log_evidence));
    for (size_t j = 0; j < prior.components.size(); ++j) {
      masses.push_back(log_hyp_weight[k] + std::log(prior.components[j].weight) +
                       per_zeta.back().log_like[j]);
    }
  }
  const double log_eta = log_sum_exp(masses);
  if (!(log_eta >= std::log(kLikelihoodFloor))) {
    return floored_miss(prior, std::move(per_hyp));
  }

  UpdateResult out;
  out.log_eta = log_eta;
  out.eta = std::exp(log_eta);
  out.per_hypothesis = std::move(per_hyp);
  size_t m = 0;
  for (auto& zu : per_zeta) {
    for (auto& comp : zu.posterior) {
      comp.weight = std::exp(masses[m++] - log_eta);
      out.posterior.components.push_back(std::move(comp));
    }
  }
  return out;
}

}  // namespace detail

/// Update for a sensor that names the measured reference point. The result
/// is a plain per-component Kalman update through the corner transform, with
/// eta the mixture-weighted evidence.
inline UpdateResult likelihood_meas(const GaussianMixture& prior, const Measurement& z) {
  detail::check_box_prior(prior);
  z.validate();
  if (!z.ref_point) {
    throw std::invalid_argument("likelihood_meas: measurement does not name a reference point");
  }
  return detail::mix_hypotheses(prior, z, {*z.ref_point}, {0.0});
}

/// Multi-hypothesis update: every corner stays in the posterior as a tagged
/// component, weighted by hypothesis prior times evidence. Collapses to the
/// known-corner update when the measurement names its reference point.
inline UpdateResult likelihood_mh(const GaussianMixture& prior, const Measurement& z,
                                  const HypothesisWeights& weights = HypothesisWeights::uniform()) {
  detail::check_box_prior(prior);
  z.validate();
  weights.validate();
  if (z.ref_point) {
    return detail::mix_hypotheses(prior, z, {*z.ref_point}, {0.0});
  }
  std::vector<RefPoint> alphabet(kCorners.begin(), kCorners.end());
  std::vector<double> logw;
  logw.reserve(4);
  for (size_t i = 0; i < 4; ++i) logw.push_back(std::log(weights.w[i]));
  return detail::mix_hypotheses(prior, z, alphabet, logw);
}

/// Hard-decision update: scores every corner by its mixture-weighted
/// evidence, commits to the best one and conditions on it alone. Ties break
/// toward the first corner in kCorners order.
inline UpdateResult likelihood_max(const GaussianMixture& prior, const Measurement& z) {
  detail::check_box_prior(prior);
  z.validate();
  const std::vector<RefPoint> alphabet = measurement_alphabet(z);

  std::vector<std::pair<RefPoint, double>> per_hyp;
  RefPoint best = alphabet.front();
  double best_log = -std::numeric_limits<double>::infinity();
  for (RefPoint zeta : alphabet) {
    const detail::ZetaUpdate zu = detail::condition_on_corner(prior, z, zeta, false);
    per_hyp.emplace_back(zeta, std::exp(zu.log_evidence));
    if (zu.log_evidence > best_log) {
      best_log = zu.log_evidence;
      best = zeta;
    }
  }
  if (!(best_log >= std::log(kLikelihoodFloor))) {
    UpdateResult out = detail::floored_miss(prior, std::move(per_hyp));
    out.chosen = best;
    return out;
  }
  UpdateResult out = detail::mix_hypotheses(prior, z, {best}, {0.0});
  out.per_hypothesis = std::move(per_hyp);
  out.chosen = best;
  return out;
}

/// Missed-detection branch: the spatial density is unchanged and the
/// association evidence is the miss probability.
inline UpdateResult missed_detection_update(const GaussianMixture& prior, double p_detect) {
  detail::check_box_prior(prior);
  if (p_detect < 0.0 || p_detect > 1.0) {
    throw std::invalid_argument("missed_detection_update: p_detect must be in [0, 1]");
  }
  UpdateResult out;
  out.posterior = prior;
  out.eta = 1.0 - p_detect;
  out.log_eta = std::log(out.eta);
  return out;
}

}  // namespace lmbox
