#pragma once

#include "lmbox/geometry.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmbox {

/// Weighted Gaussian, optionally tagged with the reference-point hypothesis
/// that produced it. Dimension is dynamic; the filter always uses the 8-dim
/// box state, in which case index sv::Phi is treated as circular.
struct GaussianComponent {
  double weight = 1.0;
  VecX mean;
  MatX cov;
  std::optional<RefPoint> origin_tag;
};

struct GaussianMixture {
  std::vector<GaussianComponent> components;

  bool empty() const { return components.empty(); }
  int size() const { return static_cast<int>(components.size()); }
  int dim() const { return empty() ? 0 : static_cast<int>(components.front().mean.size()); }

  double total_weight() const {
    double s = 0.0;
    for (const auto& c : components) s += c.weight;
    return s;
  }
};

namespace detail {

inline bool is_box_dim(int d) { return d == sv::Dim; }

/// Difference a - b with the yaw entry wrapped when the vectors are box states.
inline VecX state_residual(const VecX& a, const VecX& b) {
  VecX d = a - b;
  if (is_box_dim(static_cast<int>(d.size()))) d[sv::Phi] = wrap_angle(d[sv::Phi]);
  return d;
}

inline void symmetrize(MatX& m) { m = (0.5 * (m + m.transpose())).eval(); }

/// Clamps eigenvalues from below; used after moment matching so merged
/// covariances stay numerically positive definite.
inline void floor_eigenvalues(MatX& m, double floor) {
  Eigen::SelfAdjointEigenSolver<MatX> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  VecX ev = es.eigenvalues().cwiseMax(floor);
  m = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  symmetrize(m);
}

}  // namespace detail

/// Log density of N(x; mean, cov). Throws if cov is not positive definite.
inline double gaussian_log_pdf(const VecX& x, const VecX& mean, const MatX& cov) {
  const Eigen::LLT<MatX> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("gaussian_log_pdf: covariance not positive definite");
  }
  const VecX r = detail::state_residual(x, mean);
  const VecX half = llt.matrixL().solve(r);
  double log_det = 0.0;
  for (int i = 0; i < cov.rows(); ++i) log_det += std::log(llt.matrixL()(i, i));
  log_det *= 2.0;
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + half.squaredNorm());
}

/// Mixture density at a point.
inline double eval_pdf(const GaussianMixture& mix, const VecX& point) {
  double p = 0.0;
  for (int i = 0; i < mix.size(); ++i) {
    const auto& c = mix.components[i];
    if (point.size() != c.mean.size()) {
      throw std::invalid_argument("eval_pdf: point dimension mismatch at component " +
                                  std::to_string(i));
    }
    try {
      p += c.weight * std::exp(gaussian_log_pdf(point, c.mean, c.cov));
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("eval_pdf: singular covariance at component " +
                                  std::to_string(i));
    }
  }
  return p;
}

/// Result of conditioning a Gaussian prior on a linear-Gaussian measurement.
struct Conditioned {
  GaussianComponent posterior;
  double likelihood = 0.0;      // N(z; H mean, H P H' + R)
  double log_likelihood = -std::numeric_limits<double>::infinity();
};

/// Kalman update of a single component against z = H x + noise(R).
/// Throws if the innovation covariance is numerically singular.
inline Conditioned kalman_condition(const GaussianComponent& prior, const VecX& z,
                                    const MatX& H, const MatX& R) {
  const MatX pht = prior.cov * H.transpose();
  MatX s = H * pht + R;
  detail::symmetrize(s);
  const Eigen::LLT<MatX> llt(s);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("kalman_condition: innovation covariance singular");
  }
  const VecX z_pred = H * prior.mean;
  const VecX innov = z - z_pred;

  const VecX half = llt.matrixL().solve(innov);
  double log_det = 0.0;
  for (int i = 0; i < s.rows(); ++i) log_det += std::log(llt.matrixL()(i, i));
  log_det *= 2.0;
  const double d = static_cast<double>(z.size());
  const double ll =
      -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + half.squaredNorm());

  const MatX gain = llt.solve(pht.transpose()).transpose();  // P H' S^-1
  Conditioned out;
  out.posterior.weight = prior.weight;
  out.posterior.origin_tag = prior.origin_tag;
  out.posterior.mean = prior.mean + gain * innov;
  MatX cov = prior.cov - gain * s * gain.transpose();
  detail::symmetrize(cov);
  out.posterior.cov = std::move(cov);
  out.log_likelihood = ll;
  out.likelihood = std::exp(ll);
  return out;
}

/// Drops components with weight below `threshold` and renormalizes. If all
/// fall below, the heaviest one is kept so the density stays proper.
inline GaussianMixture prune(GaussianMixture mix, double threshold) {
  if (threshold < 0.0 || threshold >= 1.0) {
    throw std::invalid_argument("prune: threshold must be in [0, 1)");
  }
  if (mix.empty()) return mix;
  GaussianMixture out;
  for (auto& c : mix.components) {
    if (c.weight >= threshold) out.components.push_back(std::move(c));
  }
  if (out.empty()) {
    const auto it = std::max_element(
        mix.components.begin(), mix.components.end(),
        [](const auto& a, const auto& b) { return a.weight < b.weight; });
    out.components.push_back(std::move(*it));
  }
  const double mass = out.total_weight();
  for (auto& c : out.components) c.weight /= mass;
  return out;
}

/// Bhattacharyya distance between two components (weights ignored).
inline double bhattacharyya_distance(const GaussianComponent& a, const GaussianComponent& b) {
  MatX avg = 0.5 * (a.cov + b.cov);
  detail::symmetrize(avg);
  const Eigen::LLT<MatX> llt(avg);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("bhattacharyya_distance: average covariance singular");
  }
  const VecX d = detail::state_residual(a.mean, b.mean);
  const VecX half = llt.matrixL().solve(d);
  double log_det_avg = 0.0;
  for (int i = 0; i < avg.rows(); ++i) log_det_avg += std::log(llt.matrixL()(i, i));
  log_det_avg *= 2.0;

  auto log_det = [](const MatX& m) {
    const Eigen::LLT<MatX> c(m);
    if (c.info() != Eigen::Success) {
      throw std::runtime_error("bhattacharyya_distance: component covariance singular");
    }
    double ld = 0.0;
    for (int i = 0; i < m.rows(); ++i) ld += std::log(c.matrixL()(i, i));
    return 2.0 * ld;
  };
  return 0.125 * half.squaredNorm() +
         0.5 * (log_det_avg - 0.5 * (log_det(a.cov) + log_det(b.cov)));
}

namespace detail {

/// Moment-matches a set of components into one. Yaw is averaged on the
/// circle; the merged covariance gets a small eigenvalue floor.
inline GaussianComponent moment_match(const std::vector<const GaussianComponent*>& parts) {
  const int dim = static_cast<int>(parts.front()->mean.size());
  double w = 0.0;
  for (const auto* p : parts) w += p->weight;

  VecX mean = VecX::Zero(dim);
  double sin_sum = 0.0, cos_sum = 0.0;
  for (const auto* p : parts) {
    mean += p->weight * p->mean;
    if (is_box_dim(dim)) {
      sin_sum += p->weight * std::sin(p->mean[sv::Phi]);
      cos_sum += p->weight * std::cos(p->mean[sv::Phi]);
    }
  }
  mean /= w;
  if (is_box_dim(dim)) mean[sv::Phi] = std::atan2(sin_sum, cos_sum);

  MatX cov = MatX::Zero(dim, dim);
  for (const auto* p : parts) {
    const VecX d = state_residual(p->mean, mean);
    cov += p->weight * (p->cov + d * d.transpose());
  }
  cov /= w;
  floor_eigenvalues(cov, 1e-12);

  GaussianComponent out;
  out.weight = w;
  out.mean = std::move(mean);
  out.cov = std::move(cov);
  out.origin_tag = parts.front()->origin_tag;
  for (const auto* p : parts) {
    if (p->origin_tag != out.origin_tag) {
      out.origin_tag.reset();
      break;
    }
  }
  return out;
}

}  // namespace detail

/// Greedy pairwise merge: repeatedly clusters everything within
/// `max_distance` (Bhattacharyya) of the heaviest remaining component and
/// moment-matches the cluster. Passes repeat until no pair is mergeable, so
/// the operation is idempotent. Total weight is preserved. With
/// `isolate_hypotheses` only components carrying the same origin tag merge.
inline GaussianMixture merge(GaussianMixture mix, double max_distance,
                             bool isolate_hypotheses = false) {
  if (max_distance < 0.0) throw std::invalid_argument("merge: negative distance");
  if (mix.size() <= 1) return mix;

  bool changed = true;
  while (changed) {
    changed = false;
    const size_t count = mix.components.size();
    // Each slot holds a finished cluster keyed by its earliest constituent,
    // so component order survives the pass (a no-op pass is bitwise one).
    std::vector<std::optional<GaussianComponent>> slots(count);
    std::vector<bool> used(count, false);
    while (true) {
      int lead = -1;
      for (size_t i = 0; i < count; ++i) {
        if (used[i]) continue;
        if (lead < 0 || mix.components[i].weight > mix.components[lead].weight) {
          lead = static_cast<int>(i);
        }
      }
      if (lead < 0) break;
      used[lead] = true;
      size_t slot = static_cast<size_t>(lead);
      std::vector<const GaussianComponent*> cluster{&mix.components[lead]};
      for (size_t j = 0; j < count; ++j) {
        if (used[j]) continue;
        const auto& a = mix.components[lead];
        const auto& b = mix.components[j];
        if (isolate_hypotheses && a.origin_tag != b.origin_tag) continue;
        if (bhattacharyya_distance(a, b) <= max_distance) {
          cluster.push_back(&b);
          used[j] = true;
          slot = std::min(slot, j);
        }
      }
      if (cluster.size() == 1) {
        slots[slot] = mix.components[lead];
      } else {
        slots[slot] = detail::moment_match(cluster);
        changed = true;
      }
    }
    std::vector<GaussianComponent> next;
    next.reserve(count);
    for (auto& s : slots) {
      if (s) next.push_back(std::move(*s));
    }
    mix.components = std::move(next);
    if (mix.size() <= 1) break;
  }
  return mix;
}

/// Keeps the `max_components` heaviest components (ties broken by original
/// index, survivors kept in original order) and renormalizes.
inline GaussianMixture cap(GaussianMixture mix, int max_components) {
  if (max_components < 1) throw std::invalid_argument("cap: max_components must be >= 1");
  if (mix.size() <= max_components) return mix;

  std::vector<int> order(mix.components.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mix.components[a].weight > mix.components[b].weight;
  });
  order.resize(max_components);
  std::sort(order.begin(), order.end());

  GaussianMixture out;
  out.components.reserve(max_components);
  for (int i : order) out.components.push_back(std::move(mix.components[i]));
  const double mass = out.total_weight();
  for (auto& c : out.components) c.weight /= mass;
  return out;
}

}  // namespace lmbox
