#pragma once

#include "lmbox/assignment.hpp"
#include "lmbox/ctra.hpp"
#include "lmbox/measurement_models.hpp"
#include "lmbox/validation_gate.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lmbox {

/// Track label: birth time step plus an index within that step. Never
/// reused within a filter run.
struct TrackLabel {
  int birth_step = 0;
  int birth_index = 0;
  friend auto operator<=>(const TrackLabel&, const TrackLabel&) = default;
};

inline std::string to_string(const TrackLabel& l) {
  return std::to_string(l.birth_step) + "_" + std::to_string(l.birth_index);
}

/// Bernoulli track: existence probability r and a spatial Gaussian mixture
/// over center-anchored box states.
struct LabeledTrack {
  TrackLabel label;
  double r = 0.0;
  GaussianMixture mixture;
};

/// Detection characteristics of one sensor. The clutter process is Poisson,
/// uniform over the rectangular surveillance region.
struct SensorModel {
  int id = 0;
  Vec2 position = Vec2::Zero();
  double p_detect = 0.95;
  double clutter_rate = 0.1;
  std::array<double, 4> region{-30.0, 30.0, -10.0, 10.0};  // x min/max, y min/max
  FeatureMask feature_mask = kPositionMask;
  bool reports_ref_point = false;

  double region_area() const {
    return (region[1] - region[0]) * (region[3] - region[2]);
  }
  double clutter_density() const {
    const double area = region_area();
    if (area <= 0.0) throw std::invalid_argument("sensor region has non-positive area");
    return clutter_rate / area;
  }
};

struct Scan {
  SensorModel sensor;
  std::vector<Measurement> measurements;
};

/// Measurement-to-state association model used by the update.
enum class MeasModel { MaxLikelihood, MultiHypothesis, KnownRefPoint, GatedMultiHypothesis };

inline const char* to_string(MeasModel m) {
  switch (m) {
    case MeasModel::MaxLikelihood: return "MAX";
    case MeasModel::MultiHypothesis: return "MH";
    case MeasModel::KnownRefPoint: return "MEAS";
    case MeasModel::GatedMultiHypothesis: return "MHC";
  }
  return "?";
}

inline MeasModel meas_model_from_string(const std::string& s) {
  if (s == "MAX") return MeasModel::MaxLikelihood;
  if (s == "MH") return MeasModel::MultiHypothesis;
  if (s == "MEAS") return MeasModel::KnownRefPoint;
  if (s == "MHC") return MeasModel::GatedMultiHypothesis;
  throw std::invalid_argument("unknown measurement model '" + s + "'");
}

struct FilterParams {
  double p_survival = 0.99;
  ProcessNoise process_noise{};
  UtParams ut{};

  // Mixture reduction, applied as prune -> merge -> cap after each update.
  double prune_threshold = 1e-5;
  double merge_distance = 1.0;
  int max_components = 30;
  bool isolate_hypotheses = false;

  double gate_distance = 5.0;  // Mahalanobis pre-gate, in standard deviations
  double track_prune_r = 1e-3;
  double extract_r = 0.5;

  // Adaptive birth from poorly-explained measurements.
  double birth_rate = 0.1;
  double birth_r_max = 0.1;
  double birth_extent_w = 2.0;
  double birth_extent_l = 4.5;
  double birth_yaw_var = 0.08;
  double birth_yaw_rate_var = 0.04;
  double birth_speed_var = 25.0;
  double birth_accel_var = 1.0;
  double birth_extent_w_var = 0.25;
  double birth_extent_l_var = 1.0;

  HypothesisWeights hypothesis_weights = HypothesisWeights::uniform();
  ConstraintSet constraints{};  // only active in the gated model

  // Association maps are enumerated exhaustively while the group's feasible
  // pair count stays within budget, then ranked assignment takes over.
  int enumeration_budget = 12;
  int k_best = 100;
};

/// Survival-discounted CTRA prediction of every track.
inline std::vector<LabeledTrack> predict(std::vector<LabeledTrack> tracks, double dt,
                                         const FilterParams& p) {
  for (auto& t : tracks) {
    t.r *= p.p_survival;
    for (auto& c : t.mixture.components) {
      c = predict_component(c, dt, p.process_noise, p.ut);
    }
  }
  return tracks;
}

struct FeasibilityMatrix {
  int tracks = 0;
  int measurements = 0;
  std::vector<char> bits;

  bool at(int t, int m) const { return bits[static_cast<size_t>(t) * measurements + m] != 0; }
  void set(int t, int m) { bits[static_cast<size_t>(t) * measurements + m] = 1; }
};

/// Coarse Mahalanobis pre-gate: a pair is feasible when any component under
/// any active corner hypothesis puts the measurement within `gate_distance`
/// standard deviations.
inline FeasibilityMatrix gate_associations(const std::vector<LabeledTrack>& tracks,
                                           const std::vector<Measurement>& zs,
                                           double gate_distance) {
  FeasibilityMatrix feas;
  feas.tracks = static_cast<int>(tracks.size());
  feas.measurements = static_cast<int>(zs.size());
  feas.bits.assign(static_cast<size_t>(feas.tracks) * feas.measurements, 0);
  const double gate2 = gate_distance * gate_distance;

  for (int i = 0; i < feas.measurements; ++i) {
    const Measurement& z = zs[i];
    z.validate();
    const std::vector<RefPoint> alphabet = measurement_alphabet(z);
    const int yr = detail::yaw_row(z.feature_mask);
    for (int t = 0; t < feas.tracks; ++t) {
      bool hit = false;
      for (const auto& comp : tracks[t].mixture.components) {
        for (RefPoint zeta : alphabet) {
          const MatX h = build_transform(comp.mean[sv::Phi], zeta).rows(z.feature_mask);
          MatX s = h * comp.cov * h.transpose() + z.cov;
          detail::symmetrize(s);
          const Eigen::LLT<MatX> llt(s);
          if (llt.info() != Eigen::Success) continue;
          VecX innov = z.mean - h * comp.mean;
          if (yr >= 0) innov[yr] = wrap_angle(innov[yr]);
          const double d2 = llt.matrixL().solve(innov).squaredNorm();
          if (d2 <= gate2) {
            hit = true;
            break;
          }
        }
        if (hit) break;
      }
      if (hit) feas.set(t, i);
    }
  }
  return feas;
}

/// All injective association maps for one group. `feasible_per_track[k]`
/// holds the local measurement indices track k may take; every map entry is
/// such an index or -1 for missed. Throws once the group's feasible pair
/// count exceeds `max_pairs`; callers are expected to switch to the ranked
/// assignment fallback instead of enumerating.
inline std::vector<std::vector<int>> enumerate_association_maps(
    const std::vector<std::vector<int>>& feasible_per_track, int max_pairs = 64) {
  size_t pairs = 0;
  int max_meas = -1;
  for (const auto& f : feasible_per_track) {
    pairs += f.size();
    for (int i : f) max_meas = std::max(max_meas, i);
  }
  if (pairs > static_cast<size_t>(max_pairs)) {
    throw std::length_error(
        "association map enumeration over budget; use the ranked assignment fallback");
  }
  std::vector<std::vector<int>> maps;
  std::vector<int> current(feasible_per_track.size(), -1);
  std::vector<char> used(max_meas + 1, 0);
  auto recurse = [&](auto&& self, size_t k) -> void {
    if (k == feasible_per_track.size()) {
      maps.push_back(current);
      return;
    }
    current[k] = -1;
    self(self, k + 1);
    for (int i : feasible_per_track[k]) {
      if (used[i]) continue;
      used[i] = 1;
      current[k] = i;
      self(self, k + 1);
      current[k] = -1;
      used[i] = 0;
    }
  };
  recurse(recurse, 0);
  return maps;
}

struct UpdateOutput {
  std::vector<LabeledTrack> tracks;
  /// Per measurement: total posterior probability it was associated to an
  /// existing track. Drives adaptive birth.
  std::vector<double> association_mass;
};

namespace detail {

inline UpdateResult run_likelihood(const GaussianMixture& prior, const Measurement& z,
                                   MeasModel mode, const FilterParams& p) {
  switch (mode) {
    case MeasModel::MaxLikelihood:
      return likelihood_max(prior, z);
    case MeasModel::MultiHypothesis:
      return likelihood_mh(prior, z, p.hypothesis_weights);
    case MeasModel::KnownRefPoint:
      return likelihood_meas(prior, z);
    case MeasModel::GatedMultiHypothesis:
      return gate_mixture(likelihood_mh(prior, z, p.hypothesis_weights), p.constraints);
  }
  throw std::logic_error("unreachable");
}

/// Bernoulli miss: r' = r (1 - pD) / (1 - r pD), spatial density unchanged.
inline double missed_existence(double r, double p_detect) {
  const double denom = 1.0 - r * p_detect;
  if (denom < 1e-300) return 0.0;
  return r * (1.0 - p_detect) / denom;
}

}  // namespace detail

/// Single-sensor multi-object update. Tracks and measurements are split into
/// independent groups by the pre-gate; within each group every association
/// map is scored by the product of its per-track factors and the per-track
/// posteriors are the map-marginal mixtures. Output preserves track order.
inline UpdateOutput update(const std::vector<LabeledTrack>& tracks,
                           const std::vector<Measurement>& zs, const SensorModel& sensor,
                           MeasModel mode, const FilterParams& p) {
  UpdateOutput out;
  out.tracks = tracks;
  out.association_mass.assign(zs.size(), 0.0);
  const int T = static_cast<int>(tracks.size());
  const int M = static_cast<int>(zs.size());
  const double pd = sensor.p_detect;

  if (T == 0) return out;

  const FeasibilityMatrix feas = gate_associations(tracks, zs, p.gate_distance);

  // Connected components over the feasibility graph.
  std::vector<int> parent(T);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int i = 0; i < M; ++i) {
    int first = -1;
    for (int t = 0; t < T; ++t) {
      if (!feas.at(t, i)) continue;
      if (first < 0) {
        first = t;
      } else {
        parent[find(t)] = find(first);
      }
    }
  }

  struct Group {
    std::vector<int> track_idx;
    std::vector<int> meas_idx;
  };
  std::map<int, Group> groups;  // keyed by root track index: canonical order
  std::vector<char> track_has_meas(T, 0);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < M; ++i) {
      if (feas.at(t, i)) {
        track_has_meas[t] = 1;
        break;
      }
    }
    if (track_has_meas[t]) groups[find(t)].track_idx.push_back(t);
  }
  for (int i = 0; i < M; ++i) {
    for (int t = 0; t < T; ++t) {
      if (feas.at(t, i)) {
        groups[find(t)].meas_idx.push_back(i);
        break;
      }
    }
  }

  const double kappa = std::max(sensor.clutter_density(), 1e-12);
  const double log_kappa = std::log(kappa);
  const double log_pd = std::log(pd);

  // Tracks with no feasible measurement take the plain miss update.
  for (int t = 0; t < T; ++t) {
    if (!track_has_meas[t]) {
      out.tracks[t].r = detail::missed_existence(tracks[t].r, pd);
    }
  }

  for (auto& [root, g] : groups) {
    const int tg = static_cast<int>(g.track_idx.size());
    const int mg = static_cast<int>(g.meas_idx.size());

    // Conditioned posteriors for every feasible pair, local indexing.
    std::vector<std::vector<std::optional<UpdateResult>>> cond(
        tg, std::vector<std::optional<UpdateResult>>(mg));
    std::vector<std::vector<int>> feasible_local(tg);
    int pairs = 0;
    for (int k = 0; k < tg; ++k) {
      for (int li = 0; li < mg; ++li) {
        if (!feas.at(g.track_idx[k], g.meas_idx[li])) continue;
        cond[k][li] =
            detail::run_likelihood(tracks[g.track_idx[k]].mixture, zs[g.meas_idx[li]], mode, p);
        feasible_local[k].push_back(li);
        ++pairs;
      }
    }

    // Candidate association maps.
    std::vector<std::vector<int>> maps;
    if (pairs <= p.enumeration_budget) {
      maps = enumerate_association_maps(feasible_local, p.enumeration_budget);
    } else {
      MatX cost = MatX::Constant(tg, mg + tg, kForbiddenCost);
      for (int k = 0; k < tg; ++k) {
        const double r = tracks[g.track_idx[k]].r;
        for (int li : feasible_local[k]) {
          cost(k, li) = -(std::log(r) + log_pd + cond[k][li]->log_eta - log_kappa);
        }
        const double miss = 1.0 - r * pd;
        cost(k, mg + k) = miss > 0.0 ? -std::log(miss) : kForbiddenCost;
      }
      for (const Assignment& a : k_best_assignments(cost, p.k_best)) {
        std::vector<int> theta(tg, -1);
        for (int k = 0; k < tg; ++k) {
          if (a.row_to_col[k] < mg) theta[k] = a.row_to_col[k];
        }
        maps.push_back(std::move(theta));
      }
    }

    // Score maps in log space and normalize.
    std::vector<double> log_w(maps.size(), 0.0);
    for (size_t mi = 0; mi < maps.size(); ++mi) {
      double lw = 0.0;
      for (int k = 0; k < tg; ++k) {
        const double r = tracks[g.track_idx[k]].r;
        const int li = maps[mi][k];
        if (li < 0) {
          lw += std::log(std::max(1.0 - r * pd, 0.0));
        } else {
          lw += std::log(r) + log_pd + cond[k][li]->log_eta - log_kappa;
        }
      }
      log_w[mi] = lw;
    }
    const double lse = detail::log_sum_exp(log_w);
    std::vector<double> w(maps.size());
    if (std::isfinite(lse)) {
      for (size_t mi = 0; mi < maps.size(); ++mi) w[mi] = std::exp(log_w[mi] - lse);
    } else {
      std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(maps.size()));
    }

    // Per-track marginals over the maps.
    for (int k = 0; k < tg; ++k) {
      const int t = g.track_idx[k];
      const double r_prior = tracks[t].r;
      std::vector<double> meas_mass(mg, 0.0);
      double miss_mass = 0.0;
      for (size_t mi = 0; mi < maps.size(); ++mi) {
        const int li = maps[mi][k];
        if (li < 0) {
          miss_mass += w[mi];
        } else {
          meas_mass[li] += w[mi];
        }
      }
      const double rho_miss = detail::missed_existence(r_prior, pd);
      double r_new = miss_mass * rho_miss;
      for (int li = 0; li < mg; ++li) r_new += meas_mass[li];
      r_new = std::min(r_new, 1.0);

      GaussianMixture mixed;
      if (r_new > 0.0) {
        for (int li = 0; li < mg; ++li) {
          if (meas_mass[li] <= 0.0 || !cond[k][li]) continue;
          const double scale = meas_mass[li] / r_new;
          for (const auto& comp : cond[k][li]->posterior.components) {
            mixed.components.push_back(comp);
            mixed.components.back().weight *= scale;
          }
        }
        if (miss_mass * rho_miss > 0.0) {
          const double scale = miss_mass * rho_miss / r_new;
          for (const auto& comp : tracks[t].mixture.components) {
            mixed.components.push_back(comp);
            mixed.components.back().weight *= scale;
          }
        }
      }
      if (mixed.empty()) mixed = tracks[t].mixture;

      mixed = prune(std::move(mixed), p.prune_threshold);
      mixed = merge(std::move(mixed), p.merge_distance, p.isolate_hypotheses);
      mixed = cap(std::move(mixed), p.max_components);

      out.tracks[t].r = r_new;
      out.tracks[t].mixture = std::move(mixed);

      for (int li = 0; li < mg; ++li) {
        out.association_mass[g.meas_idx[li]] += meas_mass[li];
      }
    }
  }
  return out;
}

/// Applies the update once per scan, in ascending sensor id order.
inline std::vector<LabeledTrack> multi_sensor_step(std::vector<LabeledTrack> tracks,
                                                   std::vector<Scan> scans, MeasModel mode,
                                                   const FilterParams& p) {
  std::stable_sort(scans.begin(), scans.end(),
                   [](const Scan& a, const Scan& b) { return a.sensor.id < b.sensor.id; });
  for (const Scan& scan : scans) {
    tracks = update(tracks, scan.measurements, scan.sensor, mode, p).tracks;
  }
  return tracks;
}

/// Spawns Bernoulli birth tracks from measurements the update could not
/// explain. Each birth carries a 16-component mixture, centered so the
/// measured point sits on the hypothesized corner of a nominal-extent box.
/// An anonymous corner splits the budget as four corner hypotheses times
/// four candidate headings; a measurement that names its corner spends the
/// whole budget on sixteen headings instead, with the yaw variance matched
/// to the tighter spacing.
inline std::vector<LabeledTrack> adaptive_birth(const std::vector<Measurement>& zs,
                                                const std::vector<double>& association_mass,
                                                int birth_step, int& next_birth_index,
                                                const FilterParams& p) {
  if (zs.size() != association_mass.size()) {
    throw std::invalid_argument("adaptive_birth: measurement/mass size mismatch");
  }
  double total_unexplained = 0.0;
  for (double m : association_mass) total_unexplained += std::max(0.0, 1.0 - m);
  std::vector<LabeledTrack> births;
  if (total_unexplained <= 0.0) return births;

  const double w0 = p.birth_extent_w, l0 = p.birth_extent_l;
  const Mat2 extent_prior = Vec2(p.birth_extent_w_var, p.birth_extent_l_var).asDiagonal();

  for (size_t i = 0; i < zs.size(); ++i) {
    const double unexplained = std::max(0.0, 1.0 - association_mass[i]);
    const double r =
        std::min(p.birth_r_max, p.birth_rate * unexplained / total_unexplained);
    if (r < p.track_prune_r) continue;

    std::vector<RefPoint> corners(kCorners.begin(), kCorners.end());
    if (zs[i].ref_point) corners = {*zs[i].ref_point};
    const int headings = 16 / static_cast<int>(corners.size());
    const double spacing = 2.0 * std::numbers::pi / headings;
    const double yaw_var =
        corners.size() == 1 ? 0.25 * spacing * spacing : p.birth_yaw_var;

    const Vec2 z_pos = zs[i].mean.head<2>();
    LabeledTrack track;
    track.label = TrackLabel{birth_step, next_birth_index++};
    track.r = r;
    for (RefPoint zeta : corners) {
      for (int h = 0; h < headings; ++h) {
        const double heading = wrap_angle(h * spacing);
        GaussianComponent c;
        c.weight = 1.0 / 16.0;
        c.origin_tag = zeta;
        Vec8 mean = Vec8::Zero();
        mean.head<2>() = z_pos - corner_offset(heading, w0, l0, zeta);
        mean[sv::Phi] = heading;
        mean[sv::W] = w0;
        mean[sv::L] = l0;
        c.mean = mean;

        Mat8 cov = Mat8::Zero();
        const Mat2 f = corner_gain(heading, zeta);
        cov.block<2, 2>(0, 0) =
            zs[i].cov.topLeftCorner<2, 2>() + f * extent_prior * f.transpose();
        cov(sv::Phi, sv::Phi) = yaw_var;
        cov(sv::PhiDot, sv::PhiDot) = p.birth_yaw_rate_var;
        cov(sv::V, sv::V) = p.birth_speed_var;
        cov(sv::A, sv::A) = p.birth_accel_var;
        cov(sv::W, sv::W) = extent_prior(0, 0);
        cov(sv::L, sv::L) = extent_prior(1, 1);
        c.cov = cov;
        track.mixture.components.push_back(std::move(c));
      }
    }
    births.push_back(std::move(track));
  }
  return births;
}

struct Estimate {
  TrackLabel label;
  double r = 0.0;
  BoxState state;
};

/// Point estimates: tracks over the existence threshold report the mean of
/// their heaviest mixture component.
inline std::vector<Estimate> extract(const std::vector<LabeledTrack>& tracks,
                                     double r_threshold) {
  std::vector<Estimate> out;
  for (const auto& t : tracks) {
    if (t.r <= r_threshold || t.mixture.empty()) continue;
    const auto top = std::max_element(
        t.mixture.components.begin(), t.mixture.components.end(),
        [](const auto& a, const auto& b) { return a.weight < b.weight; });
    Estimate e;
    e.label = t.label;
    e.r = t.r;
    e.state.vec = top->mean;
    e.state.ref_point = RefPoint::C;
    out.push_back(std::move(e));
  }
  return out;
}

/// Drops tracks whose existence fell below r_min.
inline std::vector<LabeledTrack> prune_tracks(std::vector<LabeledTrack> tracks, double r_min) {
  std::erase_if(tracks, [r_min](const LabeledTrack& t) { return t.r < r_min; });
  return tracks;
}

/// Stateful convenience wrapper driving predict / update / birth / prune
/// over timestamped scans. Measurements lose their reference-point label
/// unless the filter runs the known-reference-point model, so one recorded
/// stream serves every model.
class LmbFilter {
 public:
  LmbFilter(FilterParams params, MeasModel mode) : params_(std::move(params)), mode_(mode) {}

  struct StepInfo {
    std::vector<double> update_seconds;        // per scan
    std::vector<double> components_per_track;  // per scan, post-update mean
  };

  StepInfo step(double timestamp, std::vector<Scan> scans) {
    if (started_ && timestamp < last_time_ - 1e-9) {
      throw std::invalid_argument("scan timestamps must be non-decreasing");
    }
    const double dt = started_ ? timestamp - last_time_ : 0.0;
    if (dt > 1e-9) tracks_ = predict(std::move(tracks_), dt, params_);
    last_time_ = timestamp;
    started_ = true;

    std::stable_sort(scans.begin(), scans.end(),
                     [](const Scan& a, const Scan& b) { return a.sensor.id < b.sensor.id; });
    StepInfo info;
    int birth_index = 0;
    for (Scan& scan : scans) {
      if (mode_ != MeasModel::KnownRefPoint) {
        for (auto& z : scan.measurements) z.ref_point.reset();
      }
      const auto t0 = std::chrono::steady_clock::now();
      UpdateOutput upd = update(tracks_, scan.measurements, scan.sensor, mode_, params_);
      const auto t1 = std::chrono::steady_clock::now();
      info.update_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());

      tracks_ = std::move(upd.tracks);
      if (!tracks_.empty()) {
        double comps = 0.0;
        for (const auto& t : tracks_) comps += t.mixture.size();
        info.components_per_track.push_back(comps / static_cast<double>(tracks_.size()));
      }

      std::vector<LabeledTrack> births = adaptive_birth(
          scan.measurements, upd.association_mass, step_count_, birth_index, params_);
      for (auto& b : births) tracks_.push_back(std::move(b));
    }
    tracks_ = prune_tracks(std::move(tracks_), params_.track_prune_r);
    ++step_count_;
    return info;
  }

  const std::vector<LabeledTrack>& tracks() const { return tracks_; }
  std::vector<Estimate> estimates() const { return extract(tracks_, params_.extract_r); }
  const FilterParams& params() const { return params_; }
  MeasModel mode() const { return mode_; }

 private:
  FilterParams params_;
  MeasModel mode_;
  std::vector<LabeledTrack> tracks_;
  double last_time_ = 0.0;
  bool started_ = false;
  int step_count_ = 0;
};

}  // namespace lmbox
