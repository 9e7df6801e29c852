#pragma once

#include "lmbox/assignment.hpp"
#include "lmbox/lmb_filter.hpp"

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

namespace lmbox {

/// OSPA-for-tracks parameters: order p, cutoff c, and the penalty added to
/// the base distance when an object is covered by a different label than the
/// one it carried before.
struct OspatParams {
  double order = 1.0;
  double cutoff = 10.0;
  double label_penalty = 10.0;

  void validate() const {
    if (order < 1.0) throw std::invalid_argument("ospat: order must be >= 1");
    if (cutoff <= 0.0) throw std::invalid_argument("ospat: cutoff must be positive");
    if (label_penalty < 0.0 || label_penalty > cutoff) {
      throw std::invalid_argument("ospat: label penalty must lie in [0, cutoff]");
    }
  }
};

struct TruthPoint {
  int id = 0;
  Vec2 position = Vec2::Zero();
};

struct EstimatePoint {
  TrackLabel label;
  Vec2 position = Vec2::Zero();
};

/// Cross-frame bookkeeping: which estimate label currently covers each truth
/// object, how often that changed, and which objects were ever covered.
struct OspatState {
  std::map<int, TrackLabel> correspondence;
  std::map<int, int> switches;
  std::set<int> matched_ever;
  std::set<int> seen;
};

struct FrameScore {
  double ospat = 0.0;
  int truth_count = 0;
  int estimate_count = 0;
  int cardinality_error = 0;
};

/// One frame of the OSPAT metric. The label penalty is folded into the base
/// distance (capped at the cutoff) using the correspondence fixed by earlier
/// frames; afterwards the correspondence is greedily updated from this
/// frame's valid matches and label changes are counted as switches. Passing
/// no state scores pure OSPA on positions.
inline FrameScore ospat_frame(const std::vector<TruthPoint>& truth,
                              const std::vector<EstimatePoint>& est, const OspatParams& params,
                              OspatState* state = nullptr) {
  params.validate();
  FrameScore score;
  score.truth_count = static_cast<int>(truth.size());
  score.estimate_count = static_cast<int>(est.size());
  score.cardinality_error = std::abs(score.truth_count - score.estimate_count);
  if (state) {
    for (const auto& t : truth) state->seen.insert(t.id);
  }
  if (truth.empty() && est.empty()) return score;

  const double c = params.cutoff;
  const double p = params.order;
  const int n_max = std::max(score.truth_count, score.estimate_count);

  if (truth.empty() || est.empty()) {
    score.ospat = c;
    return score;
  }

  auto base_distance = [&](const TruthPoint& t, const EstimatePoint& e) {
    double d = (t.position - e.position).norm();
    if (state) {
      const auto it = state->correspondence.find(t.id);
      if (it != state->correspondence.end() && !(it->second == e.label)) {
        d += params.label_penalty;
      }
    }
    return std::min(c, d);
  };

  // Optimal assignment of the smaller side against the larger.
  const bool truth_rows = truth.size() <= est.size();
  const int rows = truth_rows ? score.truth_count : score.estimate_count;
  const int cols = truth_rows ? score.estimate_count : score.truth_count;
  MatX cost(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const TruthPoint& t = truth[truth_rows ? i : j];
      const EstimatePoint& e = est[truth_rows ? j : i];
      cost(i, j) = std::pow(base_distance(t, e), p);
    }
  }
  const std::vector<int> row_to_col = solve_assignment(cost);

  double total = std::pow(c, p) * score.cardinality_error;
  for (int i = 0; i < rows; ++i) {
    total += cost(i, row_to_col[i]);
  }
  score.ospat = std::pow(total / n_max, 1.0 / p);

  if (state) {
    for (int i = 0; i < rows; ++i) {
      const TruthPoint& t = truth[truth_rows ? i : row_to_col[i]];
      const EstimatePoint& e = est[truth_rows ? row_to_col[i] : i];
      if ((t.position - e.position).norm() >= c) continue;  // not a valid match
      const auto it = state->correspondence.find(t.id);
      if (it == state->correspondence.end()) {
        state->correspondence.emplace(t.id, e.label);
      } else if (!(it->second == e.label)) {
        state->switches[t.id] += 1;
        it->second = e.label;
      }
      state->matched_ever.insert(t.id);
    }
  }
  return score;
}

/// Number of truth objects covered by two or more distinct labels.
inline int continuity_count(const OspatState& state) {
  int count = 0;
  for (const auto& [id, switches] : state.switches) {
    if (switches >= 1) ++count;
  }
  return count;
}

/// Number of truth objects never covered by any estimate.
inline int missed_count(const OspatState& state) {
  int count = 0;
  for (int id : state.seen) {
    if (!state.matched_ever.count(id)) ++count;
  }
  return count;
}

/// Everything one Monte Carlo run produces for the method comparison.
struct RunStats {
  std::vector<double> ospat;
  std::vector<int> cardinality_error;
  std::vector<double> update_seconds;      // one entry per sensor update
  std::vector<double> components_per_track;  // post-update means
  int non_continuous = 0;
  int missed = 0;

  double mean_ospat() const {
    if (ospat.empty()) return 0.0;
    double s = 0.0;
    for (double x : ospat) s += x;
    return s / static_cast<double>(ospat.size());
  }
  double mean_cardinality_error() const {
    if (cardinality_error.empty()) return 0.0;
    double s = 0.0;
    for (int x : cardinality_error) s += x;
    return s / static_cast<double>(cardinality_error.size());
  }
};

}  // namespace lmbox
