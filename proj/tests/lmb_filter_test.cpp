#include "lmbox/lmb_filter.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <vector>

namespace lmbox {
namespace {

double pdf2(const Vec2& x, const Vec2& m, const Mat2& S) {
  const Vec2 d = x - m;
  const double q = d.dot(S.inverse() * d);
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(S.determinant()));
}

LabeledTrack make_track(int idx, double r, const Vec8& mean, const Vec8& cov_diag) {
  LabeledTrack t;
  t.label = TrackLabel{0, idx};
  t.r = r;
  GaussianComponent c;
  c.weight = 1.0;
  c.mean = mean;
  c.cov = MatX(cov_diag.asDiagonal());
  t.mixture.components.push_back(std::move(c));
  return t;
}

Vec8 state_at(double x, double y) {
  Vec8 m = Vec8::Zero();
  m[sv::X] = x;
  m[sv::Y] = y;
  m[sv::W] = 2.0;
  m[sv::L] = 4.0;
  return m;
}

Vec8 loose_cov() {
  Vec8 d;
  d << 1.0, 1.0, 0.05, 0.01, 4.0, 1.0, 0.25, 0.5;
  return d;
}

Measurement center_meas(double x, double y, double rxx = 0.5, double ryy = 0.5) {
  Measurement z;
  z.mean = Vec2(x, y);
  z.cov = Mat2(Vec2(rxx, ryy).asDiagonal());
  z.feature_mask = kPositionMask;
  z.ref_point = RefPoint::C;
  return z;
}

SensorModel plain_sensor(double p_detect = 0.9, double clutter_rate = 0.1) {
  SensorModel s;
  s.p_detect = p_detect;
  s.clutter_rate = clutter_rate;
  return s;
}

// Kalman conditioning on a center-anchored position measurement, written out
// directly so the filter's marginals can be checked against it.
struct PairEval {
  double eta = 0.0;
  Vec8 mean = Vec8::Zero();
  Mat8 cov = Mat8::Zero();
};

PairEval kf_center(const GaussianComponent& prior, const Vec2& z, const Mat2& R) {
  Eigen::Matrix<double, 2, 8> H = Eigen::Matrix<double, 2, 8>::Zero();
  H(0, sv::X) = 1.0;
  H(1, sv::Y) = 1.0;
  const Mat2 S = H * prior.cov * H.transpose() + R;
  const Eigen::Matrix<double, 8, 2> K = prior.cov * H.transpose() * S.inverse();
  PairEval out;
  out.eta = pdf2(z, H * prior.mean, S);
  out.mean = prior.mean + K * (z - H * prior.mean);
  out.cov = prior.cov - K * S * K.transpose();
  return out;
}

TEST(EnumerateMaps, TwoTracksTwoMeasurementsGiveSevenMaps) {
  const std::vector<std::vector<int>> feasible{{0, 1}, {0, 1}};
  const auto maps = enumerate_association_maps(feasible);
  EXPECT_EQ(maps.size(), 7u);
  std::set<std::vector<int>> unique(maps.begin(), maps.end());
  EXPECT_EQ(unique.size(), maps.size());
  for (const auto& m : maps) {
    if (m[0] >= 0 && m[1] >= 0) EXPECT_NE(m[0], m[1]);
  }
}

TEST(EnumerateMaps, ThrowsOverBudget) {
  const std::vector<std::vector<int>> feasible{{0, 1}, {0, 1}};
  EXPECT_THROW(enumerate_association_maps(feasible, 3), std::length_error);
}

TEST(GateAssociations, NearMeasurementFeasibleFarOneNot) {
  const std::vector<LabeledTrack> tracks{make_track(0, 0.5, state_at(0, 0), loose_cov())};
  const std::vector<Measurement> zs{center_meas(1.0, 0.0), center_meas(50.0, 0.0)};
  const FeasibilityMatrix feas = gate_associations(tracks, zs, 5.0);
  EXPECT_EQ(feas.tracks, 1);
  EXPECT_EQ(feas.measurements, 2);
  EXPECT_TRUE(feas.at(0, 0));
  EXPECT_FALSE(feas.at(0, 1));
}

// Single track, single measurement: the posterior existence odds against
// non-existence must be the prior odds times pD eta / kappa + (1 - pD),
// independent of how the update is factored internally.
TEST(LmbUpdate, ExistenceOddsMatchClosedForm) {
  const FilterParams params;
  const SensorModel sensor = plain_sensor(0.85, 0.2);
  const std::vector<LabeledTrack> tracks{make_track(0, 0.37, state_at(2, -1), loose_cov())};
  const std::vector<Measurement> zs{center_meas(2.4, -0.7)};

  const auto out = update(tracks, zs, sensor, MeasModel::KnownRefPoint, params);
  ASSERT_EQ(out.tracks.size(), 1u);

  const auto& prior = tracks[0].mixture.components[0];
  const double eta = kf_center(prior, zs[0].mean.head<2>(), Mat2(zs[0].cov)).eta;
  const double factor = sensor.p_detect * eta / sensor.clutter_density() + (1.0 - sensor.p_detect);
  const double odds = tracks[0].r / (1.0 - tracks[0].r) * factor;
  EXPECT_NEAR(out.tracks[0].r, odds / (1.0 + odds), 1e-12);
}

// Full brute force over the seven association maps of a two-track,
// two-measurement group. Checks map weights, existence marginals, mixture
// assembly, and the per-measurement association mass.
TEST(LmbUpdate, TwoTracksTwoMeasurementsMatchBruteForceMarginals) {
  FilterParams params;
  params.gate_distance = 30.0;  // force a single group
  params.prune_threshold = 0.0;
  params.merge_distance = 0.0;

  const SensorModel sensor = plain_sensor(0.9, 0.1);
  const double kappa = sensor.clutter_density();
  const std::vector<LabeledTrack> tracks{
      make_track(0, 0.6, state_at(0, 0), loose_cov()),
      make_track(1, 0.4, state_at(10, 0), loose_cov()),
  };
  const std::vector<Measurement> zs{center_meas(0.5, 0.0), center_meas(9.5, 0.3)};

  // Independent evaluation of every track/measurement pair.
  PairEval pair[2][2];
  for (int t = 0; t < 2; ++t) {
    for (int i = 0; i < 2; ++i) {
      pair[t][i] =
          kf_center(tracks[t].mixture.components[0], zs[i].mean.head<2>(), Mat2(zs[i].cov));
    }
  }

  // theta[k] is the measurement index taken by track k, -1 for missed.
  const std::vector<std::array<int, 2>> thetas{
      {-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 0}};
  std::vector<double> w;
  for (const auto& theta : thetas) {
    double weight = 1.0;
    for (int t = 0; t < 2; ++t) {
      const double r = tracks[t].r;
      weight *= theta[t] < 0 ? 1.0 - r * sensor.p_detect
                             : r * sensor.p_detect * pair[t][theta[t]].eta / kappa;
    }
    w.push_back(weight);
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;

  const auto out = update(tracks, zs, sensor, MeasModel::KnownRefPoint, params);
  ASSERT_EQ(out.tracks.size(), 2u);

  for (int t = 0; t < 2; ++t) {
    double mass[2] = {0.0, 0.0};
    double miss = 0.0;
    for (size_t mi = 0; mi < thetas.size(); ++mi) {
      if (thetas[mi][t] < 0) {
        miss += w[mi];
      } else {
        mass[thetas[mi][t]] += w[mi];
      }
    }
    const double r = tracks[t].r;
    const double rho = r * (1.0 - sensor.p_detect) / (1.0 - r * sensor.p_detect);
    const double r_post = mass[0] + mass[1] + miss * rho;
    EXPECT_NEAR(out.tracks[t].r, r_post, 1e-12);

    // Mixture: posterior for z0, posterior for z1, then the prior carried by
    // the missed hypothesis, in assembly order.
    const auto& mix = out.tracks[t].mixture;
    ASSERT_EQ(mix.size(), 3);
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(mix.components[i].weight, mass[i] / r_post, 1e-12);
      EXPECT_LT((mix.components[i].mean - pair[t][i].mean).norm(), 1e-9);
      EXPECT_LT((mix.components[i].cov - pair[t][i].cov).norm(), 1e-8);
    }
    EXPECT_NEAR(mix.components[2].weight, miss * rho / r_post, 1e-12);
    EXPECT_LT((mix.components[2].mean - tracks[t].mixture.components[0].mean).norm(), 1e-12);
    EXPECT_NEAR(mix.total_weight(), 1.0, 1e-12);
  }

  for (int i = 0; i < 2; ++i) {
    double expect_mass = 0.0;
    for (size_t mi = 0; mi < thetas.size(); ++mi) {
      for (int t = 0; t < 2; ++t) {
        if (thetas[mi][t] == i) expect_mass += w[mi];
      }
    }
    EXPECT_NEAR(out.association_mass[i], expect_mass, 1e-12);
    EXPECT_LE(out.association_mass[i], 1.0 + 1e-12);
  }
}

// Forcing the ranked-assignment fallback onto a small group must reproduce
// the exhaustive enumeration, because the candidate map set is identical.
TEST(LmbUpdate, RankedAssignmentFallbackMatchesEnumeration) {
  FilterParams base;
  base.gate_distance = 30.0;
  base.prune_threshold = 0.0;
  base.merge_distance = 0.0;

  FilterParams ranked = base;
  ranked.enumeration_budget = 1;  // group has four feasible pairs
  ranked.k_best = 50;             // more than the seven feasible maps

  const SensorModel sensor = plain_sensor(0.9, 0.1);
  const std::vector<LabeledTrack> tracks{
      make_track(0, 0.6, state_at(0, 0), loose_cov()),
      make_track(1, 0.4, state_at(10, 0), loose_cov()),
  };
  const std::vector<Measurement> zs{center_meas(0.5, 0.0), center_meas(9.5, 0.3)};

  const auto a = update(tracks, zs, sensor, MeasModel::KnownRefPoint, base);
  const auto b = update(tracks, zs, sensor, MeasModel::KnownRefPoint, ranked);

  ASSERT_EQ(a.tracks.size(), b.tracks.size());
  for (size_t t = 0; t < a.tracks.size(); ++t) {
    EXPECT_NEAR(a.tracks[t].r, b.tracks[t].r, 1e-9);
    ASSERT_EQ(a.tracks[t].mixture.size(), b.tracks[t].mixture.size());
    for (int c = 0; c < a.tracks[t].mixture.size(); ++c) {
      EXPECT_NEAR(a.tracks[t].mixture.components[c].weight,
                  b.tracks[t].mixture.components[c].weight, 1e-9);
      EXPECT_LT((a.tracks[t].mixture.components[c].mean -
                 b.tracks[t].mixture.components[c].mean)
                    .norm(),
                1e-9);
    }
  }
  for (size_t i = 0; i < zs.size(); ++i) {
    EXPECT_NEAR(a.association_mass[i], b.association_mass[i], 1e-9);
  }
}

TEST(LmbUpdate, PerfectDetectionAndTinyClutterConfirmTrack) {
  FilterParams params;
  SensorModel sensor = plain_sensor(1.0, 1e-9);
  const std::vector<LabeledTrack> tracks{make_track(0, 0.3, state_at(0, 0), loose_cov())};
  const std::vector<Measurement> zs{center_meas(0.2, 0.1)};
  const auto out = update(tracks, zs, sensor, MeasModel::KnownRefPoint, params);
  EXPECT_GT(out.tracks[0].r, 0.999);
  EXPECT_LE(out.tracks[0].r, 1.0);
}

TEST(LmbUpdate, MissedScanShrinksExistenceByBernoulliRule) {
  const FilterParams params;
  const SensorModel sensor = plain_sensor(0.8, 0.1);
  const double r0 = 0.7;
  const std::vector<LabeledTrack> tracks{make_track(0, r0, state_at(0, 0), loose_cov())};
  const auto out = update(tracks, {}, sensor, MeasModel::MultiHypothesis, params);
  EXPECT_NEAR(out.tracks[0].r, r0 * (1.0 - 0.8) / (1.0 - r0 * 0.8), 1e-14);
  EXPECT_EQ(out.tracks[0].mixture.size(), tracks[0].mixture.size());
}

TEST(LmbUpdate, PreservesTrackOrderAndLabels) {
  const FilterParams params;
  const SensorModel sensor = plain_sensor();
  std::vector<LabeledTrack> tracks{
      make_track(7, 0.5, state_at(20, 5), loose_cov()),
      make_track(3, 0.5, state_at(-20, -5), loose_cov()),
  };
  const std::vector<Measurement> zs{center_meas(-19.6, -5.2), center_meas(20.4, 5.1)};
  const auto out = update(tracks, zs, sensor, MeasModel::MultiHypothesis, params);
  ASSERT_EQ(out.tracks.size(), 2u);
  EXPECT_EQ(out.tracks[0].label.birth_index, 7);
  EXPECT_EQ(out.tracks[1].label.birth_index, 3);
}

// Sensors looking at well-separated tracks: existence updates commute
// exactly (each sensor multiplies the existence odds by its own factor) and
// the conditioned component moments are identical; only the mixture weights
// may differ at the level of the sequential approximation.
TEST(LmbUpdate, DisjointSensorsCommute) {
  FilterParams params;
  params.prune_threshold = 0.0;
  params.merge_distance = 0.0;

  SensorModel s1 = plain_sensor(0.9, 0.1);
  s1.id = 1;
  SensorModel s2 = plain_sensor(0.8, 0.05);
  s2.id = 2;
  const std::vector<LabeledTrack> tracks{
      make_track(0, 0.6, state_at(0, 0), loose_cov()),
      make_track(1, 0.5, state_at(100, 0), loose_cov()),
  };
  const std::vector<Measurement> za{center_meas(0.4, 0.1)};
  const std::vector<Measurement> zb{center_meas(100.3, -0.2)};

  const auto ab =
      update(update(tracks, za, s1, MeasModel::KnownRefPoint, params).tracks, zb, s2,
             MeasModel::KnownRefPoint, params);
  const auto ba =
      update(update(tracks, zb, s2, MeasModel::KnownRefPoint, params).tracks, za, s1,
             MeasModel::KnownRefPoint, params);

  for (int t = 0; t < 2; ++t) {
    EXPECT_NEAR(ab.tracks[t].r, ba.tracks[t].r, 1e-12);
    ASSERT_EQ(ab.tracks[t].mixture.size(), ba.tracks[t].mixture.size());
    for (int c = 0; c < ab.tracks[t].mixture.size(); ++c) {
      EXPECT_LT((ab.tracks[t].mixture.components[c].mean -
                 ba.tracks[t].mixture.components[c].mean)
                    .norm(),
                1e-9);
      EXPECT_NEAR(ab.tracks[t].mixture.components[c].weight,
                  ba.tracks[t].mixture.components[c].weight, 1e-4);
    }
  }
}

TEST(Predict, ScalesExistenceAndAdvancesAlongTrackHeading) {
  FilterParams params;
  params.p_survival = 0.99;
  Vec8 mean = state_at(0, 0);
  mean[sv::V] = 5.0;
  // Yaw-certain prior: with heading uncertainty the unscented mean would
  // legitimately contract below v * dt.
  Vec8 cov_diag = loose_cov();
  cov_diag[sv::Phi] = 1e-12;
  cov_diag[sv::PhiDot] = 1e-12;
  std::vector<LabeledTrack> tracks{make_track(0, 0.8, mean, cov_diag)};
  const auto out = predict(std::move(tracks), 0.1, params);
  EXPECT_NEAR(out[0].r, 0.8 * 0.99, 1e-14);
  EXPECT_NEAR(out[0].mixture.components[0].mean[sv::X], 0.5, 1e-6);
  EXPECT_NEAR(out[0].mixture.components[0].mean[sv::Y], 0.0, 1e-6);
}

TEST(AdaptiveBirth, SingleUnexplainedMeasurementSpawnsSixteenComponentTrack) {
  FilterParams params;
  params.birth_rate = 0.3;
  params.birth_r_max = 0.1;
  const std::vector<Measurement> zs{center_meas(3.0, -2.0)};
  int next_index = 0;
  const auto births = adaptive_birth(zs, {0.0}, 5, next_index, params);
  ASSERT_EQ(births.size(), 1u);
  EXPECT_EQ(next_index, 1);
  EXPECT_EQ(births[0].label.birth_step, 5);
  EXPECT_EQ(births[0].label.birth_index, 0);
  EXPECT_NEAR(births[0].r, 0.1, 1e-15);  // capped below 0.3
  ASSERT_EQ(births[0].mixture.size(), 16);
  EXPECT_NEAR(births[0].mixture.total_weight(), 1.0, 1e-12);

  // Every component puts the measured point on its hypothesized corner.
  for (const auto& c : births[0].mixture.components) {
    ASSERT_TRUE(c.origin_tag.has_value());
    const Vec2 corner = c.mean.head<2>() +
                        corner_offset(c.mean[sv::Phi], c.mean[sv::W], c.mean[sv::L],
                                      *c.origin_tag);
    EXPECT_LT((corner - Vec2(3.0, -2.0)).norm(), 1e-12);
    EXPECT_NEAR(c.mean[sv::W], params.birth_extent_w, 1e-15);
    EXPECT_NEAR(c.mean[sv::L], params.birth_extent_l, 1e-15);
    Eigen::SelfAdjointEigenSolver<MatX> es(c.cov);
    EXPECT_GE(es.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(AdaptiveBirth, TaggedMeasurementSpendsBudgetOnHeadings) {
  FilterParams params;
  Measurement z = center_meas(3.0, -2.0);
  z.ref_point = RefPoint::BL;
  int next_index = 0;
  const auto births = adaptive_birth({z}, {0.0}, 0, next_index, params);
  ASSERT_EQ(births.size(), 1u);
  ASSERT_EQ(births[0].mixture.size(), 16);

  // The named corner is pinned, so the budget covers sixteen headings at
  // pi/8 spacing with yaw variance matched to that spacing.
  std::set<int> heading_bins;
  const double spacing = std::numbers::pi / 8.0;
  for (const auto& c : births[0].mixture.components) {
    ASSERT_TRUE(c.origin_tag.has_value());
    EXPECT_EQ(*c.origin_tag, RefPoint::BL);
    const double h = wrap_angle(c.mean[sv::Phi]);
    const int bin = static_cast<int>(std::lround(h / spacing));
    heading_bins.insert(((bin % 16) + 16) % 16);
    EXPECT_NEAR(c.mean[sv::Phi], wrap_angle(bin * spacing), 1e-12);
    EXPECT_NEAR(c.cov(sv::Phi, sv::Phi), 0.25 * spacing * spacing, 1e-15);
    const Vec2 corner = c.mean.head<2>() +
                        corner_offset(c.mean[sv::Phi], c.mean[sv::W], c.mean[sv::L],
                                      RefPoint::BL);
    EXPECT_LT((corner - Vec2(3.0, -2.0)).norm(), 1e-12);
  }
  EXPECT_EQ(heading_bins.size(), 16u);
}

TEST(AdaptiveBirth, SplitsRateAcrossUnexplainedMass) {
  FilterParams params;
  params.birth_rate = 0.1;
  params.birth_r_max = 0.5;
  const std::vector<Measurement> zs{center_meas(0, 0), center_meas(10, 0)};
  int next_index = 0;
  const auto births = adaptive_birth(zs, {0.0, 0.5}, 0, next_index, params);
  ASSERT_EQ(births.size(), 2u);
  // Unexplained masses 1.0 and 0.5, so the rate splits 2:1.
  EXPECT_NEAR(births[0].r, 0.1 * 1.0 / 1.5, 1e-14);
  EXPECT_NEAR(births[1].r, 0.1 * 0.5 / 1.5, 1e-14);
  EXPECT_NE(births[0].label.birth_index, births[1].label.birth_index);
}

TEST(AdaptiveBirth, FullyExplainedMeasurementSpawnsNothing) {
  FilterParams params;
  int next_index = 0;
  EXPECT_TRUE(adaptive_birth({center_meas(0, 0)}, {1.0}, 0, next_index, params).empty());
  EXPECT_EQ(next_index, 0);
}

TEST(AdaptiveBirth, RejectsMassSizeMismatch) {
  FilterParams params;
  int next_index = 0;
  EXPECT_THROW(adaptive_birth({center_meas(0, 0)}, {0.0, 0.0}, 0, next_index, params),
               std::invalid_argument);
}

TEST(ExtractAndPrune, ThresholdsOnExistence) {
  std::vector<LabeledTrack> tracks{
      make_track(0, 0.9, state_at(1, 2), loose_cov()),
      make_track(1, 0.2, state_at(5, 5), loose_cov()),
      make_track(2, 5e-4, state_at(-5, -5), loose_cov()),
  };
  tracks[0].mixture.components.push_back(tracks[0].mixture.components[0]);
  tracks[0].mixture.components[0].weight = 0.7;
  tracks[0].mixture.components[1].weight = 0.3;
  tracks[0].mixture.components[1].mean[sv::X] = 99.0;

  const auto est = extract(tracks, 0.5);
  ASSERT_EQ(est.size(), 1u);
  EXPECT_EQ(est[0].label.birth_index, 0);
  EXPECT_NEAR(est[0].r, 0.9, 1e-15);
  EXPECT_NEAR(est[0].state.x(), 1.0, 1e-15);  // heaviest component wins
  EXPECT_EQ(est[0].state.ref_point, RefPoint::C);

  const auto kept = prune_tracks(std::move(tracks), 1e-3);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].label.birth_index, 0);
  EXPECT_EQ(kept[1].label.birth_index, 1);
}

TEST(MeasModelNames, RoundTrip) {
  for (MeasModel m : {MeasModel::MaxLikelihood, MeasModel::MultiHypothesis,
                      MeasModel::KnownRefPoint, MeasModel::GatedMultiHypothesis}) {
    EXPECT_EQ(meas_model_from_string(to_string(m)), m);
  }
  EXPECT_THROW(meas_model_from_string("BOGUS"), std::invalid_argument);
}

TEST(LmbFilterClass, BirthsConfirmAndConvergeOnRepeatedDetections) {
  FilterParams params;
  params.birth_rate = 0.3;
  LmbFilter filter(params, MeasModel::KnownRefPoint);

  SensorModel sensor = plain_sensor(0.95, 0.1);
  sensor.id = 0;
  for (int k = 0; k < 5; ++k) {
    Scan scan;
    scan.sensor = sensor;
    scan.measurements = {center_meas(4.0, 1.0, 0.25, 0.25)};
    filter.step(0.1 * k, {scan});
  }
  const auto est = filter.estimates();
  ASSERT_EQ(est.size(), 1u);
  EXPECT_GT(est[0].r, 0.95);
  EXPECT_LT((Vec2(est[0].state.x(), est[0].state.y()) - Vec2(4.0, 1.0)).norm(), 1.0);
}

TEST(LmbFilterClass, LabelsStayUniqueAcrossBirthSteps) {
  FilterParams params;
  params.track_prune_r = 1e-6;
  LmbFilter filter(params, MeasModel::MultiHypothesis);
  SensorModel sensor = plain_sensor(0.9, 0.1);
  for (int k = 0; k < 4; ++k) {
    Scan scan;
    scan.sensor = sensor;
    scan.measurements = {center_meas(-20.0 + k, 0.0), center_meas(20.0 - k, 3.0)};
    filter.step(0.1 * k, {scan});
  }
  std::set<std::pair<int, int>> labels;
  for (const auto& t : filter.tracks()) {
    labels.insert({t.label.birth_step, t.label.birth_index});
  }
  EXPECT_EQ(labels.size(), filter.tracks().size());
  EXPECT_GE(labels.size(), 2u);
}

TEST(LmbFilterClass, StripsReportedRefPointOutsideKnownRefPointModel) {
  FilterParams params;
  SensorModel sensor = plain_sensor(0.95, 0.01);

  auto run = [&](bool tag_measurements) {
    LmbFilter filter(params, MeasModel::MultiHypothesis);
    for (int k = 0; k < 3; ++k) {
      Measurement z = center_meas(4.0, 1.0);
      if (tag_measurements) {
        z.ref_point = RefPoint::FL;
      } else {
        z.ref_point.reset();
      }
      Scan scan;
      scan.sensor = sensor;
      scan.measurements = {z};
      filter.step(0.1 * k, {scan});
    }
    return filter.tracks();
  };

  const auto tagged = run(true);
  const auto untagged = run(false);
  ASSERT_EQ(tagged.size(), untagged.size());
  for (size_t i = 0; i < tagged.size(); ++i) {
    EXPECT_DOUBLE_EQ(tagged[i].r, untagged[i].r);
  }
}

TEST(LmbFilterClass, RejectsTimeGoingBackwards) {
  LmbFilter filter(FilterParams{}, MeasModel::MultiHypothesis);
  filter.step(0.0, {});
  filter.step(0.5, {});
  EXPECT_THROW(filter.step(0.4, {}), std::invalid_argument);
}

}  // namespace
}  // namespace lmbox
