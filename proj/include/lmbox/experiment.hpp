#pragma once

#include "lmbox/log_io.hpp"
#include "lmbox/metrics.hpp"
#include "lmbox/simulation.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lmbox {

/// One full method comparison: every method runs against every noise level,
/// each with the same `trials` Monte Carlo measurement streams.
struct ExperimentConfig {
  ScenarioConfig scenario = default_scenario();
  std::vector<MeasModel> methods{MeasModel::KnownRefPoint, MeasModel::MultiHypothesis,
                                 MeasModel::MaxLikelihood, MeasModel::GatedMultiHypothesis};
  std::vector<double> sigmas{0.5, 1.0, 1.5, 2.0};
  int trials = 25;
  FilterParams filter{};
  OspatParams ospat{};
  std::string out_dir = "out";
  int jobs = 1;

  void validate() const {
    scenario.validate();
    ospat.validate();
    if (methods.empty()) throw std::invalid_argument("experiment: no methods selected");
    if (sigmas.empty()) throw std::invalid_argument("experiment: no sigmas selected");
    for (double s : sigmas) {
      if (s <= 0.0) throw std::invalid_argument("experiment: sigma must be positive");
    }
    if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
    if (jobs < 1) throw std::invalid_argument("experiment: jobs must be >= 1");
  }
};

namespace detail {

/// Fields present in `j` override the given defaults; everything else keeps
/// its current value so configs only spell out what they change.
inline void scenario_from_json(const nlohmann::json& j, ScenarioConfig& cfg) {
  if (j.contains("preset")) {
    const std::string preset = j.at("preset").get<std::string>();
    if (preset == "default") {
      cfg = default_scenario();
    } else if (preset == "fig2") {
      cfg = fig2_scenario();
    } else {
      throw std::invalid_argument("scenario.preset: unknown preset '" + preset + "'");
    }
  }
  if (j.contains("duration")) cfg.duration = j.at("duration").get<double>();
  if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
  if (j.contains("sigma")) cfg.sigma = j.at("sigma").get<double>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  if (j.contains("mc_trials")) cfg.mc_trials = j.at("mc_trials").get<int>();
  if (j.contains("measured_corner")) {
    const auto& mc = j.at("measured_corner");
    cfg.measured_corner =
        mc.is_null() ? std::nullopt
                     : std::optional<RefPoint>(ref_point_from_string(mc.get<std::string>()));
  }
  if (j.contains("vehicles")) {
    cfg.vehicles.clear();
    for (const auto& vj : j.at("vehicles")) {
      VehicleScript v;
      const auto& init = vj.at("initial");
      if (init.size() != sv::Dim) {
        throw std::invalid_argument("scenario.vehicles: initial state needs 8 entries");
      }
      for (int i = 0; i < sv::Dim; ++i) v.initial.vec[i] = init.at(i).get<double>();
      v.initial.ref_point = RefPoint::C;
      for (const auto& mj : vj.value("maneuvers", nlohmann::json::array())) {
        ManeuverSegment seg;
        seg.duration = mj.at("duration").get<double>();
        seg.accel = mj.value("accel", 0.0);
        seg.turn_rate = mj.value("turn_rate", 0.0);
        v.maneuvers.push_back(seg);
      }
      cfg.vehicles.push_back(std::move(v));
    }
  }
  if (j.contains("sensors")) {
    cfg.sensors.clear();
    for (const auto& sj : j.at("sensors")) cfg.sensors.push_back(detail::sensor_from_json(sj));
  }
}

inline void filter_from_json(const nlohmann::json& j, FilterParams& p) {
  if (j.contains("p_survival")) p.p_survival = j.at("p_survival").get<double>();
  if (j.contains("prune_threshold")) p.prune_threshold = j.at("prune_threshold").get<double>();
  if (j.contains("merge_distance")) p.merge_distance = j.at("merge_distance").get<double>();
  if (j.contains("max_components")) p.max_components = j.at("max_components").get<int>();
  if (j.contains("isolate_hypotheses")) {
    p.isolate_hypotheses = j.at("isolate_hypotheses").get<bool>();
  }
  if (j.contains("gate_distance")) p.gate_distance = j.at("gate_distance").get<double>();
  if (j.contains("track_prune_r")) p.track_prune_r = j.at("track_prune_r").get<double>();
  if (j.contains("extract_r")) p.extract_r = j.at("extract_r").get<double>();
  if (j.contains("birth_rate")) p.birth_rate = j.at("birth_rate").get<double>();
  if (j.contains("birth_r_max")) p.birth_r_max = j.at("birth_r_max").get<double>();
  if (j.contains("birth_extent_w")) p.birth_extent_w = j.at("birth_extent_w").get<double>();
  if (j.contains("birth_extent_l")) p.birth_extent_l = j.at("birth_extent_l").get<double>();
  if (j.contains("birth_yaw_var")) p.birth_yaw_var = j.at("birth_yaw_var").get<double>();
  if (j.contains("birth_yaw_rate_var")) {
    p.birth_yaw_rate_var = j.at("birth_yaw_rate_var").get<double>();
  }
  if (j.contains("birth_speed_var")) p.birth_speed_var = j.at("birth_speed_var").get<double>();
  if (j.contains("birth_accel_var")) p.birth_accel_var = j.at("birth_accel_var").get<double>();
  if (j.contains("birth_extent_w_var")) {
    p.birth_extent_w_var = j.at("birth_extent_w_var").get<double>();
  }
  if (j.contains("birth_extent_l_var")) {
    p.birth_extent_l_var = j.at("birth_extent_l_var").get<double>();
  }
  if (j.contains("enumeration_budget")) {
    p.enumeration_budget = j.at("enumeration_budget").get<int>();
  }
  if (j.contains("k_best")) p.k_best = j.at("k_best").get<int>();
  if (j.contains("process_noise")) {
    const auto& q = j.at("process_noise");
    if (q.contains("sigma_jerk")) p.process_noise.sigma_jerk = q.at("sigma_jerk").get<double>();
    if (q.contains("sigma_turn_acc")) {
      p.process_noise.sigma_turn_acc = q.at("sigma_turn_acc").get<double>();
    }
    if (q.contains("sigma_extent")) {
      p.process_noise.sigma_extent = q.at("sigma_extent").get<double>();
    }
  }
  if (j.contains("ut")) {
    const auto& u = j.at("ut");
    if (u.contains("alpha")) p.ut.alpha = u.at("alpha").get<double>();
    if (u.contains("beta")) p.ut.beta = u.at("beta").get<double>();
    if (u.contains("kappa")) p.ut.kappa = u.at("kappa").get<double>();
  }
  if (j.contains("hypothesis_weights")) {
    const auto& w = j.at("hypothesis_weights");
    if (w.size() != 4) {
      throw std::invalid_argument("filter.hypothesis_weights: need 4 corner weights");
    }
    for (int i = 0; i < 4; ++i) p.hypothesis_weights.w[i] = w.at(i).get<double>();
    p.hypothesis_weights.validate();
  }
  if (j.contains("constraints")) {
    const auto& c = j.at("constraints");
    if (c.contains("ratio_min")) p.constraints.ratio_min = c.at("ratio_min").get<double>();
    if (c.contains("ratio_max")) p.constraints.ratio_max = c.at("ratio_max").get<double>();
    if (c.contains("steer_max")) p.constraints.steer_max = c.at("steer_max").get<double>();
    if (c.contains("yaw_rate_floor")) {
      p.constraints.yaw_rate_floor = c.at("yaw_rate_floor").get<double>();
    }
    if (c.contains("a_max")) p.constraints.a_max = c.at("a_max").get<double>();
    if (c.contains("v_min")) p.constraints.v_min = c.at("v_min").get<double>();
    if (c.contains("check_extent")) p.constraints.check_extent = c.at("check_extent").get<bool>();
    if (c.contains("check_ratio")) p.constraints.check_ratio = c.at("check_ratio").get<bool>();
    if (c.contains("check_yaw_rate")) {
      p.constraints.check_yaw_rate = c.at("check_yaw_rate").get<bool>();
    }
    if (c.contains("check_acceleration")) {
      p.constraints.check_acceleration = c.at("check_acceleration").get<bool>();
    }
    if (c.contains("check_velocity")) {
      p.constraints.check_velocity = c.at("check_velocity").get<bool>();
    }
  }
}

inline void ospat_from_json(const nlohmann::json& j, OspatParams& p) {
  if (j.contains("order")) p.order = j.at("order").get<double>();
  if (j.contains("cutoff")) p.cutoff = j.at("cutoff").get<double>();
  if (j.contains("label_penalty")) p.label_penalty = j.at("label_penalty").get<double>();
}

}  // namespace detail

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("scenario")) detail::scenario_from_json(j.at("scenario"), cfg.scenario);
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j.at("methods")) {
      cfg.methods.push_back(meas_model_from_string(m.get<std::string>()));
    }
  }
  if (j.contains("sigmas")) {
    cfg.sigmas.clear();
    for (const auto& s : j.at("sigmas")) cfg.sigmas.push_back(s.get<double>());
  }
  if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
  if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("filter")) detail::filter_from_json(j.at("filter"), cfg.filter);
  if (j.contains("ospat")) detail::ospat_from_json(j.at("ospat"), cfg.ospat);
  cfg.validate();
  return cfg;
}

/// Loads a config file. Syntax errors report the offending line; semantic
/// errors name the key that failed.
inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << is.rdbuf();
  const std::string text = buffer.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const size_t upto = std::min(e.byte, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + e.what());
  }
  try {
    return experiment_config_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

inline nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json scenario;
  scenario["duration"] = cfg.scenario.duration;
  scenario["dt"] = cfg.scenario.dt;
  scenario["sigma"] = cfg.scenario.sigma;
  scenario["seed"] = cfg.scenario.seed;
  scenario["measured_corner"] = cfg.scenario.measured_corner
                                    ? nlohmann::ordered_json(to_string(*cfg.scenario.measured_corner))
                                    : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json vehicles = nlohmann::ordered_json::array();
  for (const auto& v : cfg.scenario.vehicles) {
    nlohmann::ordered_json vj;
    vj["initial"] = std::vector<double>(v.initial.vec.data(), v.initial.vec.data() + sv::Dim);
    nlohmann::ordered_json segs = nlohmann::ordered_json::array();
    for (const auto& seg : v.maneuvers) {
      segs.push_back({{"duration", seg.duration},
                      {"accel", seg.accel},
                      {"turn_rate", seg.turn_rate}});
    }
    vj["maneuvers"] = segs;
    vehicles.push_back(std::move(vj));
  }
  scenario["vehicles"] = vehicles;
  nlohmann::ordered_json sensors = nlohmann::ordered_json::array();
  for (const auto& s : cfg.scenario.sensors) sensors.push_back(detail::sensor_to_json(s));
  scenario["sensors"] = sensors;
  j["scenario"] = scenario;

  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  for (MeasModel m : cfg.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["sigmas"] = cfg.sigmas;
  j["trials"] = cfg.trials;
  j["jobs"] = cfg.jobs;
  j["out_dir"] = cfg.out_dir;

  const FilterParams& p = cfg.filter;
  j["filter"] = nlohmann::ordered_json{
      {"p_survival", p.p_survival},
      {"prune_threshold", p.prune_threshold},
      {"merge_distance", p.merge_distance},
      {"max_components", p.max_components},
      {"isolate_hypotheses", p.isolate_hypotheses},
      {"gate_distance", p.gate_distance},
      {"track_prune_r", p.track_prune_r},
      {"extract_r", p.extract_r},
      {"birth_rate", p.birth_rate},
      {"birth_r_max", p.birth_r_max},
      {"birth_extent_w", p.birth_extent_w},
      {"birth_extent_l", p.birth_extent_l},
      {"birth_yaw_var", p.birth_yaw_var},
      {"birth_yaw_rate_var", p.birth_yaw_rate_var},
      {"birth_speed_var", p.birth_speed_var},
      {"birth_accel_var", p.birth_accel_var},
      {"birth_extent_w_var", p.birth_extent_w_var},
      {"birth_extent_l_var", p.birth_extent_l_var},
      {"hypothesis_weights", p.hypothesis_weights.w},
      {"enumeration_budget", p.enumeration_budget},
      {"k_best", p.k_best},
      {"process_noise",
       {{"sigma_jerk", p.process_noise.sigma_jerk},
        {"sigma_turn_acc", p.process_noise.sigma_turn_acc},
        {"sigma_extent", p.process_noise.sigma_extent}}},
      {"ut", {{"alpha", p.ut.alpha}, {"beta", p.ut.beta}, {"kappa", p.ut.kappa}}},
      {"constraints",
       {{"ratio_min", p.constraints.ratio_min},
        {"ratio_max", p.constraints.ratio_max},
        {"steer_max", p.constraints.steer_max},
        {"yaw_rate_floor", p.constraints.yaw_rate_floor},
        {"a_max", p.constraints.a_max},
        {"v_min", p.constraints.v_min},
        {"check_extent", p.constraints.check_extent},
        {"check_ratio", p.constraints.check_ratio},
        {"check_yaw_rate", p.constraints.check_yaw_rate},
        {"check_acceleration", p.constraints.check_acceleration},
        {"check_velocity", p.constraints.check_velocity}}}};
  j["ospat"] = nlohmann::ordered_json{{"order", cfg.ospat.order},
                                      {"cutoff", cfg.ospat.cutoff},
                                      {"label_penalty", cfg.ospat.label_penalty}};
  return j;
}

/// Runs one filter over a recorded measurement stream and scores every frame
/// against the matching truth frame.
inline RunStats run_filter_stats(const std::vector<SimFrame>& frames,
                                 const std::vector<GroundTruthFrame>& truth, MeasModel method,
                                 const FilterParams& filter_params,
                                 const OspatParams& ospat_params) {
  ospat_params.validate();
  std::map<int, const GroundTruthFrame*> truth_by_frame;
  for (const auto& tf : truth) truth_by_frame[tf.frame] = &tf;

  LmbFilter filter(filter_params, method);
  OspatState state;
  RunStats stats;
  for (const auto& frame : frames) {
    const auto info = filter.step(frame.time, frame.scans);
    stats.update_seconds.insert(stats.update_seconds.end(), info.update_seconds.begin(),
                                info.update_seconds.end());
    stats.components_per_track.insert(stats.components_per_track.end(),
                                      info.components_per_track.begin(),
                                      info.components_per_track.end());

    const auto it = truth_by_frame.find(frame.frame);
    if (it == truth_by_frame.end()) {
      throw std::invalid_argument("no truth for frame " + std::to_string(frame.frame));
    }
    std::vector<TruthPoint> truth_points;
    for (const auto& obj : it->second->objects) {
      truth_points.push_back({obj.id, obj.state.head<2>()});
    }
    std::vector<EstimatePoint> estimate_points;
    for (const auto& e : filter.estimates()) {
      estimate_points.push_back({e.label, e.state.vec.head<2>()});
    }
    const FrameScore score = ospat_frame(truth_points, estimate_points, ospat_params, &state);
    stats.ospat.push_back(score.ospat);
    stats.cardinality_error.push_back(score.cardinality_error);
  }
  stats.non_continuous = continuity_count(state);
  stats.missed = missed_count(state);
  return stats;
}

/// Simulates trial `trial` of the scenario and scores one filter on it.
inline RunStats run_single_trial(const ScenarioConfig& scenario,
                                 const std::vector<GroundTruthFrame>& truth, MeasModel method,
                                 int trial, const FilterParams& filter_params,
                                 const OspatParams& ospat_params) {
  return run_filter_stats(simulate_trial(scenario, truth, trial), truth, method, filter_params,
                          ospat_params);
}

/// Runs one filter over a recorded stream and returns the per-frame track
/// extractions, the payload of the replay tool.
inline std::vector<ExtractionRow> run_filter_extraction(const std::vector<SimFrame>& frames,
                                                        MeasModel method,
                                                        const FilterParams& filter_params) {
  LmbFilter filter(filter_params, method);
  std::vector<ExtractionRow> rows;
  for (const auto& frame : frames) {
    filter.step(frame.time, frame.scans);
    for (const auto& e : filter.estimates()) {
      ExtractionRow row;
      row.frame = frame.frame;
      row.time = frame.time;
      row.label = e.label;
      row.r = e.r;
      row.state = e.state.vec;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Aggregates of one (method, sigma) cell over all trials.
struct CellSummary {
  MeasModel method = MeasModel::MultiHypothesis;
  double sigma = 1.0;
  int trials = 0;
  double mean_ospat = 0.0;
  double mean_cardinality_error = 0.0;
  int non_continuous = 0;  // summed over trials
  int missed = 0;          // summed over trials
  double mean_components_per_track = 0.0;
  double mean_update_seconds = 0.0;
  double median_update_seconds = 0.0;
  double total_update_seconds = 0.0;
  std::vector<double> mean_ospat_per_frame;
};

struct ExperimentResult {
  std::vector<CellSummary> cells;                // methods x sigmas, method-major
  std::vector<std::vector<RunStats>> cell_runs;  // parallel to cells, one entry per trial
};

namespace detail {

inline double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline CellSummary summarize_cell(MeasModel method, double sigma,
                                  const std::vector<RunStats>& runs, int frames) {
  CellSummary cell;
  cell.method = method;
  cell.sigma = sigma;
  cell.trials = static_cast<int>(runs.size());
  cell.mean_ospat_per_frame.assign(static_cast<size_t>(frames), 0.0);
  std::vector<double> all_updates;
  double comp_sum = 0.0;
  int comp_runs = 0;
  for (const auto& run : runs) {
    cell.mean_ospat += run.mean_ospat();
    cell.mean_cardinality_error += run.mean_cardinality_error();
    cell.non_continuous += run.non_continuous;
    cell.missed += run.missed;
    all_updates.insert(all_updates.end(), run.update_seconds.begin(), run.update_seconds.end());
    if (!run.components_per_track.empty()) {
      double s = 0.0;
      for (double c : run.components_per_track) s += c;
      comp_sum += s / static_cast<double>(run.components_per_track.size());
      ++comp_runs;
    }
    for (size_t k = 0; k < run.ospat.size() && k < cell.mean_ospat_per_frame.size(); ++k) {
      cell.mean_ospat_per_frame[k] += run.ospat[k];
    }
  }
  if (!runs.empty()) {
    cell.mean_ospat /= cell.trials;
    cell.mean_cardinality_error /= cell.trials;
    for (double& x : cell.mean_ospat_per_frame) x /= cell.trials;
  }
  if (comp_runs > 0) cell.mean_components_per_track = comp_sum / comp_runs;
  if (!all_updates.empty()) {
    double s = 0.0;
    for (double x : all_updates) s += x;
    cell.total_update_seconds = s;
    cell.mean_update_seconds = s / static_cast<double>(all_updates.size());
    cell.median_update_seconds = median(all_updates);
  }
  return cell;
}

}  // namespace detail

/// Full sweep: methods x sigmas x trials. Trials are independent, so with
/// jobs > 1 they run on a small worker pool; results land in per-trial slots
/// and every aggregate is computed in trial order, which keeps all outputs
/// except wall-clock timings identical for any job count.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<GroundTruthFrame> truth = generate_truth(cfg.scenario);
  const int frames = cfg.scenario.frame_count();

  struct Item {
    size_t cell = 0;
    int trial = 0;
  };
  std::vector<Item> items;
  const size_t cell_count = cfg.methods.size() * cfg.sigmas.size();
  for (size_t c = 0; c < cell_count; ++c) {
    for (int t = 0; t < cfg.trials; ++t) items.push_back({c, t});
  }

  ExperimentResult result;
  result.cell_runs.assign(cell_count, std::vector<RunStats>(cfg.trials));

  auto run_item = [&](const Item& item) {
    const MeasModel method = cfg.methods[item.cell / cfg.sigmas.size()];
    const double sigma = cfg.sigmas[item.cell % cfg.sigmas.size()];
    ScenarioConfig scenario = cfg.scenario;
    scenario.sigma = sigma;
    result.cell_runs[item.cell][item.trial] =
        run_single_trial(scenario, truth, method, item.trial, cfg.filter, cfg.ospat);
  };

  const int jobs = std::min<int>(cfg.jobs, static_cast<int>(items.size()));
  if (jobs <= 1) {
    for (const auto& item : items) run_item(item);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
          run_item(items[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  for (size_t c = 0; c < cell_count; ++c) {
    const MeasModel method = cfg.methods[c / cfg.sigmas.size()];
    const double sigma = cfg.sigmas[c % cfg.sigmas.size()];
    result.cells.push_back(detail::summarize_cell(method, sigma, result.cell_runs[c], frames));
  }
  return result;
}

inline std::string format_sigma(double sigma) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", sigma);
  return buf;
}

inline constexpr const char* kResultsCsvHeader =
    "method,sigma,trial,frame,ospat,cardinality_error";

/// Per-frame scores of every run, one row per (method, sigma, trial, frame).
inline void write_results_csv(std::ostream& os, const ExperimentConfig& cfg,
                              const ExperimentResult& result) {
  os << kResultsCsvHeader << '\n';
  for (size_t c = 0; c < result.cells.size(); ++c) {
    const CellSummary& cell = result.cells[c];
    for (size_t t = 0; t < result.cell_runs[c].size(); ++t) {
      const RunStats& run = result.cell_runs[c][t];
      for (size_t k = 0; k < run.ospat.size(); ++k) {
        os << csv_field(to_string(cell.method)) << ',' << format_sigma(cell.sigma) << ',' << t
           << ',' << k << ',' << format_double(run.ospat[k]) << ',' << run.cardinality_error[k]
           << '\n';
      }
    }
  }
  (void)cfg;
}

/// Cell aggregates. Wall-clock numbers live in their own "timing" subobject
/// so reproducibility checks can strip them and compare the rest verbatim.
inline nlohmann::ordered_json summary_json(const ExperimentConfig& cfg,
                                           const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.scenario.seed;
  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  for (MeasModel m : cfg.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["sigmas"] = cfg.sigmas;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const auto& cell : result.cells) {
    nlohmann::ordered_json cj;
    cj["method"] = to_string(cell.method);
    cj["sigma"] = cell.sigma;
    cj["trials"] = cell.trials;
    cj["mean_ospat"] = cell.mean_ospat;
    cj["mean_cardinality_error"] = cell.mean_cardinality_error;
    cj["non_continuous"] = cell.non_continuous;
    cj["missed"] = cell.missed;
    cj["mean_components_per_track"] = cell.mean_components_per_track;
    cj["timing"] = nlohmann::ordered_json{{"mean_update_seconds", cell.mean_update_seconds},
                                          {"median_update_seconds", cell.median_update_seconds},
                                          {"total_update_seconds", cell.total_update_seconds}};
    cells.push_back(std::move(cj));
  }
  j["cells"] = cells;
  return j;
}

/// Whitespace-separated series of the trial-averaged score per frame, ready
/// for gnuplot.
inline void write_plot_dat(std::ostream& os, const CellSummary& cell, double dt) {
  os << "# time mean_ospat\n";
  for (size_t k = 0; k < cell.mean_ospat_per_frame.size(); ++k) {
    os << format_double(k * dt) << ' ' << format_double(cell.mean_ospat_per_frame[k]) << '\n';
  }
}

/// Writes results.csv, summary.json, and one plot file per cell into
/// cfg.out_dir, creating the directory if needed.
inline void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);

  {
    std::ofstream os(out / "results.csv");
    if (!os) throw std::runtime_error("cannot write results.csv");
    write_results_csv(os, cfg, result);
  }
  {
    std::ofstream os(out / "summary.json");
    if (!os) throw std::runtime_error("cannot write summary.json");
    os << summary_json(cfg, result).dump(2) << '\n';
  }
  for (const auto& cell : result.cells) {
    const std::string name = std::string("ospat_vs_time_") + to_string(cell.method) + "_sigma" +
                             format_sigma(cell.sigma) + ".dat";
    std::ofstream os(out / name);
    if (!os) throw std::runtime_error("cannot write " + name);
    write_plot_dat(os, cell, cfg.scenario.dt);
  }
}

/// Comma-separated method list, e.g. "MH,MAX".
inline std::vector<MeasModel> parse_method_list(const std::string& csv) {
  std::vector<MeasModel> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(meas_model_from_string(item));
  }
  if (out.empty()) throw std::invalid_argument("empty method list");
  return out;
}

/// Comma-separated sigma list, e.g. "0.5,1.0,2.0".
inline std::vector<double> parse_sigma_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    size_t pos = 0;
    const double v = std::stod(item, &pos);
    if (pos != item.size()) throw std::invalid_argument("bad sigma '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty sigma list");
  return out;
}

}  // namespace lmbox
