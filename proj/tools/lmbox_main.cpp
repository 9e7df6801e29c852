// Command line driver: simulate measurement streams, run method sweeps,
// replay recorded logs through a filter, and score extractions offline.

#include "lmbox/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

lmbox::ExperimentConfig load_or_default(const std::string& path) {
  return path.empty() ? lmbox::ExperimentConfig{} : lmbox::load_experiment_config(path);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return os;
}

int cmd_simulate(const std::string& config_path, bool have_seed, uint64_t seed,
                 const std::string& sigma_list, std::string out_dir) {
  lmbox::ExperimentConfig cfg = load_or_default(config_path);
  if (have_seed) cfg.scenario.seed = seed;
  if (out_dir.empty()) out_dir = "out";
  const std::vector<double> sigmas =
      sigma_list.empty() ? std::vector<double>{cfg.scenario.sigma}
                         : lmbox::parse_sigma_list(sigma_list);

  fs::create_directories(out_dir);
  const auto truth = lmbox::generate_truth(cfg.scenario);
  {
    auto os = open_out(fs::path(out_dir) / "truth.csv");
    lmbox::write_truth_csv(os, truth);
  }
  int files = 0;
  for (double sigma : sigmas) {
    lmbox::ScenarioConfig scenario = cfg.scenario;
    scenario.sigma = sigma;
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const std::string name = "measurements_sigma" + lmbox::format_sigma(sigma) + "_trial" +
                               std::to_string(trial) + ".jsonl";
      auto os = open_out(fs::path(out_dir) / name);
      lmbox::write_measurement_log(os, lmbox::simulate_trial(scenario, truth, trial));
      ++files;
    }
  }
  std::cout << "wrote truth.csv and " << files << " measurement logs to " << out_dir << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, bool have_seed, uint64_t seed,
            const std::string& method_list, const std::string& sigma_list,
            const std::string& out_dir, int jobs) {
  lmbox::ExperimentConfig cfg = load_or_default(config_path);
  if (have_seed) cfg.scenario.seed = seed;
  if (!method_list.empty()) cfg.methods = lmbox::parse_method_list(method_list);
  if (!sigma_list.empty()) cfg.sigmas = lmbox::parse_sigma_list(sigma_list);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (jobs > 0) cfg.jobs = jobs;
  cfg.validate();

  const lmbox::ExperimentResult result = lmbox::run_experiment(cfg);
  lmbox::write_experiment_outputs(cfg, result);

  std::cout << std::left << std::setw(7) << "method" << std::setw(8) << "sigma" << std::setw(12)
            << "mean_ospat" << std::setw(10) << "switches" << "missed\n";
  for (const auto& cell : result.cells) {
    std::cout << std::left << std::setw(7) << lmbox::to_string(cell.method) << std::setw(8)
              << lmbox::format_sigma(cell.sigma) << std::setw(12) << std::fixed
              << std::setprecision(4) << cell.mean_ospat << std::setw(10) << cell.non_continuous
              << cell.missed << "\n";
  }
  std::cout << "outputs in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_replay(const std::string& log_path, const std::string& config_path,
               const std::string& method_list, std::string out_dir) {
  if (out_dir.empty()) out_dir = "out";
  const lmbox::ExperimentConfig cfg = load_or_default(config_path);
  const std::vector<lmbox::MeasModel> methods =
      method_list.empty() ? cfg.methods : lmbox::parse_method_list(method_list);

  const auto frames = lmbox::read_measurement_log(log_path);
  fs::create_directories(out_dir);
  for (lmbox::MeasModel method : methods) {
    const auto rows = lmbox::run_filter_extraction(frames, method, cfg.filter);
    const std::string name = std::string("tracks_") + lmbox::to_string(method) + ".csv";
    auto os = open_out(fs::path(out_dir) / name);
    lmbox::write_extraction_csv(os, rows);
    std::cout << name << ": " << rows.size() << " rows\n";
  }
  return 0;
}

int cmd_metrics(const std::string& truth_path, const std::string& tracks_path,
                const std::string& config_path, std::string out_dir) {
  if (out_dir.empty()) out_dir = "out";
  const lmbox::ExperimentConfig cfg = load_or_default(config_path);
  const auto truth = lmbox::read_truth_csv(truth_path);
  const auto rows = lmbox::read_extraction_csv(tracks_path);

  std::map<int, std::vector<lmbox::EstimatePoint>> by_frame;
  for (const auto& row : rows) {
    by_frame[row.frame].push_back({row.label, row.state.head<2>()});
  }

  lmbox::OspatState state;
  nlohmann::ordered_json frames_json = nlohmann::ordered_json::array();
  std::vector<std::pair<double, double>> series;
  double mean = 0.0;
  for (const auto& tf : truth) {
    std::vector<lmbox::TruthPoint> truth_points;
    for (const auto& obj : tf.objects) truth_points.push_back({obj.id, obj.state.head<2>()});
    const auto it = by_frame.find(tf.frame);
    const std::vector<lmbox::EstimatePoint> estimates =
        it == by_frame.end() ? std::vector<lmbox::EstimatePoint>{} : it->second;
    const lmbox::FrameScore score =
        lmbox::ospat_frame(truth_points, estimates, cfg.ospat, &state);
    mean += score.ospat;
    series.emplace_back(tf.time, score.ospat);
    frames_json.push_back({{"frame", tf.frame},
                           {"time", tf.time},
                           {"ospat", score.ospat},
                           {"cardinality_error", score.cardinality_error}});
  }
  if (!truth.empty()) mean /= static_cast<double>(truth.size());

  nlohmann::ordered_json summary;
  summary["mean_ospat"] = mean;
  summary["non_continuous"] = lmbox::continuity_count(state);
  summary["missed"] = lmbox::missed_count(state);
  summary["frames"] = frames_json;

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    open_out(fs::path(out_dir) / "metrics.json") << summary.dump(2) << '\n';
    auto os = open_out(fs::path(out_dir) / "ospat_vs_time.dat");
    os << "# time ospat\n";
    for (const auto& [t, v] : series) {
      os << lmbox::format_double(t) << ' ' << lmbox::format_double(v) << '\n';
    }
  }
  std::cout << "mean_ospat " << std::setprecision(6) << mean << " non_continuous "
            << lmbox::continuity_count(state) << " missed " << lmbox::missed_count(state) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"labeled multi-Bernoulli tracking with reference-point hypotheses"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;  // empty means: config value, then "out"
  std::string method_list;
  std::string sigma_list;
  std::string log_path;
  std::string truth_path;
  std::string tracks_path;
  uint64_t seed = 0;
  int jobs = 0;

  CLI::App* sim = app.add_subcommand("simulate", "write truth and measurement logs");
  sim->add_option("--config", config_path, "experiment config (JSON)");
  CLI::Option* sim_seed = sim->add_option("--seed", seed, "override scenario seed");
  sim->add_option("--sigma", sigma_list, "comma-separated noise levels");
  sim->add_option("--out", out_dir, "output directory");

  CLI::App* run = app.add_subcommand("run", "run the method comparison sweep");
  run->add_option("--config", config_path, "experiment config (JSON)");
  CLI::Option* run_seed = run->add_option("--seed", seed, "override scenario seed");
  run->add_option("--method", method_list, "comma-separated methods (MEAS,MH,MAX,MHC)");
  run->add_option("--sigma", sigma_list, "comma-separated noise levels");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--jobs", jobs, "worker threads for the trial loop");

  CLI::App* replay = app.add_subcommand("replay", "run a filter over a recorded log");
  replay->add_option("log", log_path, "measurement log (JSONL)")->required();
  replay->add_option("--config", config_path, "experiment config (JSON)");
  replay->add_option("--method", method_list, "comma-separated methods");
  replay->add_option("--out", out_dir, "output directory");

  CLI::App* metrics = app.add_subcommand("metrics", "score an extraction against truth");
  metrics->add_option("truth", truth_path, "truth CSV")->required();
  metrics->add_option("tracks", tracks_path, "extraction CSV")->required();
  metrics->add_option("--config", config_path, "experiment config (JSON)");
  metrics->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(config_path, sim_seed->count() > 0, seed, sigma_list, out_dir);
    }
    if (run->parsed()) {
      return cmd_run(config_path, run_seed->count() > 0, seed, method_list, sigma_list, out_dir,
                     jobs);
    }
    if (replay->parsed()) {
      return cmd_replay(log_path, config_path, method_list, out_dir);
    }
    if (metrics->parsed()) {
      return cmd_metrics(truth_path, tracks_path, config_path, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
