#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbc/channel.hpp"
#include "mbc/scheduler.hpp"
#include "mbc/synth.hpp"
#include "mbc/tracker.hpp"

namespace mbc {

struct ExperimentConfig {
  std::optional<std::string> trace_path;  // wins over `scenario` when set
  synth::ScenarioSpec scenario = synth::named_scenario("mixed-demo");
  std::string scenario_label = "mixed-demo";
  std::optional<double> duration_s;  // synthetic traces only
  std::vector<double> thresholds_m{0.2, 0.3, 0.4, 0.5};
  std::vector<double> pers{0.0, 0.4};
  ScheduleConfig schedule;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";

  void validate() const;
  /// Resolved configuration echoed into reports. `out_dir` is left out so
  /// reports do not depend on where they are written.
  nlohmann::json to_json() const;
};

/// Reads a JSON config; unknown keys are rejected. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

enum class Arm { kMbc, kBaseline, kBaselineMatched };
std::string_view to_string(Arm a);

/// Transmitter output for one threshold; shared by every PER cell.
struct ThresholdRun {
  double threshold_m = 0.0;
  TxLog mbc;
  TxLog baseline;          // same threshold as MBC
  double matched_threshold_m = 0.0;
  TxLog baseline_matched;  // threshold chosen to match the MBC FullUpdate count
};

struct ArmCell {
  Arm arm = Arm::kMbc;
  std::uint64_t channel_seed = 0;
  std::vector<bool> delivered;
  PteSeries pte;
  ArmSummary summary;
};

struct Cell {
  std::size_t threshold_index = 0;
  std::size_t per_index = 0;
  double threshold_m = 0.0;
  double per = 0.0;
  std::vector<ArmCell> arms;  // mbc, baseline, baseline_matched
};

struct ExperimentResult {
  EnuTrajectory truth;
  std::vector<ThresholdRun> runs;
  std::vector<Cell> cells;  // sorted by (threshold index, per index)
  nlohmann::json report;
};

/// Channel seed for one arm of one cell, derived from the master seed and the
/// cell's threshold and PER values.
std::uint64_t cell_seed(std::uint64_t master, double threshold_m, double per, Arm arm);

EnuTrajectory load_truth(const ExperimentConfig& cfg);

/// Runs both transmitters per threshold (concurrently), then channel and
/// receiver for every (threshold, PER) cell. Output is a function of the
/// config alone.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes report.json, pte.csv, messages.csv, decisions.csv and rates.csv.
void cmd_run(const ExperimentConfig& cfg);
/// Writes report.json, rates.csv and pte_percentiles.csv.
void cmd_sweep(const ExperimentConfig& cfg);
/// Writes the scenario as an ENU CSV.
void cmd_synth(const synth::ScenarioSpec& spec, double duration_s, std::uint64_t seed,
               const std::filesystem::path& out);

}  // namespace mbc
