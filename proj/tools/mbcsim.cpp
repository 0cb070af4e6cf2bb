// mbcsim: trace-driven simulator for error-driven model-based V2X messaging.
//
//   mbcsim run   [--config FILE] [--trace CSV | --scenario NAME] [--out DIR] ...
//   mbcsim sweep [same flags]
//   mbcsim synth --scenario NAME --out CSV [--duration S] [--seed N]
//
// Exit codes: 0 success, 1 config error, 2 data error, 3 numerical failure.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mbc/errors.hpp"
#include "mbc/experiment.hpp"
#include "mbc/version.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string trace;
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::vector<double> thresholds;
  std::vector<double> pers;
};

void add_experiment_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON experiment config");
  cmd->add_option("--trace", o.trace, "trace CSV (t,lat,lon,alt or t,x,y)");
  cmd->add_option("--scenario", o.scenario, "synthetic scenario name");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--duration", o.duration, "synthetic trace duration in seconds");
  cmd->add_option("--thresholds", o.thresholds, "PTE thresholds in meters")->delimiter(',');
  cmd->add_option("--pers", o.pers, "packet error ratios")->delimiter(',');
}

mbc::ExperimentConfig resolve(const Overrides& o) {
  mbc::ExperimentConfig cfg = o.config.empty() ? mbc::ExperimentConfig{} : mbc::load_config(o.config);
  if (!o.trace.empty() && !o.scenario.empty()) throw mbc::ConfigError("--trace and --scenario are exclusive");
  if (!o.trace.empty()) cfg.trace_path = o.trace;
  if (!o.scenario.empty()) {
    cfg.trace_path.reset();
    cfg.scenario = mbc::synth::named_scenario(o.scenario);
    cfg.scenario_label = o.scenario;
  }
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.duration) cfg.duration_s = *o.duration;
  if (!o.thresholds.empty()) cfg.thresholds_m = o.thresholds;
  if (!o.pers.empty()) cfg.pers = o.pers;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based V2X communication simulator"};
  app.set_version_flag("--version", std::string(mbc::kToolVersion));
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error");

  Overrides run_flags, sweep_flags;
  auto* run = app.add_subcommand("run", "run every (threshold, PER) cell and write all artifacts");
  add_experiment_flags(run, run_flags);
  auto* sweep = app.add_subcommand("sweep", "tabulate rates and PTE percentiles per cell");
  add_experiment_flags(sweep, sweep_flags);

  std::string synth_scenario = "mixed-demo";
  std::string synth_out;
  std::optional<double> synth_duration;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "write a synthetic trajectory as ENU CSV");
  synth->add_option("--scenario", synth_scenario, "cruise | lane-change | hard-brake | mixed-demo");
  synth->add_option("--out", synth_out, "output CSV path")->required();
  synth->add_option("--duration", synth_duration, "seconds");
  synth->add_option("--seed", synth_seed, "noise seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) {
      mbc::cmd_run(resolve(run_flags));
    } else if (*sweep) {
      mbc::cmd_sweep(resolve(sweep_flags));
    } else if (*synth) {
      const auto spec = mbc::synth::named_scenario(synth_scenario);
      mbc::cmd_synth(spec, synth_duration.value_or(spec.default_duration()), synth_seed, synth_out);
    }
  } catch (const mbc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const mbc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const mbc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return EXIT_SUCCESS;
}
