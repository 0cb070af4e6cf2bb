#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "mbc/errors.hpp"
#include "mbc/experiment.hpp"

using namespace mbc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mbc_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int mbcsim(const std::string& args) {
  const std::string cmd = std::string(MBCSIM_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void expect_number(const json& j, const char* key) {
  ASSERT_TRUE(j.contains(key)) << key;
  EXPECT_TRUE(j.at(key).is_number()) << key;
}

}  // namespace

TEST(Experiment, DefaultGridHasEightCells) {
  const auto res = run_experiment(ExperimentConfig{});
  EXPECT_EQ(res.cells.size(), 8u);
  const auto& cells = res.report.at("cells");
  ASSERT_EQ(cells.size(), 8u);
  for (const auto& c : cells) {
    expect_number(c, "threshold_m");
    expect_number(c, "per");
    for (const char* arm : {"mbc", "baseline", "baseline_matched"}) {
      const auto& a = c.at("arms").at(arm);
      expect_number(a, "threshold_m");
      expect_number(a, "channel_seed");
      for (const char* r : {"full_update_hz", "switch_hz", "total_hz"}) expect_number(a.at("rates"), r);
      expect_number(a.at("messages"), "transmitted");
      expect_number(a.at("messages"), "delivered");
      expect_number(a.at("pte"), "n");
      EXPECT_EQ(a.at("ecdf").at("pte").size(), a.at("ecdf").at("fraction").size());
    }
  }
  EXPECT_EQ(res.report.at("tool").at("name"), "mbcsim");
  EXPECT_TRUE(res.report.at("config").contains("schedule"));
  EXPECT_EQ(res.report.at("seed"), 1);
}

TEST(Experiment, CellsSortedByKey) {
  const auto res = run_experiment(ExperimentConfig{});
  for (std::size_t i = 1; i < res.cells.size(); ++i) {
    const auto& a = res.cells[i - 1];
    const auto& b = res.cells[i];
    EXPECT_TRUE(std::pair(a.threshold_index, a.per_index) < std::pair(b.threshold_index, b.per_index));
  }
}

TEST(Experiment, Deterministic) {
  const auto a = run_experiment(ExperimentConfig{});
  const auto b = run_experiment(ExperimentConfig{});
  EXPECT_EQ(a.report.dump(), b.report.dump());
}

TEST(Experiment, PerDoesNotChangeTransmitRates) {
  const auto res = run_experiment(ExperimentConfig{});
  for (const auto& c : res.report.at("cells")) {
    for (const auto& c2 : res.report.at("cells")) {
      if (c.at("threshold_m") != c2.at("threshold_m")) continue;
      for (const char* arm : {"mbc", "baseline", "baseline_matched"}) {
        EXPECT_EQ(c.at("arms").at(arm).at("rates"), c2.at("arms").at(arm).at("rates"));
      }
    }
  }
}

TEST(Experiment, LosslessCellsKeepThreshold) {
  const auto res = run_experiment(ExperimentConfig{});
  for (const auto& c : res.cells) {
    if (c.per != 0.0) continue;
    for (const auto& s : c.arms.front().pte.samples) {
      if (!s.updated) EXPECT_LT(s.pte, c.threshold_m);
    }
  }
}

TEST(Experiment, MatchedBaselineTracksUpdateCount) {
  const auto res = run_experiment(ExperimentConfig{});
  for (const auto& run : res.runs) {
    const auto target = run.mbc.count_full_updates();
    const auto got = run.baseline_matched.messages.size();
    EXPECT_LE(got > target ? got - target : target - got, 1u);
  }
}

TEST(Experiment, CellSeedsIgnoreNeighbours) {
  // Value-keyed seeds: adding thresholds leaves existing cells untouched.
  ExperimentConfig small;
  small.thresholds_m = {0.3};
  ExperimentConfig big;
  big.thresholds_m = {0.2, 0.3, 0.5};
  const auto a = run_experiment(small);
  const auto b = run_experiment(big);
  EXPECT_EQ(a.report.at("cells").at(1), b.report.at("cells").at(3));
}

TEST(Config, RejectsUnknownAndInvalid) {
  EXPECT_THROW(config_from_json(json{{"thresholds", {0.2}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"schedule", {{"noise", 1.0}}}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"scenario", "warp-speed"}}), ConfigError);
  auto c = config_from_json(json{{"thresholds_m", {-0.2}}});
  EXPECT_THROW(c.validate(), ConfigError);
  c = config_from_json(json{{"pers", {1.2}}});
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, RoundTripsThroughJson) {
  ExperimentConfig c;
  c.thresholds_m = {0.25};
  c.pers = {0.1};
  c.seed = 77;
  c.schedule.switch_policy = SwitchPolicy::kArgmin;
  c.schedule.keepalive_s = 3.0;
  auto j = c.to_json();
  const auto back = config_from_json(j);
  EXPECT_EQ(back.to_json(), j);
}

TEST(Cli, SynthIsByteStableAndReparses) {
  const auto dir = scratch("synth");
  ASSERT_EQ(mbcsim("synth --scenario mixed-demo --out " + (dir / "a.csv").string()), 0);
  ASSERT_EQ(mbcsim("synth --scenario mixed-demo --out " + (dir / "b.csv").string()), 0);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  const auto spec = synth::named_scenario("mixed-demo");
  const auto in_process = synth::generate(spec, spec.default_duration(), 1);
  const auto loaded = load_trajectory((dir / "a.csv").string());
  ASSERT_EQ(loaded.samples.size(), in_process.samples.size());
  for (std::size_t i = 0; i < loaded.samples.size(); ++i) {
    EXPECT_EQ(loaded.samples[i].t, in_process.samples[i].t);
    EXPECT_EQ(loaded.samples[i].x, in_process.samples[i].x);
    EXPECT_EQ(loaded.samples[i].y, in_process.samples[i].y);
  }
  fs::remove_all(dir);
}

TEST(Cli, TraceFileMatchesInProcessScenario) {
  const auto dir = scratch("roundtrip");
  ASSERT_EQ(mbcsim("synth --scenario lane-change --out " + (dir / "lc.csv").string()), 0);
  ExperimentConfig from_file;
  from_file.trace_path = (dir / "lc.csv").string();
  ExperimentConfig in_process;
  in_process.scenario = synth::named_scenario("lane-change");
  const auto a = run_experiment(from_file);
  const auto b = run_experiment(in_process);
  EXPECT_EQ(a.report.at("cells"), b.report.at("cells"));
  fs::remove_all(dir);
}

TEST(Cli, RunWritesArtifacts) {
  const auto dir = scratch("run");
  ASSERT_EQ(mbcsim("run --scenario lane-change --thresholds 0.3 --pers 0,0.4 --out " + dir.string()), 0);
  for (const char* f : {"report.json", "pte.csv", "messages.csv", "decisions.csv", "rates.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir / ".partial"));
  const auto report = json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report.at("cells").size(), 2u);
  EXPECT_EQ(slurp(dir / "rates.csv").substr(0, 52), "threshold,per,arm,full_hz,switch_hz,total_hz,p50,p90");
  fs::remove_all(dir);
}

TEST(Cli, SweepIsByteIdentical) {
  const auto a = scratch("sweep_a");
  const auto b = scratch("sweep_b");
  ASSERT_EQ(mbcsim("sweep --seed 3 --out " + a.string()), 0);
  ASSERT_EQ(mbcsim("sweep --seed 3 --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
  EXPECT_TRUE(fs::exists(a / "pte_percentiles.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, FlagsOverrideConfig) {
  const auto dir = scratch("override");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"thresholds_m": [0.2, 0.4], "pers": [0.0], "seed": 5})";
  }
  ASSERT_EQ(mbcsim("sweep --config " + (dir / "cfg.json").string() + " --seed 9 --out " + (dir / "o").string()), 0);
  const auto report = json::parse(slurp(dir / "o" / "report.json"));
  EXPECT_EQ(report.at("seed"), 9);
  EXPECT_EQ(report.at("cells").size(), 2u);
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("exit");
  fs::create_directories(dir);
  EXPECT_EQ(mbcsim("sweep --thresholds -1 --out " + (dir / "o").string()), 1);
  EXPECT_EQ(mbcsim("sweep --scenario nowhere --out " + (dir / "o").string()), 1);
  EXPECT_EQ(mbcsim("bogus"), 1);
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "t,x,y\n0,0,0\n0.2,1,1\n0.1,2,2\n";
  }
  EXPECT_EQ(mbcsim("run --trace " + (dir / "bad.csv").string() + " --out " + (dir / "o").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "o" / "report.json"));
  {
    std::ofstream tiny(dir / "tiny.csv");
    tiny << "t,x,y\n0,0,0\n0.1,1,0\n0.2,2,0\n";
  }
  // Three samples cannot fill a ten-sample window.
  EXPECT_EQ(mbcsim("run --trace " + (dir / "tiny.csv").string() + " --out " + (dir / "o").string()), 2);
  EXPECT_EQ(mbcsim("--version"), 0);
  fs::remove_all(dir);
}
