#include "mbc/experiment.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "mbc/errors.hpp"
#include "mbc/serialize.hpp"
#include "mbc/version.hpp"

namespace mbc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr Arm kArms[] = {Arm::kMbc, Arm::kBaseline, Arm::kBaselineMatched};

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", where));
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
  }
}

json schedule_json(const ScheduleConfig& s) {
  return {{"window", s.window},
          {"rate_hz", s.rate_hz},
          {"noise_var", s.noise_var},
          {"kernel", to_json(s.kernel_template)},
          {"bounds",
           {{"variance_min", s.bounds.variance_min},
            {"variance_max", s.bounds.variance_max},
            {"lengthscale_min", s.bounds.lengthscale_min},
            {"lengthscale_max", s.bounds.lengthscale_max}}},
          {"freeze_hyperparams", s.freeze_hyperparams},
          {"keepalive_s", s.keepalive_s ? json(*s.keepalive_s) : json(nullptr)},
          {"switch_policy", to_string(s.switch_policy)}};
}

ScheduleConfig schedule_from_json(const json& j) {
  reject_unknown_keys(j, {"window", "rate_hz", "noise_var", "kernel", "bounds", "freeze_hyperparams", "keepalive_s",
                          "switch_policy"},
                      "schedule");
  ScheduleConfig s;
  s.window = j.value("window", s.window);
  s.rate_hz = j.value("rate_hz", s.rate_hz);
  s.noise_var = j.value("noise_var", s.noise_var);
  if (j.contains("kernel")) s.kernel_template = kernel_from_json(j.at("kernel"));
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    reject_unknown_keys(b, {"variance_min", "variance_max", "lengthscale_min", "lengthscale_max"}, "bounds");
    s.bounds.variance_min = b.value("variance_min", s.bounds.variance_min);
    s.bounds.variance_max = b.value("variance_max", s.bounds.variance_max);
    s.bounds.lengthscale_min = b.value("lengthscale_min", s.bounds.lengthscale_min);
    s.bounds.lengthscale_max = b.value("lengthscale_max", s.bounds.lengthscale_max);
  }
  s.freeze_hyperparams = j.value("freeze_hyperparams", false);
  if (j.contains("keepalive_s") && !j.at("keepalive_s").is_null()) s.keepalive_s = j.at("keepalive_s").get<double>();
  if (j.contains("switch_policy")) s.switch_policy = switch_policy_from_string(j.at("switch_policy").get<std::string>());
  return s;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string opt_field(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

// Stages artifacts in a hidden directory and moves them into place only when
// every file has been written.
class StagedOutput {
 public:
  explicit StagedOutput(fs::path out_dir) : out_dir_(std::move(out_dir)), staging_(out_dir_ / ".partial") {
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    fs::remove_all(staging_, ec);
    if (!fs::create_directories(staging_, ec) || ec) {
      throw ConfigError(fmt::format("cannot create output directory '{}'", out_dir_.string()));
    }
  }
  StagedOutput(const StagedOutput&) = delete;
  StagedOutput& operator=(const StagedOutput&) = delete;
  ~StagedOutput() {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(staging_ / name, std::ios::binary);
    f << content;
    if (!f) throw ConfigError(fmt::format("cannot write '{}'", (staging_ / name).string()));
    names_.push_back(name);
  }

  void commit() {
    for (const auto& name : names_) fs::rename(staging_ / name, out_dir_ / name);
  }

 private:
  fs::path out_dir_;
  fs::path staging_;
  std::vector<std::string> names_;
};

const TxLog& tx_of(const ThresholdRun& r, Arm a) {
  switch (a) {
    case Arm::kMbc: return r.mbc;
    case Arm::kBaseline: return r.baseline;
    case Arm::kBaselineMatched: return r.baseline_matched;
  }
  return r.mbc;
}

double threshold_of(const ThresholdRun& r, Arm a) {
  return a == Arm::kBaselineMatched ? r.matched_threshold_m : r.threshold_m;
}

std::string rates_csv(const ExperimentResult& res, bool with_percentiles_only) {
  std::ostringstream out;
  out << (with_percentiles_only ? "threshold,per,arm,n,p50,p90,p99\n"
                                : "threshold,per,arm,full_hz,switch_hz,total_hz,p50,p90,p99\n");
  for (const auto& c : res.cells) {
    for (const auto& a : c.arms) {
      const auto& s = a.summary;
      if (with_percentiles_only) {
        out << fmt::format("{},{},{},{},{},{},{}\n", c.threshold_m, c.per, to_string(a.arm), s.pte.n,
                           opt_field(s.pte.p50), opt_field(s.pte.p90), opt_field(s.pte.p99));
      } else {
        out << fmt::format("{},{},{},{},{},{},{},{},{}\n", c.threshold_m, c.per, to_string(a.arm),
                           s.rates.full_update_hz, s.rates.switch_hz, s.rates.total_hz, opt_field(s.pte.p50),
                           opt_field(s.pte.p90), opt_field(s.pte.p99));
      }
    }
  }
  return out.str();
}

}  // namespace

std::string_view to_string(Arm a) {
  switch (a) {
    case Arm::kMbc: return "mbc";
    case Arm::kBaseline: return "baseline";
    case Arm::kBaselineMatched: return "baseline_matched";
  }
  return "mbc";
}

void ExperimentConfig::validate() const {
  schedule.validate();
  if (thresholds_m.empty()) throw ConfigError("at least one threshold is required");
  for (double t : thresholds_m) {
    if (!(t > 0.0)) throw ConfigError(fmt::format("thresholds must be positive, got {}", t));
  }
  if (pers.empty()) throw ConfigError("at least one PER is required");
  for (double p : pers) ChannelConfig{p, 0}.validate();
  if (duration_s && !(*duration_s > 0.0)) throw ConfigError("duration_s must be positive");
  if (!trace_path) scenario.validate();
}

json ExperimentConfig::to_json() const {
  json scen = mbc::to_json(scenario);
  scen["name"] = scenario_label;
  return {{"trace", trace_path ? json(*trace_path) : json(nullptr)},
          {"scenario", trace_path ? json(nullptr) : scen},
          {"duration_s", duration_s ? json(*duration_s) : json(nullptr)},
          {"thresholds_m", thresholds_m},
          {"pers", pers},
          {"schedule", schedule_json(schedule)},
          {"seed", seed}};
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown_keys(j, {"trace", "scenario", "duration_s", "thresholds_m", "pers", "schedule", "seed", "out_dir"},
                      "config");
  try {
    ExperimentConfig c;
    if (j.contains("trace") && !j.at("trace").is_null()) c.trace_path = j.at("trace").get<std::string>();
    if (j.contains("scenario") && !j.at("scenario").is_null()) {
      const auto& s = j.at("scenario");
      if (s.is_string()) {
        c.scenario_label = s.get<std::string>();
        c.scenario = synth::named_scenario(c.scenario_label);
      } else {
        json body = s;
        c.scenario_label = body.value("name", std::string("custom"));
        body.erase("name");
        c.scenario = scenario_from_json(body);
      }
    }
    if (j.contains("duration_s") && !j.at("duration_s").is_null()) c.duration_s = j.at("duration_s").get<double>();
    if (j.contains("thresholds_m")) c.thresholds_m = j.at("thresholds_m").get<std::vector<double>>();
    if (j.contains("pers")) c.pers = j.at("pers").get<std::vector<double>>();
    if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("invalid config: {}", e.what()));
  } catch (const DataError& e) {
    throw ConfigError(fmt::format("invalid config: {}", e.what()));
  }
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

std::uint64_t cell_seed(std::uint64_t master, double threshold_m, double per, Arm arm) {
  std::uint64_t s = derive_seed(master, std::bit_cast<std::uint64_t>(threshold_m));
  s = derive_seed(s, std::bit_cast<std::uint64_t>(per));
  return derive_seed(s, static_cast<std::uint64_t>(arm) + 1);
}

EnuTrajectory load_truth(const ExperimentConfig& cfg) {
  const double rate = cfg.schedule.rate_hz;
  if (cfg.trace_path) return load_trajectory(*cfg.trace_path, rate);
  auto traj = synth::generate(cfg.scenario, cfg.duration_s.value_or(cfg.scenario.default_duration()), cfg.seed);
  if (std::abs(traj.rate_hz - rate) > 1e-12) traj = resample(traj, rate);
  return traj;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult res;
  res.truth = load_truth(cfg);
  const double duration = res.truth.duration();
  if (!(duration > 0.0)) throw DataError("trace duration must be positive");

  std::vector<std::future<ThresholdRun>> jobs;
  for (double th : cfg.thresholds_m) {
    jobs.push_back(std::async(std::launch::async, [&cfg, &res, th] {
      ThresholdRun r;
      r.threshold_m = th;
      ScheduleConfig sc = cfg.schedule;
      sc.threshold_m = th;
      r.mbc = run_mbc_transmitter(res.truth, sc);
      r.baseline = run_baseline_transmitter(res.truth, sc);
      r.matched_threshold_m = match_baseline_threshold(res.truth, sc, r.mbc.count_full_updates());
      sc.threshold_m = r.matched_threshold_m;
      r.baseline_matched = run_baseline_transmitter(res.truth, sc);
      return r;
    }));
  }
  for (auto& j : jobs) res.runs.push_back(j.get());

  json cells = json::array();
  for (std::size_t ti = 0; ti < res.runs.size(); ++ti) {
    const auto& run = res.runs[ti];
    for (std::size_t pi = 0; pi < cfg.pers.size(); ++pi) {
      Cell cell{ti, pi, run.threshold_m, cfg.pers[pi], {}};
      json arms = json::object();
      for (const Arm arm : kArms) {
        ArmCell ac;
        ac.arm = arm;
        ac.channel_seed = cell_seed(cfg.seed, run.threshold_m, cell.per, arm);
        const ChannelConfig channel{cell.per, ac.channel_seed};
        const TxLog& tx = tx_of(run, arm);
        ac.delivered = delivery_mask(tx, channel);
        const TxLog rx = apply_channel(tx, channel);
        ac.pte = run_receiver(rx, res.truth);
        ac.summary = summarize_arm({tx, rx, ac.pte, threshold_of(run, arm)}, duration);
        json aj = to_json(ac.summary);
        aj["channel_seed"] = ac.channel_seed;
        arms[std::string(to_string(arm))] = std::move(aj);
        cell.arms.push_back(std::move(ac));
      }
      cells.push_back({{"threshold_m", cell.threshold_m}, {"per", cell.per}, {"arms", std::move(arms)}});
      res.cells.push_back(std::move(cell));
    }
  }

  res.report = {{"tool", {{"name", kToolName}, {"version", kToolVersion}}},
                {"seed", cfg.seed},
                {"config", cfg.to_json()},
                {"trace",
                 {{"samples", res.truth.samples.size()}, {"duration_s", duration}, {"rate_hz", res.truth.rate_hz}}},
                {"cells", std::move(cells)}};
  return res;
}

void cmd_run(const ExperimentConfig& cfg) {
  const auto res = run_experiment(cfg);
  StagedOutput out(cfg.out_dir);
  out.write("report.json", res.report.dump(2) + "\n");
  out.write("rates.csv", rates_csv(res, false));

  std::ostringstream pte_csv, msg_csv, dec_csv;
  pte_csv << "t,pte,arm,per,threshold\n";
  msg_csv << "threshold,per,arm,seq,t,kind,delivered,payload\n";
  dec_csv << "threshold,arm,t,pte_cv,pte_gp,pte_min,action\n";
  for (const auto& c : res.cells) {
    const auto& run = res.runs[c.threshold_index];
    for (const auto& a : c.arms) {
      for (const auto& s : a.pte.samples) {
        pte_csv << fmt::format("{},{},{},{},{}\n", s.t, s.pte, to_string(a.arm), c.per, c.threshold_m);
      }
      const auto& tx = tx_of(run, a.arm);
      for (std::size_t i = 0; i < tx.messages.size(); ++i) {
        const auto& m = tx.messages[i];
        msg_csv << fmt::format("{},{},{},{},{},{},{},{}\n", c.threshold_m, c.per, to_string(a.arm), m.seq, m.tx_t,
                               m.kind_name(), a.delivered[i] ? 1 : 0, csv_quote(payload_json(m).dump()));
      }
    }
  }
  for (const auto& run : res.runs) {
    for (const Arm arm : kArms) {
      for (const auto& d : tx_of(run, arm).decisions) {
        dec_csv << fmt::format("{},{},{},{},{},{},{}\n", run.threshold_m, to_string(arm), d.t, d.pte_cv, d.pte_gp,
                               d.pte_min, to_string(d.action));
      }
    }
  }
  out.write("pte.csv", pte_csv.str());
  out.write("messages.csv", msg_csv.str());
  out.write("decisions.csv", dec_csv.str());
  out.commit();
}

void cmd_sweep(const ExperimentConfig& cfg) {
  const auto res = run_experiment(cfg);
  StagedOutput out(cfg.out_dir);
  out.write("report.json", res.report.dump(2) + "\n");
  out.write("rates.csv", rates_csv(res, false));
  out.write("pte_percentiles.csv", rates_csv(res, true));
  out.commit();
}

void cmd_synth(const synth::ScenarioSpec& spec, double duration_s, std::uint64_t seed, const fs::path& out) {
  const auto traj = synth::generate(spec, duration_s, seed);
  std::ostringstream csv;
  write_enu_csv(csv, traj);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const fs::path tmp = out.string() + ".partial";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << csv.str();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw ConfigError(fmt::format("cannot write '{}'", out.string()));
    }
  }
  fs::rename(tmp, out);
}

}  // namespace mbc
