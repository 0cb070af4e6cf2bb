#include "mbc/scheduler.hpp"

#include <cmath>
#include <limits>

#include <spdlog/fmt/fmt.h>

#include "mbc/errors.hpp"

namespace mbc {
namespace {

constexpr double kGridTolerance = 1e-6;

void check_trajectory(const EnuTrajectory& traj, const ScheduleConfig& cfg, std::size_t min_len) {
  if (traj.samples.size() < min_len) {
    throw DataError(fmt::format("trajectory has {} samples, need at least {}", traj.samples.size(),
                                min_len));
  }
  const double step = 1.0 / cfg.rate_hz;
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    if (std::abs(traj.samples[i].t - traj.samples[i - 1].t - step) > kGridTolerance) {
      throw DataError(fmt::format("trajectory is not uniform at {} Hz near t={}", cfg.rate_hz,
                                  traj.samples[i].t));
    }
  }
}

bool keepalive_due(const ScheduleConfig& cfg, double t, double last_tx) {
  return cfg.keepalive_s && t - last_tx >= *cfg.keepalive_s - 1e-9;
}

class Emitter {
 public:
  explicit Emitter(TxLog& log) : log_(log) {}
  template <class Kind>
  void emit(double t, Kind kind) {
    log_.messages.push_back({next_seq_++, t, std::move(kind)});
  }

 private:
  TxLog& log_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace

void ScheduleConfig::validate() const {
  if (!(threshold_m > 0.0)) throw ConfigError(fmt::format("threshold must be positive, got {}", threshold_m));
  if (window < 2) throw ConfigError(fmt::format("window must be at least 2, got {}", window));
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) throw ConfigError("rate_hz must be positive");
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) throw ConfigError("noise_var must be >= 0");
  if (keepalive_s && !(*keepalive_s > 0.0)) throw ConfigError("keepalive_s must be positive");
}

std::string_view to_string(SwitchPolicy p) {
  return p == SwitchPolicy::kArgmin ? "argmin" : "on_violation";
}

SwitchPolicy switch_policy_from_string(std::string_view s) {
  if (s == "argmin") return SwitchPolicy::kArgmin;
  if (s == "on_violation") return SwitchPolicy::kOnViolation;
  throw ConfigError(fmt::format("unknown switch policy '{}'", s));
}

GpFitOptions ScheduleConfig::gp_options() const {
  return {kernel_template, noise_var, bounds, !freeze_hyperparams};
}

std::string_view ModelMessage::kind_name() const {
  if (is_full_update()) return "full_update";
  if (is_switch()) return "switch";
  return "raw_bsm";
}

std::string_view to_string(TxAction a) {
  switch (a) {
    case TxAction::kNone: return "none";
    case TxAction::kInitial: return "initial";
    case TxAction::kFullUpdate: return "full_update";
    case TxAction::kKeepalive: return "keepalive";
    case TxAction::kSwitch: return "switch";
    case TxAction::kRawBsm: return "raw_bsm";
  }
  return "none";
}

std::size_t TxLog::count_full_updates() const {
  std::size_t n = 0;
  for (const auto& m : messages) n += m.is_full_update() || m.is_raw();
  return n;
}

std::size_t TxLog::count_switches() const {
  std::size_t n = 0;
  for (const auto& m : messages) n += m.is_switch();
  return n;
}

TxLog run_mbc_transmitter(const EnuTrajectory& traj, const ScheduleConfig& cfg) {
  cfg.validate();
  check_trajectory(traj, cfg, cfg.window + 1);
  const auto& s = traj.samples;
  const auto w = cfg.window;
  const auto options = cfg.gp_options();
  auto window_ending_at = [&](std::size_t k) {
    return std::span<const EnuSample>(s).subspan(k + 1 - w, w);
  };

  TxLog log;
  Emitter out(log);

  auto retrain = [&](std::size_t k) {
    HybridModel fresh = fit_hybrid(window_ending_at(k), options);
    fresh.active = select_sub_model(fresh, s[k]).active;
    return fresh;
  };

  HybridModel held = retrain(w - 1);
  {
    const auto sel = select_sub_model(held, s[w - 1]);
    log.decisions.push_back({s[w - 1].t, sel.pte_cv, sel.pte_gp, sel.pte_min(), TxAction::kInitial});
    out.emit(s[w - 1].t, FullUpdate{held});
  }
  double last_full_t = s[w - 1].t;

  for (std::size_t k = w; k < s.size(); ++k) {
    const auto sel = select_sub_model(held, s[k]);
    Decision d{s[k].t, sel.pte_cv, sel.pte_gp, sel.pte_min(), TxAction::kNone};
    const bool violated = sel.pte_min() >= cfg.threshold_m;
    if (violated || keepalive_due(cfg, s[k].t, last_full_t)) {
      held = retrain(k);
      out.emit(s[k].t, FullUpdate{held});
      last_full_t = s[k].t;
      d.action = violated ? TxAction::kFullUpdate : TxAction::kKeepalive;
    } else if (sel.active != held.active &&
               (cfg.switch_policy == SwitchPolicy::kArgmin ||
                (held.active == SubModel::kCv ? sel.pte_cv : sel.pte_gp) >= cfg.threshold_m)) {
      held.active = sel.active;
      out.emit(s[k].t, SubModelSwitch{sel.active});
      d.action = TxAction::kSwitch;
    }
    log.decisions.push_back(d);
  }
  return log;
}

TxLog run_baseline_transmitter(const EnuTrajectory& traj, const ScheduleConfig& cfg) {
  cfg.validate();
  check_trajectory(traj, cfg, 2);
  const auto& s = traj.samples;
  constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

  TxLog log;
  Emitter out(log);
  auto bsm_at = [&](std::size_t k) { return fit_cv(std::span<const EnuSample>(s).subspan(k - 1, 2)); };

  CvModel held = bsm_at(1);
  out.emit(s[1].t, RawBsm{held.anchor_pos, held.velocity});
  log.decisions.push_back({s[1].t, 0.0, kNan, 0.0, TxAction::kRawBsm});

  for (std::size_t k = 2; k < s.size(); ++k) {
    const double err = pte(held.predict(s[k].t), s[k].pos());
    Decision d{s[k].t, err, kNan, err, TxAction::kNone};
    if (err >= cfg.threshold_m || keepalive_due(cfg, s[k].t, held.anchor_t)) {
      held = bsm_at(k);
      out.emit(s[k].t, RawBsm{held.anchor_pos, held.velocity});
      d.action = TxAction::kRawBsm;
    }
    log.decisions.push_back(d);
  }
  return log;
}

Rates effective_rates(const TxLog& log, double duration_s) {
  if (!(duration_s > 0.0)) throw ConfigError("rate duration must be positive");
  Rates r;
  r.full_update_hz = static_cast<double>(log.count_full_updates()) / duration_s;
  r.switch_hz = static_cast<double>(log.count_switches()) / duration_s;
  r.total_hz = r.full_update_hz + r.switch_hz;
  return r;
}

}  // namespace mbc
