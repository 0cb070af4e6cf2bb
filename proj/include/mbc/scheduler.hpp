#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "mbc/geo.hpp"
#include "mbc/models.hpp"

namespace mbc {

/// When the transmitter announces a sub-model change between full updates.
///   kArgmin:      whenever the better sub-model differs from the active one.
///   kOnViolation: only when the active sub-model breaches the threshold and
///                 the other one still holds.
enum class SwitchPolicy { kArgmin, kOnViolation };
std::string_view to_string(SwitchPolicy p);
SwitchPolicy switch_policy_from_string(std::string_view s);

struct ScheduleConfig {
  double threshold_m = 0.5;
  std::size_t window = 10;
  double rate_hz = 10.0;
  double noise_var = 1e-6;
  gp::KernelSpec kernel_template = gp::KernelSpec::linear_plus_rbf();
  gp::HyperBounds bounds;
  bool freeze_hyperparams = false;
  std::optional<double> keepalive_s;
  SwitchPolicy switch_policy = SwitchPolicy::kOnViolation;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
  GpFitOptions gp_options() const;
};

struct FullUpdate {
  HybridModel hybrid;
};
struct SubModelSwitch {
  SubModel active = SubModel::kCv;
};
struct RawBsm {
  Vec2 pos;
  Vec2 vel;
};

struct ModelMessage {
  std::uint64_t seq = 0;
  double tx_t = 0.0;
  std::variant<FullUpdate, SubModelSwitch, RawBsm> kind;

  bool is_full_update() const { return std::holds_alternative<FullUpdate>(kind); }
  bool is_switch() const { return std::holds_alternative<SubModelSwitch>(kind); }
  bool is_raw() const { return std::holds_alternative<RawBsm>(kind); }
  std::string_view kind_name() const;
};

enum class TxAction { kNone, kInitial, kFullUpdate, kKeepalive, kSwitch, kRawBsm };
std::string_view to_string(TxAction a);

/// Per-instant record of what the transmitter saw and did. For the baseline
/// arm `pte_cv` is the coasting error and `pte_gp` is NaN.
struct Decision {
  double t = 0.0;
  double pte_cv = 0.0;
  double pte_gp = 0.0;
  double pte_min = 0.0;
  TxAction action = TxAction::kNone;
};

struct TxLog {
  std::vector<ModelMessage> messages;
  std::vector<Decision> decisions;

  std::size_t count_full_updates() const;
  std::size_t count_switches() const;
};

/// Error-driven hybrid model transmitter.
///
/// Nothing is sent until the first complete window; the first FullUpdate goes
/// out at that instant. At every later grid instant the last transmitted
/// hybrid is scored against the actual position. If neither sub-model is
/// under the threshold, both are retrained on the latest window and a
/// FullUpdate is sent. Otherwise a SubModelSwitch is sent when the better
/// sub-model differs from the active one, subject to cfg.switch_policy. Throws DataError if the
/// trajectory is not uniform at cfg.rate_hz or has no more than cfg.window
/// samples.
TxLog run_mbc_transmitter(const EnuTrajectory& traj, const ScheduleConfig& cfg);

/// Raw-BSM baseline with constant-velocity coasting. Transmits at the second
/// sample (the first with a velocity) and whenever the coasting error of the
/// last transmitted BSM reaches the threshold.
TxLog run_baseline_transmitter(const EnuTrajectory& traj, const ScheduleConfig& cfg);

struct Rates {
  double full_update_hz = 0.0;
  double switch_hz = 0.0;
  double total_hz = 0.0;
};

/// FullUpdate and RawBsm messages both count toward full_update_hz.
Rates effective_rates(const TxLog& log, double duration_s);

}  // namespace mbc
