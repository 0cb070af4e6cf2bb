#pragma once

#include <optional>
#include <vector>

#include "mbc/geo.hpp"
#include "mbc/models.hpp"
#include "mbc/scheduler.hpp"

namespace mbc {

/// What the host vehicle currently knows about the remote vehicle.
struct ReceiverState {
  std::optional<HybridModel> last_full;
  double last_full_t = 0.0;
  std::optional<SubModel> active_override;  // cleared by each FullUpdate
  std::optional<RawBsm> last_raw;
  double last_raw_t = 0.0;

  void apply(const ModelMessage& msg);
  bool has_information() const { return last_full || last_raw; }
  /// Position estimate at t; requires has_information().
  Vec2 predict(double t) const;
};

struct PteSample {
  double t = 0.0;
  double pte = 0.0;
  bool had_model = true;
  bool updated = false;  // a FullUpdate or RawBsm was applied at this instant
};

struct PteSeries {
  std::vector<PteSample> samples;

  std::vector<double> values() const;
};

/// Replays the delivered messages against ground truth. Instants before the
/// first delivery are not part of the series. Throws DataError if a message
/// timestamp is off the truth grid or the log mixes raw and model messages.
PteSeries run_receiver(const TxLog& delivered, const EnuTrajectory& truth);

/// Nearest-rank percentile: the ceil(p * n)-th smallest value, 0 < p <= 1.
double percentile(const PteSeries& series, double p);
double percentile(std::vector<double> values, double p);

struct EcdfPoint {
  double pte = 0.0;
  double fraction = 0.0;  // P(PTE <= pte)
};

/// Right-continuous step points, one per distinct value, ascending.
std::vector<EcdfPoint> ecdf(const PteSeries& series);

struct PteStats {
  std::size_t n = 0;
  std::optional<double> p50, p90, p99;  // empty when n == 0
};

PteStats pte_stats(const PteSeries& series);

struct ArmRun {
  const TxLog& transmitted;
  const TxLog& delivered;
  const PteSeries& pte;
  double threshold_m;
};

struct ArmSummary {
  double threshold_m = 0.0;
  Rates rates;
  std::size_t transmitted = 0;
  std::size_t delivered = 0;
  PteStats pte;
  std::vector<EcdfPoint> ecdf;
};

struct TrackingReport {
  ArmSummary mbc;
  ArmSummary baseline;
};

ArmSummary summarize_arm(const ArmRun& arm, double duration_s);
TrackingReport summarize(const ArmRun& mbc, const ArmRun& baseline, double duration_s);

/// Baseline threshold whose message count is closest to `target_count`,
/// found by bisection over log(threshold) in [1e-4, 1e3] m.
double match_baseline_threshold(const EnuTrajectory& traj, const ScheduleConfig& cfg,
                                std::size_t target_count);

}  // namespace mbc
