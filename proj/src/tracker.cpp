#include "mbc/tracker.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/fmt/fmt.h>

#include "mbc/errors.hpp"

namespace mbc {

void ReceiverState::apply(const ModelMessage& msg) {
  if (const auto* full = std::get_if<FullUpdate>(&msg.kind)) {
    last_full = full->hybrid;
    last_full_t = msg.tx_t;
    active_override.reset();
  } else if (const auto* sw = std::get_if<SubModelSwitch>(&msg.kind)) {
    active_override = sw->active;
  } else {
    last_raw = std::get<RawBsm>(msg.kind);
    last_raw_t = msg.tx_t;
  }
}

Vec2 ReceiverState::predict(double t) const {
  if (last_full) return last_full->predict(t, active_override.value_or(last_full->active));
  const CvModel coast{last_raw_t, last_raw->pos, last_raw->vel};
  return coast.predict(t);
}

std::vector<double> PteSeries::values() const {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.pte);
  return v;
}

PteSeries run_receiver(const TxLog& delivered, const EnuTrajectory& truth) {
  const auto& msgs = delivered.messages;
  const bool any_raw = std::any_of(msgs.begin(), msgs.end(), [](const auto& m) { return m.is_raw(); });
  const bool any_model = std::any_of(msgs.begin(), msgs.end(), [](const auto& m) { return !m.is_raw(); });
  if (any_raw && any_model) throw DataError("delivered log mixes raw BSMs and model messages");

  PteSeries out;
  ReceiverState state;
  std::size_t next = 0;
  constexpr double kTol = 1e-6;
  for (const auto& truth_sample : truth.samples) {
    bool updated = false;
    while (next < msgs.size() && msgs[next].tx_t <= truth_sample.t + kTol) {
      if (std::abs(msgs[next].tx_t - truth_sample.t) > kTol) {
        throw DataError(fmt::format("message {} at t={} is not on the truth grid", msgs[next].seq,
                                    msgs[next].tx_t));
      }
      state.apply(msgs[next]);
      updated = updated || !msgs[next].is_switch();
      ++next;
    }
    if (!state.has_information()) continue;
    out.samples.push_back(
        {truth_sample.t, pte(state.predict(truth_sample.t), truth_sample.pos()), true, updated});
  }
  if (next != msgs.size()) throw DataError("delivered messages extend past the end of the truth trace");
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("percentile of an empty series");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError(fmt::format("percentile fraction must lie in (0, 1], got {}", p));
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

double percentile(const PteSeries& series, double p) { return percentile(series.values(), p); }

std::vector<EcdfPoint> ecdf(const PteSeries& series) {
  auto v = series.values();
  std::sort(v.begin(), v.end());
  std::vector<EcdfPoint> out;
  const auto n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    out.push_back({v[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

PteStats pte_stats(const PteSeries& series) {
  PteStats s;
  s.n = series.samples.size();
  if (s.n == 0) return s;
  const auto v = series.values();
  s.p50 = percentile(v, 0.5);
  s.p90 = percentile(v, 0.9);
  s.p99 = percentile(v, 0.99);
  return s;
}

ArmSummary summarize_arm(const ArmRun& arm, double duration_s) {
  ArmSummary s;
  s.threshold_m = arm.threshold_m;
  s.rates = effective_rates(arm.transmitted, duration_s);
  s.transmitted = arm.transmitted.messages.size();
  s.delivered = arm.delivered.messages.size();
  s.pte = pte_stats(arm.pte);
  s.ecdf = ecdf(arm.pte);
  return s;
}

TrackingReport summarize(const ArmRun& mbc, const ArmRun& baseline, double duration_s) {
  return {summarize_arm(mbc, duration_s), summarize_arm(baseline, duration_s)};
}

double match_baseline_threshold(const EnuTrajectory& traj, const ScheduleConfig& cfg,
                                std::size_t target_count) {
  auto count_at = [&](double log_th) {
    ScheduleConfig c = cfg;
    c.threshold_m = std::exp(log_th);
    return run_baseline_transmitter(traj, c).messages.size();
  };
  auto distance = [&](std::size_t c) {
    return c > target_count ? c - target_count : target_count - c;
  };

  double lo = std::log(1e-4);
  double hi = std::log(1e3);
  double best = hi;
  std::size_t best_dist = distance(count_at(hi));
  for (int iter = 0; iter < 60 && best_dist > 0; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const auto c = count_at(mid);
    if (distance(c) < best_dist) {
      best_dist = distance(c);
      best = mid;
    }
    if (c > target_count) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::exp(best);
}

}  // namespace mbc
