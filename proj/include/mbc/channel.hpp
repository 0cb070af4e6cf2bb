#pragma once

#include <cstdint>
#include <vector>

#include "mbc/scheduler.hpp"

namespace mbc {

struct ChannelConfig {
  double per = 0.0;  // packet error ratio in [0, 1]
  std::uint64_t seed = 0;

  void validate() const;
};

/// SplitMix64 finalizer. Stable across platforms and releases.
std::uint64_t mix64(std::uint64_t x);
/// Order-sensitive combination of a seed with one more key.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key);

/// Whether the message with sequence number `seq` survives. Depends only on
/// (seed, seq, per), so a message's fate does not change with log length.
bool is_delivered(std::uint64_t seed, std::uint64_t seq, double per);

/// One flag per transmitted message.
std::vector<bool> delivery_mask(const TxLog& log, const ChannelConfig& cfg);

/// Drops each message independently with probability cfg.per. Delivered
/// messages keep their order and timestamps; decisions are copied unchanged.
TxLog apply_channel(const TxLog& log, const ChannelConfig& cfg);

}  // namespace mbc
