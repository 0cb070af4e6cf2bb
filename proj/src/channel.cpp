#include "mbc/channel.hpp"

#include <spdlog/fmt/fmt.h>

#include "mbc/errors.hpp"

namespace mbc {

void ChannelConfig::validate() const {
  if (!(per >= 0.0 && per <= 1.0)) throw ConfigError(fmt::format("PER must lie in [0, 1], got {}", per));
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
  return mix64(mix64(seed) ^ (key + 0x632be59bd9b4e019ULL));
}

bool is_delivered(std::uint64_t seed, std::uint64_t seq, double per) {
  if (per <= 0.0) return true;
  if (per >= 1.0) return false;
  const double u = static_cast<double>(derive_seed(seed, seq) >> 11) * 0x1.0p-53;
  return u >= per;
}

std::vector<bool> delivery_mask(const TxLog& log, const ChannelConfig& cfg) {
  cfg.validate();
  std::vector<bool> mask;
  mask.reserve(log.messages.size());
  for (const auto& m : log.messages) mask.push_back(is_delivered(cfg.seed, m.seq, cfg.per));
  return mask;
}

TxLog apply_channel(const TxLog& log, const ChannelConfig& cfg) {
  const auto mask = delivery_mask(log, cfg);
  TxLog out;
  out.decisions = log.decisions;
  for (std::size_t i = 0; i < log.messages.size(); ++i) {
    if (mask[i]) out.messages.push_back(log.messages[i]);
  }
  return out;
}

}  // namespace mbc
