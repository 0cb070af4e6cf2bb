#pragma once

namespace mbc {
inline constexpr const char* kToolName = "mbcsim";
inline constexpr const char* kToolVersion = "0.1.0";
}  // namespace mbc
