#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "mbc/geo.hpp"

namespace mbc::synth {

struct Cruise {
  double speed = 10.0;  // m/s, along East
};

/// Constant forward speed with a smoothstep (3u^2 - 2u^3) lateral shift of
/// `lateral_m` over `duration_s`.
struct LaneChange {
  double speed = 10.0;
  double lateral_m = 3.5;
  double duration_s = 3.0;
};

/// Constant deceleration from v0 until standstill, then stationary.
struct HardBrake {
  double v0 = 20.0;
  double decel = 5.0;
};

using Maneuver = std::variant<Cruise, LaneChange, HardBrake>;

struct Segment {
  Maneuver maneuver;
  double duration_s = 1.0;
};

/// Segments played back to back; each starts where the previous one ended.
struct Mixed {
  std::vector<Segment> segments;
};

struct ScenarioSpec {
  std::variant<Cruise, LaneChange, HardBrake, Mixed> kind;
  double rate_hz = 10.0;
  double noise_std_m = 0.0;

  /// Throws ConfigError on non-positive physical parameters.
  void validate() const;
  /// Sum of segment durations for Mixed; 20 s otherwise.
  double default_duration() const;
};

/// `cruise`, `lane-change`, `hard-brake` or `mixed-demo`; ConfigError otherwise.
ScenarioSpec named_scenario(std::string_view name);
std::vector<std::string_view> scenario_names();

/// Samples closed-form kinematics at t = k / rate_hz for t in [0, duration_s].
/// Gaussian position noise, when enabled, is drawn from a generator seeded
/// with `seed`; without noise the output does not depend on the seed.
EnuTrajectory generate(const ScenarioSpec& spec, double duration_s, std::uint64_t seed);

}  // namespace mbc::synth
