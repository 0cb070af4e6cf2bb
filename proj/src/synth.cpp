#include "mbc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <spdlog/fmt/fmt.h>

#include "mbc/errors.hpp"

namespace mbc::synth {
namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(fmt::format("scenario {} must be positive, got {}", what, v));
  }
}

void validate_maneuver(const Maneuver& m) {
  std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Cruise>) {
          if (!(k.speed >= 0.0) || !std::isfinite(k.speed)) throw ConfigError("cruise speed must be >= 0");
        } else if constexpr (std::is_same_v<T, LaneChange>) {
          require_positive(k.speed, "lane-change speed");
          require_positive(std::abs(k.lateral_m), "lane-change lateral offset");
          require_positive(k.duration_s, "lane-change duration");
        } else {
          require_positive(k.v0, "brake initial speed");
          require_positive(k.decel, "brake deceleration");
        }
      },
      m);
}

// Displacement after `tau` seconds of the maneuver.
Vec2 displacement(const Maneuver& m, double tau) {
  return std::visit(
      [tau](const auto& k) -> Vec2 {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Cruise>) {
          return {k.speed * tau, 0.0};
        } else if constexpr (std::is_same_v<T, LaneChange>) {
          const double u = std::clamp(tau / k.duration_s, 0.0, 1.0);
          return {k.speed * tau, k.lateral_m * u * u * (3.0 - 2.0 * u)};
        } else {
          const double t = std::min(tau, k.v0 / k.decel);
          return {k.v0 * t - 0.5 * k.decel * t * t, 0.0};
        }
      },
      m);
}

std::vector<Segment> as_segments(const ScenarioSpec& spec, double duration_s) {
  if (const auto* mixed = std::get_if<Mixed>(&spec.kind)) return mixed->segments;
  return std::visit(
      [&](const auto& k) -> std::vector<Segment> {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Mixed>) {
          return {};
        } else {
          return {Segment{k, duration_s}};
        }
      },
      spec.kind);
}

}  // namespace

void ScenarioSpec::validate() const {
  require_positive(rate_hz, "rate_hz");
  if (!(noise_std_m >= 0.0) || !std::isfinite(noise_std_m)) throw ConfigError("noise_std_m must be >= 0");
  if (const auto* mixed = std::get_if<Mixed>(&kind)) {
    if (mixed->segments.empty()) throw ConfigError("mixed scenario needs at least one segment");
    for (const auto& s : mixed->segments) {
      validate_maneuver(s.maneuver);
      require_positive(s.duration_s, "segment duration");
    }
  } else {
    std::visit(
        [](const auto& k) {
          if constexpr (!std::is_same_v<std::decay_t<decltype(k)>, Mixed>) validate_maneuver(Maneuver{k});
        },
        kind);
  }
}

double ScenarioSpec::default_duration() const {
  if (const auto* mixed = std::get_if<Mixed>(&kind)) {
    double total = 0.0;
    for (const auto& s : mixed->segments) total += s.duration_s;
    return total;
  }
  return 20.0;
}

ScenarioSpec named_scenario(std::string_view name) {
  if (name == "cruise") return {Cruise{10.0}};
  if (name == "lane-change") return {LaneChange{10.0, 3.5, 3.0}};
  if (name == "hard-brake") return {HardBrake{20.0, 5.0}};
  if (name == "mixed-demo") {
    return {Mixed{{
        {Cruise{10.0}, 10.0},
        {LaneChange{10.0, 3.5, 3.0}, 3.0},
        {Cruise{10.0}, 5.0},
        {HardBrake{10.0, 5.0}, 4.0},
    }}};
  }
  throw ConfigError(fmt::format("unknown scenario '{}'", name));
}

std::vector<std::string_view> scenario_names() {
  return {"cruise", "lane-change", "hard-brake", "mixed-demo"};
}

EnuTrajectory generate(const ScenarioSpec& spec, double duration_s, std::uint64_t seed) {
  spec.validate();
  require_positive(duration_s, "duration");
  const auto segments = as_segments(spec, duration_s);

  // Start time and start position of each segment.
  std::vector<double> starts{0.0};
  std::vector<Vec2> origins{{0.0, 0.0}};
  for (std::size_t i = 0; i + 1 < segments.size(); ++i) {
    const Vec2 d = displacement(segments[i].maneuver, segments[i].duration_s);
    starts.push_back(starts.back() + segments[i].duration_s);
    origins.push_back({origins.back().x + d.x, origins.back().y + d.y});
  }

  EnuTrajectory out;
  out.rate_hz = spec.rate_hz;
  const auto count = static_cast<std::size_t>(std::floor(duration_s * spec.rate_hz + 1e-9)) + 1;
  out.samples.reserve(count);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / spec.rate_hz;
    while (seg + 1 < segments.size() && t >= starts[seg + 1]) ++seg;
    const Vec2 d = displacement(segments[seg].maneuver, t - starts[seg]);
    EnuSample s{t, origins[seg].x + d.x, origins[seg].y + d.y};
    if (spec.noise_std_m > 0.0) {
      s.x += spec.noise_std_m * noise(rng);
      s.y += spec.noise_std_m * noise(rng);
    }
    out.samples.push_back(s);
  }
  return out;
}

}  // namespace mbc::synth
