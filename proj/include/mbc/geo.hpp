#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace mbc {

// WGS-84 ellipsoid.
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;

struct GeodeticFix {
  double t = 0.0;    // s
  double lat = 0.0;  // deg
  double lon = 0.0;  // deg
  double alt = 0.0;  // m above ellipsoid
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Enu {
  double x = 0.0;  // East, m
  double y = 0.0;  // North, m
  double z = 0.0;  // Up, m
};

struct EnuSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;

  Vec2 pos() const { return {x, y}; }
};

/// Time-stamped 2D positions in a local East-North frame.
///
/// Timestamps are strictly increasing. After resample() the spacing is
/// 1/rate_hz to within 1e-9 s.
struct EnuTrajectory {
  GeodeticFix reference;
  std::vector<EnuSample> samples;
  double rate_hz = 10.0;

  double duration() const {
    return samples.empty() ? 0.0 : samples.back().t - samples.front().t;
  }
  /// True when consecutive deltas equal 1/rate_hz within `tol` seconds.
  bool is_uniform(double tol = 1e-9) const;
};

enum class TraceFormat { kGeodetic, kEnu };

using ParsedTrace = std::variant<std::vector<GeodeticFix>, EnuTrajectory>;

/// Parses a header-bearing CSV trace. Throws DataError on a missing header,
/// a malformed row, an empty data section or non-increasing timestamps; the
/// message names the 1-based file line.
ParsedTrace parse_trace(std::istream& in, TraceFormat format);

/// Reads the header line to decide between the geodetic and ENU layouts.
TraceFormat detect_format(std::istream& in);

/// Geodetic -> ECEF -> ENU about `reference`.
Enu geodetic_to_enu(const GeodeticFix& fix, const GeodeticFix& reference);

/// Converts a geodetic trace to ENU using its first fix as the frame origin.
/// Elevation is dropped. The result is not resampled.
EnuTrajectory to_enu_trajectory(const std::vector<GeodeticFix>& fixes, double rate_hz = 10.0);

/// Linear interpolation onto the grid t0 + k / rate_hz.
EnuTrajectory resample(const EnuTrajectory& traj, double rate_hz);

/// Loads either CSV layout from disk and returns a uniform trajectory.
EnuTrajectory load_trajectory(const std::string& path, double rate_hz = 10.0);

/// Writes the `t,x,y` layout. Values are printed with round-trip precision.
void write_enu_csv(std::ostream& out, const EnuTrajectory& traj);

}  // namespace mbc
