#include "mbc/geo.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <string_view>

#include <spdlog/fmt/fmt.h>

#include "mbc/errors.hpp"

namespace mbc {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw DataError(fmt::format("line {}: malformed number '{}'", line_no, field));
  }
  return value;
}

std::vector<std::string_view> expected_header(TraceFormat format) {
  if (format == TraceFormat::kGeodetic) return {"t", "lat", "lon", "alt"};
  return {"t", "x", "y"};
}

struct Row {
  std::size_t line_no;
  std::vector<double> values;
};

// Validates the header and timestamp monotonicity.
std::vector<Row> read_rows(std::istream& in, TraceFormat format) {
  const auto header = expected_header(format);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (trim(line).empty()) continue;
    if (split(line) != header) {
      throw DataError(fmt::format("line {}: missing header, expected '{}'", line_no,
                                  fmt::join(header, ",")));
    }
    have_header = true;
    break;
  }
  if (!have_header) throw DataError("missing header");

  std::vector<Row> rows;
  double last_t = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw DataError(fmt::format("line {}: expected {} fields, got {}", line_no, header.size(),
                                  fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto f : fields) row.push_back(parse_number(f, line_no));
    if (!rows.empty() && !(row[0] > last_t)) {
      throw DataError(fmt::format("line {}: non-monotone timestamp {} after {}", line_no, row[0],
                                  last_t));
    }
    last_t = row[0];
    rows.push_back({line_no, std::move(row)});
  }
  if (rows.empty()) throw DataError("empty trace");
  return rows;
}

struct Ecef {
  double x, y, z;
};

Ecef to_ecef(const GeodeticFix& fix) {
  const double e2 = kWgs84F * (2.0 - kWgs84F);
  const double lat = fix.lat * kDeg;
  const double lon = fix.lon * kDeg;
  const double slat = std::sin(lat);
  const double clat = std::cos(lat);
  const double n = kWgs84A / std::sqrt(1.0 - e2 * slat * slat);
  return {(n + fix.alt) * clat * std::cos(lon), (n + fix.alt) * clat * std::sin(lon),
          (n * (1.0 - e2) + fix.alt) * slat};
}

}  // namespace

bool EnuTrajectory::is_uniform(double tol) const {
  const double step = 1.0 / rate_hz;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (std::abs(samples[i].t - samples[i - 1].t - step) > tol) return false;
  }
  return !samples.empty();
}

ParsedTrace parse_trace(std::istream& in, TraceFormat format) {
  const auto rows = read_rows(in, format);
  if (format == TraceFormat::kGeodetic) {
    std::vector<GeodeticFix> fixes;
    fixes.reserve(rows.size());
    for (const auto& [line_no, r] : rows) {
      if (r[1] < -90.0 || r[1] > 90.0 || r[2] < -180.0 || r[2] > 180.0) {
        throw DataError(fmt::format("line {}: latitude/longitude out of range", line_no));
      }
      fixes.push_back({r[0], r[1], r[2], r[3]});
    }
    return fixes;
  }
  EnuTrajectory traj;
  traj.samples.reserve(rows.size());
  for (const auto& [line_no, r] : rows) traj.samples.push_back({r[0], r[1], r[2]});
  return traj;
}

TraceFormat detect_format(std::istream& in) {
  const auto pos = in.tellg();
  std::string line;
  while (std::getline(in, line) && trim(line).empty()) {
  }
  in.clear();
  in.seekg(pos);
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  const auto fields = split(line);
  if (fields == expected_header(TraceFormat::kGeodetic)) return TraceFormat::kGeodetic;
  if (fields == expected_header(TraceFormat::kEnu)) return TraceFormat::kEnu;
  throw DataError("missing header: expected 't,lat,lon,alt' or 't,x,y'");
}

Enu geodetic_to_enu(const GeodeticFix& fix, const GeodeticFix& reference) {
  const Ecef p = to_ecef(fix);
  const Ecef r = to_ecef(reference);
  const double dx = p.x - r.x;
  const double dy = p.y - r.y;
  const double dz = p.z - r.z;
  const double lat = reference.lat * kDeg;
  const double lon = reference.lon * kDeg;
  const double slat = std::sin(lat), clat = std::cos(lat);
  const double slon = std::sin(lon), clon = std::cos(lon);
  return {-slon * dx + clon * dy,
          -slat * clon * dx - slat * slon * dy + clat * dz,
          clat * clon * dx + clat * slon * dy + slat * dz};
}

EnuTrajectory to_enu_trajectory(const std::vector<GeodeticFix>& fixes, double rate_hz) {
  if (fixes.empty()) throw DataError("empty trace");
  EnuTrajectory traj;
  traj.reference = fixes.front();
  traj.rate_hz = rate_hz;
  traj.samples.reserve(fixes.size());
  for (const auto& f : fixes) {
    const Enu e = geodetic_to_enu(f, traj.reference);
    traj.samples.push_back({f.t, e.x, e.y});
  }
  return traj;
}

EnuTrajectory resample(const EnuTrajectory& traj, double rate_hz) {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw ConfigError(fmt::format("resample rate must be positive, got {}", rate_hz));
  }
  if (traj.samples.size() < 2) throw DataError("resample needs at least 2 samples");

  const auto& in = traj.samples;
  const double t0 = in.front().t;
  const double span = in.back().t - t0;
  const auto count = static_cast<std::size_t>(std::floor(span * rate_hz + 1e-9)) + 1;

  EnuTrajectory out;
  out.reference = traj.reference;
  out.rate_hz = rate_hz;
  out.samples.reserve(count);
  std::size_t j = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = t0 + static_cast<double>(k) / rate_hz;
    while (j + 2 < in.size() && in[j + 1].t <= t) ++j;
    const auto& a = in[j];
    const auto& b = in[j + 1];
    // Grid points that coincide with an input sample copy it verbatim.
    if (std::abs(t - a.t) <= 1e-9) {
      out.samples.push_back({t, a.x, a.y});
    } else if (std::abs(t - b.t) <= 1e-9) {
      out.samples.push_back({t, b.x, b.y});
    } else {
      const double w = (t - a.t) / (b.t - a.t);
      out.samples.push_back({t, a.x + w * (b.x - a.x), a.y + w * (b.y - a.y)});
    }
  }
  return out;
}

EnuTrajectory load_trajectory(const std::string& path, double rate_hz) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open trace '{}'", path));
  const auto format = detect_format(in);
  auto parsed = parse_trace(in, format);
  EnuTrajectory traj = format == TraceFormat::kGeodetic
                           ? to_enu_trajectory(std::get<std::vector<GeodeticFix>>(parsed), rate_hz)
                           : std::get<EnuTrajectory>(std::move(parsed));
  traj.rate_hz = rate_hz;
  if (traj.samples.size() < 2) throw DataError("trace needs at least 2 samples");
  return resample(traj, rate_hz);
}

void write_enu_csv(std::ostream& out, const EnuTrajectory& traj) {
  out << "t,x,y\n";
  for (const auto& s : traj.samples) out << fmt::format("{},{},{}\n", s.t, s.x, s.y);
}

}  // namespace mbc
