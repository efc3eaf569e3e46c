#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "cellgraph/csv.hpp"
#include "cellgraph/errors.hpp"
#include "cellgraph/graph.hpp"
#include "cellgraph/spatial_model.hpp"

namespace cellgraph {

struct BeaconObservation {
  std::string beacon_id;
  Point2 beacon_position;
  double rssi = 0.0;  // dBm, within [-120, 0]
  double timestamp = 0.0;
};

inline constexpr double kMinAccuracy = 0.25;
inline constexpr double kMaxAccuracy = 5.0;

struct LocationFix {
  std::string user_id;
  double lat = 0.0;
  double lon = 0.0;
  double elevation = 0.0;
  int floor = 0;
  double timestamp = 0.0;  // Unix seconds
  double accuracy = 0.0;   // meters

  friend bool operator==(const LocationFix&, const LocationFix&) = default;
};

struct PathLossModel {
  double p0 = -59.0;  // RSSI at 1 m, dBm
  double exponent = 2.0;
};

// Log-distance path loss: d = 10^((p0 - rssi) / (10 n)).
inline double rssi_to_distance(double rssi, double p0 = -59.0, double path_loss_exp = 2.0) {
  if (!(path_loss_exp > 0.0)) throw ConfigError("path-loss exponent must be positive");
  return std::pow(10.0, (p0 - rssi) / (10.0 * path_loss_exp));
}

struct RangeMeasurement {
  Point2 anchor;
  double range = 0.0;
};

struct Trilateration {
  Point2 position;
  double residual = 0.0;  // RMS range error, meters
  double accuracy = 0.0;  // residual clamped to the accepted fix range
};

// Linearised least squares for the starting point, then Gauss-Newton on
// sum_i (|x - b_i| - d_i)^2.
inline Trilateration trilaterate(const std::vector<RangeMeasurement>& obs) {
  if (obs.size() < 3) throw Underdetermined("trilateration needs at least 3 observations");
  const Point2 b0 = obs[0].anchor;
  double scale = 0.0;
  for (const auto& o : obs) scale = std::max(scale, distance(o.anchor, b0));
  bool spread = false;
  for (std::size_t i = 1; i < obs.size() && !spread; ++i) {
    for (std::size_t j = i + 1; j < obs.size() && !spread; ++j) {
      const double c = cross(obs[i].anchor - b0, obs[j].anchor - b0);
      spread = std::abs(c) > 1e-9 * std::max(scale * scale, 1e-12);
    }
  }
  if (!spread) throw CollinearBeacons("beacon positions are collinear");

  // Rows: 2 (b_i - b_0) . x = d_0^2 - d_i^2 + |b_i|^2 - |b_0|^2
  double ata[2][2] = {{0, 0}, {0, 0}};
  double atb[2] = {0, 0};
  for (std::size_t i = 1; i < obs.size(); ++i) {
    const Point2 bi = obs[i].anchor;
    const double a0 = 2.0 * (bi.x - b0.x);
    const double a1 = 2.0 * (bi.y - b0.y);
    const double rhs = obs[0].range * obs[0].range - obs[i].range * obs[i].range + dot(bi, bi) - dot(b0, b0);
    ata[0][0] += a0 * a0;
    ata[0][1] += a0 * a1;
    ata[1][1] += a1 * a1;
    atb[0] += a0 * rhs;
    atb[1] += a1 * rhs;
  }
  ata[1][0] = ata[0][1];
  const double det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
  Point2 x{(atb[0] * ata[1][1] - atb[1] * ata[0][1]) / det, (ata[0][0] * atb[1] - ata[1][0] * atb[0]) / det};

  for (int iter = 0; iter < 50; ++iter) {
    double jtj[2][2] = {{0, 0}, {0, 0}};
    double jtr[2] = {0, 0};
    for (const auto& o : obs) {
      const Point2 v = x - o.anchor;
      const double r = norm(v);
      if (r < 1e-12) continue;
      const double res = r - o.range;
      const double gx = v.x / r;
      const double gy = v.y / r;
      jtj[0][0] += gx * gx;
      jtj[0][1] += gx * gy;
      jtj[1][1] += gy * gy;
      jtr[0] += gx * res;
      jtr[1] += gy * res;
    }
    jtj[1][0] = jtj[0][1];
    const double d = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
    if (std::abs(d) < 1e-15) break;
    const Point2 step{(jtr[0] * jtj[1][1] - jtr[1] * jtj[0][1]) / d, (jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / d};
    x = x - step;
    if (norm(step) < 1e-12) break;
  }

  double ss = 0.0;
  for (const auto& o : obs) {
    const double e = distance(x, o.anchor) - o.range;
    ss += e * e;
  }
  const double rms = std::sqrt(ss / static_cast<double>(obs.size()));
  return {x, rms, std::clamp(rms, kMinAccuracy, kMaxAccuracy)};
}

inline Trilateration trilaterate(const std::vector<BeaconObservation>& obs, const PathLossModel& model) {
  std::vector<RangeMeasurement> ranges;
  ranges.reserve(obs.size());
  for (const auto& o : obs) {
    if (o.rssi < -120.0 || o.rssi > 0.0)
      throw SchemaError("beacon '" + o.beacon_id + "' rssi outside [-120, 0] dBm");
    ranges.push_back({o.beacon_position, rssi_to_distance(o.rssi, model.p0, model.exponent)});
  }
  return trilaterate(ranges);
}

// Approximate ground distance in meters between two WGS84 points.
inline double ground_distance(double lat1, double lon1, double lat2, double lon2) {
  const CoordinateTransform t(lat1, lon1, 0.0);
  const double north = (lat2 - lat1) * t.meters_per_degree_lat();
  const double east = (lon2 - lon1) * t.meters_per_degree_lon();
  return std::hypot(north, east);
}

struct StreamConfig {
  double max_accuracy = kMaxAccuracy;
  double min_displacement = 0.5;  // meters
  double min_interval = 60.0;     // seconds
};

// Per-user fold: drop fixes with accuracy above the cap, then drop any fix
// that is both closer than `min_displacement` and sooner than
// `min_interval` to the user's last retained fix. Timestamps not after the
// last retained one are dropped too, so output is strictly increasing.
inline std::vector<LocationFix> preprocess_stream(const std::vector<LocationFix>& fixes, const StreamConfig& cfg = {}) {
  std::vector<LocationFix> out;
  std::map<std::string, std::size_t> last_kept;  // user -> index into out
  for (const LocationFix& f : fixes) {
    if (f.accuracy > cfg.max_accuracy) continue;
    auto it = last_kept.find(f.user_id);
    if (it != last_kept.end()) {
      const LocationFix& prev = out[it->second];
      if (f.timestamp <= prev.timestamp) continue;
      const bool near = ground_distance(prev.lat, prev.lon, f.lat, f.lon) < cfg.min_displacement;
      const bool soon = f.timestamp - prev.timestamp < cfg.min_interval;
      if (near && soon) continue;
    }
    last_kept[f.user_id] = out.size();
    out.push_back(f);
  }
  return out;
}

inline std::string level_for_floor(const SpatialModel& model, int floor) {
  for (const Level& l : model.levels)
    if (l.number == floor) return l.id;
  throw NoCellOnLevel("no level with floor number " + std::to_string(floor));
}

inline KnnHit snap_to_cell(const LocationFix& fix, const SpatialModel& model, const CellLocator& locator) {
  const std::string level = level_for_floor(model, fix.floor);
  const Point2 p = global_to_local({fix.lat, fix.lon}, model.transform);
  return locator.nearest(level, p);
}

// ---------------------------------------------------------------------------
// CSV ingest / export

inline std::vector<LocationFix> parse_fixes_csv(std::string_view text, std::string source = "fixes.csv") {
  const CsvTable t = CsvTable::parse(text, std::move(source));
  const auto cu = t.column("user_id"), ct = t.column("timestamp"), cla = t.column("lat"), clo = t.column("lon"),
             ce = t.column("elevation"), cf = t.column("floor"), ca = t.column("accuracy");
  std::vector<LocationFix> out;
  out.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    LocationFix f;
    f.user_id = t.row(i)[cu];
    f.timestamp = t.number(i, ct);
    f.lat = t.number(i, cla);
    f.lon = t.number(i, clo);
    f.elevation = t.number(i, ce);
    f.floor = static_cast<int>(t.integer(i, cf));
    f.accuracy = t.number(i, ca);
    out.push_back(std::move(f));
  }
  return out;
}

inline std::string fixes_to_csv(const std::vector<LocationFix>& fixes) {
  std::string out = "user_id,timestamp,lat,lon,elevation,floor,accuracy\n";
  for (const auto& f : fixes) {
    out += f.user_id + "," + format_number(f.timestamp) + "," + format_number(f.lat) + "," + format_number(f.lon) +
           "," + format_number(f.elevation) + "," + std::to_string(f.floor) + "," + format_number(f.accuracy) + "\n";
  }
  return out;
}

inline std::vector<BeaconObservation> parse_beacons_csv(std::string_view text, std::string source = "beacons.csv") {
  const CsvTable t = CsvTable::parse(text, std::move(source));
  const auto cb = t.column("beacon_id"), cx = t.column("x"), cy = t.column("y"), cr = t.column("rssi"),
             ct = t.column("timestamp");
  std::vector<BeaconObservation> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    BeaconObservation o{t.row(i)[cb], {t.number(i, cx), t.number(i, cy)}, t.number(i, cr), t.number(i, ct)};
    if (o.rssi < -120.0 || o.rssi > 0.0) throw SchemaError(t.where(t.line(i)) + ": rssi outside [-120, 0] dBm");
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace cellgraph
