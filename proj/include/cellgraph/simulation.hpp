#pragma once

// Occupant trajectories, noisy location fixes, thermal-preference votes and
// per-space environmental sensor streams over a synthetic scene.

#include <array>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "cellgraph/classifier.hpp"
#include "cellgraph/csv.hpp"
#include "cellgraph/localization.hpp"
#include "cellgraph/rng.hpp"
#include "cellgraph/scene.hpp"

namespace cellgraph {

struct SimConfig {
  std::size_t n_users = 30;
  std::size_t days = 10;
  std::uint64_t seed = 1;
  std::size_t dwells_min = 3;
  std::size_t dwells_max = 5;
  double dwell_min_minutes = 30.0;
  double dwell_max_minutes = 120.0;
  double fix_interval = 60.0;    // seconds
  double position_noise = 0.35;  // meters, per axis
  double start_time = 1633910400.0;  // a Monday, 00:00 UTC
  double day_start_hour = 8.0;
  double day_end_hour = 18.0;
  double sensor_interval = 300.0;
  std::size_t onboarding_votes = 100;
  double fan_skin_offset = -1.0;
  double window_skin_offset = 1.0;
  double skin_noise = 0.6;
  double hr_mean = 72.0;
  double hr_sd = 7.0;
  double hr_personality = 4.0;  // bpm per unit of (p_cooler - p_warmer)
};

struct SensorReading {
  double timestamp = 0.0;
  double air_temp = 0.0;  // deg C
  double humidity = 0.0;  // %RH
  double noise = 0.0;     // dB(A)
  double lux = 0.0;
};

struct VoteTruth {
  std::string cell_id;
  Point2 position;
  std::size_t personality = 0;
  AoiClass aoi = AoiClass::Interior;
  Logits probabilities{};
};

struct SimOutput {
  double start_time = 0.0;
  std::vector<LocationFix> fixes;
  std::vector<FeedbackVote> votes;
  std::vector<VoteTruth> truth;                       // parallel to votes
  std::map<std::string, std::size_t> personality;     // user -> archetype
  std::map<std::string, LabelHistogram> onboarding;   // user -> survey histogram
  std::map<std::string, std::vector<SensorReading>> sensors;  // space -> readings, time-ordered
};

inline std::string user_id(std::size_t u) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "U%02zu", u + 1);
  return buf;
}

inline std::size_t sample_label(const Logits& probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < kNumLabels; ++k) {
    acc += probs[k];
    if (u < acc) return k;
  }
  return kNumLabels - 1;
}

// Air temperature baseline per ventilation mode.
inline double mode_air_temp(VentilationMode m) {
  switch (m) {
    case VentilationMode::NV: return 29.5;
    case VentilationMode::HC: return 26.0;
    case VentilationMode::AC: return 24.0;
    case VentilationMode::MV: return 27.0;
  }
  return 26.0;
}

// Latest reading at or before `t`, or the first reading.
inline const SensorReading& reading_at(const std::vector<SensorReading>& series, double t) {
  if (series.empty()) throw ConfigError("empty sensor series");
  auto it = std::upper_bound(series.begin(), series.end(), t,
                             [](double v, const SensorReading& r) { return v < r.timestamp; });
  return it == series.begin() ? *it : *(it - 1);
}

inline SimOutput simulate_occupants(const Scene& scene, const SimConfig& cfg) {
  if (cfg.n_users == 0) throw ConfigError("n_users must be at least 1");
  if (scene.seats.empty()) throw ConfigError("scene has no seats");
  if (cfg.dwells_min == 0 || cfg.dwells_min > cfg.dwells_max) throw ConfigError("invalid dwell count range");
  if (!(cfg.fix_interval > 0.0) || !(cfg.sensor_interval > 0.0)) throw ConfigError("intervals must be positive");
  SimOutput out;
  out.start_time = cfg.start_time;
  const SpatialModel& m = scene.model;
  const Level& level = m.levels.front();

  // Sensors first: they are shared by every occupant.
  for (std::size_t si = 0; si < m.spaces.size(); ++si) {
    const Space& s = m.spaces[si];
    Rng rng(derive_seed(cfg.seed, "sensor", si));
    std::normal_distribution<double> n01(0.0, 1.0);
    const double offset = 0.4 * n01(rng);
    const bool nv = s.ventilation_mode == VentilationMode::NV;
    auto& series = out.sensors[s.id];
    for (std::size_t d = 0; d < cfg.days; ++d) {
      const double day0 = cfg.start_time + 86400.0 * static_cast<double>(d);
      for (double t = (cfg.day_start_hour - 1.0) * 3600.0; t <= (cfg.day_end_hour + 1.0) * 3600.0;
           t += cfg.sensor_interval) {
        const double hour = t / 3600.0;
        const double temp = mode_air_temp(s.ventilation_mode) + offset +
                            (nv ? 1.5 : 0.5) * std::sin(2.0 * std::numbers::pi * (hour - 9.0) / 24.0) +
                            0.3 * n01(rng);
        SensorReading r;
        r.timestamp = day0 + t;
        r.air_temp = temp;
        r.humidity = (nv ? 75.0 - 2.0 * (temp - 29.5) : 62.0) + 2.0 * n01(rng);
        r.noise = 48.0 + 4.0 * n01(rng);
        r.lux = (nv ? 450.0 : 320.0) + (nv ? 60.0 : 40.0) * n01(rng);
        series.push_back(r);
      }
    }
  }

  std::vector<const Cell*> seat_cells;
  for (const auto& seat : scene.seats) seat_cells.push_back(&seat_cell(scene, seat));
  const std::size_t n_personalities = std::max<std::size_t>(1, scene.field.personalities());

  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    const std::string uid = user_id(u);
    const std::size_t personality = u % n_personalities;
    out.personality[uid] = personality;
    Rng rng(derive_seed(cfg.seed, "occupant", u));
    std::normal_distribution<double> n01(0.0, 1.0);

    const Logits arche = scene.field.personalities() ? scene.field.archetypes()[personality] : Logits{1, 1, 1};
    {
      const double total = arche[0] + arche[1] + arche[2];
      const Logits norm{arche[0] / total, arche[1] / total, arche[2] / total};
      LabelHistogram h{0, 0, 0};
      for (std::size_t i = 0; i < cfg.onboarding_votes; ++i) h[sample_label(norm, rng)] += 1.0;
      out.onboarding[uid] = h;
    }
    const double hr_base = cfg.hr_mean + cfg.hr_personality * (arche[0] - arche[2]);

    for (std::size_t d = 0; d < cfg.days; ++d) {
      const double day0 = cfg.start_time + 86400.0 * static_cast<double>(d);
      const std::size_t dwells = cfg.dwells_min + uniform_index(rng, cfg.dwells_max - cfg.dwells_min + 1);
      double t = cfg.day_start_hour * 3600.0 + 1800.0 * uniform01(rng);
      for (std::size_t k = 0; k < dwells; ++k) {
        const double minutes = cfg.dwell_min_minutes + (cfg.dwell_max_minutes - cfg.dwell_min_minutes) * uniform01(rng);
        const double end = t + 60.0 * minutes;
        if (end > cfg.day_end_hour * 3600.0) break;
        const Cell& cell = *seat_cells[uniform_index(rng, seat_cells.size())];
        const auto n_fixes = static_cast<std::size_t>(std::floor((end - t) / cfg.fix_interval)) + 1;
        const std::size_t vote_at = uniform_index(rng, n_fixes);
        for (std::size_t f = 0; f < n_fixes; ++f) {
          const double ts = std::round(day0 + t + cfg.fix_interval * static_cast<double>(f));
          const Point2 p{cell.center.x + cfg.position_noise * n01(rng), cell.center.y + cfg.position_noise * n01(rng)};
          const auto g = m.transform.to_global(p);
          const double accuracy = 0.5 + 2.5 * uniform01(rng);
          out.fixes.push_back({uid, g.lat, g.lon, level.elevation, level.number, ts, accuracy});
          if (f != vote_at) continue;

          const std::size_t ci = scene.field.index(cell.id);
          const AoiClass aoi = scene.field.classes()[ci];
          const Logits probs = scene.field.probabilities(ci, personality);
          const auto label = static_cast<ThermalLabel>(sample_label(probs, rng));
          const double air = reading_at(out.sensors.at(cell.space_id), ts).air_temp;
          const double skin_shift = aoi == AoiClass::Fan ? cfg.fan_skin_offset
                                    : aoi == AoiClass::Window ? cfg.window_skin_offset
                                                              : 0.0;
          const double near_body = std::clamp(air + skin_shift + cfg.skin_noise * n01(rng), 15.5, 44.5);
          const double hr = std::clamp(hr_base + cfg.hr_sd * n01(rng), 40.0, 200.0);
          out.votes.push_back({uid, ts, g.lat, g.lon, level.number, label, std::round(hr * 10.0) / 10.0,
                               std::round(near_body * 100.0) / 100.0});
          out.truth.push_back({cell.id, cell.center, personality, aoi, probs});
        }
        t = end + 60.0 * (5.0 + 25.0 * uniform01(rng));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// File formats

inline std::string sensors_to_csv(const SimOutput& sim) {
  std::string out = "space_id,timestamp,air_temp,humidity,noise,lux\n";
  for (const auto& [space, series] : sim.sensors)
    for (const auto& r : series)
      out += space + "," + format_number(r.timestamp) + "," + format_number(r.air_temp) + "," +
             format_number(r.humidity) + "," + format_number(r.noise) + "," + format_number(r.lux) + "\n";
  return out;
}

inline std::map<std::string, std::vector<SensorReading>> parse_sensors_csv(std::string_view text,
                                                                           std::string source = "sensors.csv") {
  const CsvTable t = CsvTable::parse(text, std::move(source));
  const auto cs = t.column("space_id"), ct = t.column("timestamp"), ca = t.column("air_temp"),
             ch = t.column("humidity"), cn = t.column("noise"), cl = t.column("lux");
  std::map<std::string, std::vector<SensorReading>> out;
  for (std::size_t i = 0; i < t.size(); ++i)
    out[t.row(i)[cs]].push_back({t.number(i, ct), t.number(i, ca), t.number(i, ch), t.number(i, cn), t.number(i, cl)});
  for (auto& [_, series] : out)
    std::stable_sort(series.begin(), series.end(),
                     [](const SensorReading& a, const SensorReading& b) { return a.timestamp < b.timestamp; });
  return out;
}

inline std::string truth_to_csv(const SimOutput& sim) {
  std::string out = "vote,user_id,cell_id,x,y,personality,aoi_class,p_cooler,p_no_preference,p_warmer\n";
  for (std::size_t i = 0; i < sim.truth.size(); ++i) {
    const auto& t = sim.truth[i];
    out += std::to_string(i) + "," + sim.votes[i].user_id + "," + t.cell_id + "," + format_number(t.position.x) + "," +
           format_number(t.position.y) + "," + std::to_string(t.personality) + "," + std::string(to_string(t.aoi)) +
           "," + format_number(t.probabilities[0]) + "," + format_number(t.probabilities[1]) + "," +
           format_number(t.probabilities[2]) + "\n";
  }
  return out;
}

inline std::string onboarding_to_csv(const SimOutput& sim) {
  std::string out = "user_id,personality,prefer_cooler,no_preference,prefer_warmer\n";
  for (const auto& [user, h] : sim.onboarding)
    out += user + "," + std::to_string(sim.personality.at(user)) + "," + format_number(h[0]) + "," +
           format_number(h[1]) + "," + format_number(h[2]) + "\n";
  return out;
}

inline std::map<std::string, LabelHistogram> parse_onboarding_csv(std::string_view text,
                                                                  std::string source = "onboarding.csv") {
  const CsvTable t = CsvTable::parse(text, std::move(source));
  const auto cu = t.column("user_id"), c0 = t.column("prefer_cooler"), c1 = t.column("no_preference"),
             c2 = t.column("prefer_warmer");
  std::map<std::string, LabelHistogram> out;
  for (std::size_t i = 0; i < t.size(); ++i) out[t.row(i)[cu]] = {t.number(i, c0), t.number(i, c1), t.number(i, c2)};
  return out;
}

}  // namespace cellgraph
