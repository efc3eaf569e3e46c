#pragma once

// Synthetic floors with a ground-truth comfort field.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cellgraph/classifier.hpp"
#include "cellgraph/errors.hpp"
#include "cellgraph/graph.hpp"
#include "cellgraph/rng.hpp"
#include "cellgraph/spatial_model.hpp"

namespace cellgraph {

enum class AoiClass { Interior = 0, Fan = 1, Window = 2 };

inline std::string_view to_string(AoiClass c) {
  switch (c) {
    case AoiClass::Interior: return "interior";
    case AoiClass::Fan: return "fan";
    case AoiClass::Window: return "window";
  }
  return "?";
}

using Logits = std::array<double, kNumLabels>;  // (cooler, no preference, warmer)

struct ComfortParams {
  Logits base_nv{0.9, 0.5, -0.6};
  Logits base_hc{0.0, 0.8, 0.0};
  Logits base_other{0.3, 0.8, -0.3};  // MV, AC
  Logits fan{-2.6, 0.0, 2.0};
  Logits window{3.0, 0.0, -1.6};
  double personality_gamma = 0.6;
  double archetype_shrink = 0.3;
};

struct SpaceSpec {
  std::string name;
  double width = 10.0;  // along x
  double depth = 10.0;  // along y
  VentilationMode mode = VentilationMode::HC;
  std::optional<double> setpoint_c;
  std::size_t fans = 0;
  std::size_t windows_south = 0;
  std::size_t windows_north = 0;
  std::size_t windows_east = 0;
};

struct SceneConfig {
  std::string name = "default";
  std::uint64_t seed = 1;
  int level_number = 3;
  double level_elevation = 12.0;
  double cell_size = 1.0;
  double origin_lat = 1.2966;
  double origin_lon = 103.7764;
  double rotation_deg = 0.0;
  std::vector<SpaceSpec> spaces;
  // Fans sit at cell centres along each space's middle row, or at these
  // explicit local positions when given.
  std::vector<Point2> fan_positions;
  double fan_radius = 1.5;
  double window_width = 6.0;
  double window_depth = kDefaultWindowDepth;
  std::size_t chairs = 86;
  double fan_seat_share = 0.4;
  double window_seat_share = 0.35;
  std::map<ObjectKind, std::size_t> fixtures;
  bool sensors = true;
  ComfortParams comfort;
};

// Per-cell ground truth. Probabilities for personality p are
// softmax(logits[cell] + gamma * log(archetype[p])).
class ComfortField {
 public:
  ComfortField() = default;
  ComfortField(std::vector<std::string> cell_ids, std::vector<Logits> logits, std::vector<AoiClass> classes,
               std::vector<Logits> archetypes, double gamma)
      : cell_ids_(std::move(cell_ids)),
        logits_(std::move(logits)),
        classes_(std::move(classes)),
        archetypes_(std::move(archetypes)),
        gamma_(gamma) {
    for (std::size_t i = 0; i < cell_ids_.size(); ++i) index_.emplace(cell_ids_[i], i);
  }

  std::size_t size() const { return cell_ids_.size(); }
  const std::vector<std::string>& cell_ids() const { return cell_ids_; }
  const std::vector<AoiClass>& classes() const { return classes_; }
  const std::vector<Logits>& archetypes() const { return archetypes_; }
  std::size_t personalities() const { return archetypes_.size(); }

  std::size_t index(const std::string& cell) const {
    auto it = index_.find(cell);
    if (it == index_.end()) throw UnknownCell("cell '" + cell + "' is not in the comfort field");
    return it->second;
  }
  AoiClass aoi_class(const std::string& cell) const { return classes_[index(cell)]; }

  Logits probabilities(std::size_t cell, std::size_t personality) const {
    Logits z = logits_[cell];
    if (personality < archetypes_.size())
      for (std::size_t k = 0; k < kNumLabels; ++k) z[k] += gamma_ * std::log(archetypes_[personality][k]);
    const double m = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
      v = std::exp(v - m);
      total += v;
    }
    for (double& v : z) v /= total;
    return z;
  }
  Logits probabilities(const std::string& cell, std::size_t personality) const {
    return probabilities(index(cell), personality);
  }

  // Averaged over personalities, equally weighted.
  Logits mean_probabilities(std::size_t cell) const {
    Logits out{0, 0, 0};
    const std::size_t n = std::max<std::size_t>(1, archetypes_.size());
    for (std::size_t p = 0; p < n; ++p) {
      const Logits q = probabilities(cell, archetypes_.empty() ? n : p);
      for (std::size_t k = 0; k < kNumLabels; ++k) out[k] += q[k] / static_cast<double>(n);
    }
    return out;
  }

 private:
  std::vector<std::string> cell_ids_;
  std::vector<Logits> logits_;
  std::vector<AoiClass> classes_;
  std::vector<Logits> archetypes_;
  double gamma_ = 1.0;
  std::unordered_map<std::string, std::size_t> index_;
};

// The 10 points (i, j, k)/3 with i + j + k = 3, pulled toward the centre
// of the simplex by `shrink`.
inline std::vector<Logits> preference_archetypes(double shrink) {
  std::vector<Logits> out;
  for (int i = 3; i >= 0; --i)
    for (int j = 3 - i; j >= 0; --j) {
      const int k = 3 - i - j;
      out.push_back({(1.0 - shrink) * i / 3.0 + shrink / 3.0, (1.0 - shrink) * j / 3.0 + shrink / 3.0,
                     (1.0 - shrink) * k / 3.0 + shrink / 3.0});
    }
  return out;
}

struct Scene {
  SceneConfig config;
  SpatialModel model;
  std::vector<Cell> cells;
  ComfortField field;
  std::vector<std::string> seats;  // object ids of chairs, the shared seat pool

  const Cell& cell(const std::string& id) const {
    for (const Cell& c : cells)
      if (c.id == id) return c;
    throw UnknownCell("no cell '" + id + "'");
  }
};

namespace detail {

inline Logits mode_logits(const ComfortParams& p, VentilationMode m) {
  switch (m) {
    case VentilationMode::NV: return p.base_nv;
    case VentilationMode::HC: return p.base_hc;
    default: return p.base_other;
  }
}

inline std::string_view id_prefix(ObjectKind k) {
  switch (k) {
    case ObjectKind::CeilingFan: return "FAN";
    case ObjectKind::VavDiffuser: return "VAV";
    case ObjectKind::Window: return "WIN";
    case ObjectKind::Door: return "DOR";
    case ObjectKind::SolidWall: return "SWL";
    case ObjectKind::CurtainWall: return "CWL";
    case ObjectKind::HandRail: return "HRL";
    case ObjectKind::AirCond: return "ACU";
    case ObjectKind::Chair: return "CHR";
    case ObjectKind::Desk: return "DSK";
    case ObjectKind::DiningTable: return "DTB";
    case ObjectKind::MultiTable: return "MTB";
    case ObjectKind::Sofa: return "SOF";
    case ObjectKind::Sensor: return "SNS";
  }
  return "OBJ";
}

inline std::string object_id(std::string_view prefix, std::size_t n) {
  return std::string(prefix) + std::to_string(n);
}

}  // namespace detail

inline SceneConfig default_scene_config() {
  SceneConfig c;
  c.name = "default";
  c.spaces = {
      {"Studio West", 40, 25, VentilationMode::NV, std::nullopt, 0, 3, 3, 0},
      {"Studio East", 30, 25, VentilationMode::NV, std::nullopt, 0, 3, 3, 0},
      {"Office A", 40, 25, VentilationMode::HC, 26.0, 3, 2, 1, 0},
      {"Office B", 40, 25, VentilationMode::HC, 26.0, 3, 2, 1, 0},
      {"Office C", 36, 25, VentilationMode::HC, 26.0, 3, 2, 1, 0},
  };
  c.fixtures = {{ObjectKind::AirCond, 15},    {ObjectKind::DiningTable, 24}, {ObjectKind::Desk, 20},
                {ObjectKind::SolidWall, 18},  {ObjectKind::HandRail, 13},    {ObjectKind::CurtainWall, 11},
                {ObjectKind::Door, 7},        {ObjectKind::MultiTable, 3},   {ObjectKind::Sofa, 2}};
  return c;
}

// Same floor without fans or windows, every space hybrid-cooled.
inline SceneConfig homogeneous_scene_config() {
  SceneConfig c = default_scene_config();
  c.name = "homogeneous";
  for (auto& s : c.spaces) {
    s.mode = VentilationMode::HC;
    s.setpoint_c = 26.0;
    s.fans = s.windows_south = s.windows_north = s.windows_east = 0;
  }
  return c;
}

// One hybrid-cooled room with two fans and an east-facing window.
inline SceneConfig two_fan_scene_config() {
  SceneConfig c;
  c.name = "two_fan";
  c.spaces = {{"Lab", 24, 10, VentilationMode::HC, 26.0, 0, 0, 0, 1}};
  c.fan_positions = {{4.5, 5.5}, {9.5, 5.5}};
  c.window_width = 10.0;
  c.chairs = 24;
  c.fixtures = {{ObjectKind::Door, 1}, {ObjectKind::Desk, 4}};
  return c;
}

// Long narrow room with no objects.
inline SceneConfig corridor_scene_config() {
  SceneConfig c;
  c.name = "corridor";
  c.spaces = {{"Corridor", 40, 3, VentilationMode::MV, std::nullopt, 0, 0, 0, 0}};
  c.chairs = 0;
  c.sensors = false;
  return c;
}

inline Scene generate_scene(const SceneConfig& cfg) {
  if (cfg.spaces.empty()) throw ConfigError("scene needs at least one space");
  if (!(cfg.cell_size > 0.0)) throw ConfigError("cell_size must be positive");
  if (cfg.fan_seat_share < 0.0 || cfg.window_seat_share < 0.0 || cfg.fan_seat_share + cfg.window_seat_share > 1.0)
    throw ConfigError("seat shares must be non-negative and sum to at most 1");
  Rng rng(derive_seed(cfg.seed, "scene"));
  Scene scene;
  scene.config = cfg;
  SpatialModel& m = scene.model;
  m.transform = CoordinateTransform(cfg.origin_lat, cfg.origin_lon, cfg.rotation_deg);
  const std::string level_id = "L" + std::to_string(cfg.level_number);
  m.levels.push_back({level_id, "Level " + std::to_string(cfg.level_number), cfg.level_number, cfg.level_elevation});

  std::vector<double> x0(cfg.spaces.size());
  double x = 0.0;
  for (std::size_t i = 0; i < cfg.spaces.size(); ++i) {
    const SpaceSpec& s = cfg.spaces[i];
    if (!(s.width > 0.0 && s.depth > 0.0)) throw ConfigError("space '" + s.name + "' has a non-positive size");
    x0[i] = x;
    char id[32];
    std::snprintf(id, sizeof id, "S%d%02zu", cfg.level_number, i + 1);
    m.spaces.push_back({id, s.name, level_id, {{x, 0}, {x + s.width, 0}, {x + s.width, s.depth}, {x, s.depth}},
                        s.mode, s.setpoint_c});
    x += s.width;
  }

  const double z = 2.8;
  std::size_t n_fan = 0, n_win = 0;
  auto add_fan = [&](std::size_t space, Point2 p) {
    SpatialObject o{detail::object_id("FAN", ++n_fan), ObjectKind::CeilingFan, m.spaces[space].id, {p.x, p.y, z}, {}};
    o.aoi = AoiParams{};
    o.aoi->radius = cfg.fan_radius;
    m.objects.push_back(std::move(o));
  };
  auto add_window = [&](std::size_t space, Point2 a, Point2 b) {
    const Point2 mid{(a.x + b.x) / 2, (a.y + b.y) / 2};
    SpatialObject o{detail::object_id("WIN", ++n_win), ObjectKind::Window, m.spaces[space].id, {mid.x, mid.y, 1.2}, {}};
    o.aoi = AoiParams{};
    o.aoi->start = a;
    o.aoi->end = b;
    o.aoi->depth = cfg.window_depth;
    m.objects.push_back(std::move(o));
  };
  for (std::size_t i = 0; i < cfg.spaces.size(); ++i) {
    const SpaceSpec& s = cfg.spaces[i];
    for (std::size_t f = 0; f < s.fans; ++f) {
      const double fx = x0[i] + std::floor(s.width * static_cast<double>(f + 1) / static_cast<double>(s.fans + 1)) + 0.5;
      add_fan(i, {fx, std::floor(s.depth / 2) + 0.5});
    }
    auto facade = [&](std::size_t n, double length, auto endpoints) {
      const double w = std::min(cfg.window_width, length / static_cast<double>(std::max<std::size_t>(n, 1)));
      for (std::size_t k = 0; k < n; ++k) {
        const double c = length * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
        endpoints(c - w / 2, c + w / 2);
      }
    };
    // Room on the left of start→end: south runs east, north runs west, east runs north.
    facade(s.windows_south, s.width, [&](double a, double b) { add_window(i, {x0[i] + a, 0}, {x0[i] + b, 0}); });
    facade(s.windows_north, s.width,
           [&](double a, double b) { add_window(i, {x0[i] + s.width - a, s.depth}, {x0[i] + s.width - b, s.depth}); });
    facade(s.windows_east, s.depth,
           [&](double a, double b) { add_window(i, {x0[i] + s.width, a}, {x0[i] + s.width, b}); });
  }
  for (Point2 p : cfg.fan_positions) {
    std::size_t space = cfg.spaces.size();
    for (std::size_t i = 0; i < m.spaces.size(); ++i)
      if (contains(m.spaces[i].footprint, p)) space = i;
    if (space == cfg.spaces.size()) throw ConfigError("fan position outside every space");
    add_fan(space, p);
  }

  scene.cells = discretize(m, cfg.cell_size);
  std::vector<AoiClass> classes(scene.cells.size(), AoiClass::Interior);
  std::vector<Logits> logits(scene.cells.size());
  std::vector<std::pair<std::string, AoiRegion>> regions;
  for (const auto& o : m.objects)
    if (auto r = aoi_region(o)) regions.emplace_back(o.id, std::move(*r));
  for (std::size_t c = 0; c < scene.cells.size(); ++c) {
    const Cell& cell = scene.cells[c];
    const Space* space = m.find_space(cell.space_id);
    bool fan = false, window = false;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (!regions[r].second.contains(cell.center)) continue;
      (regions[r].second.shape() == AoiRegion::Shape::Disk ? fan : window) = true;
    }
    classes[c] = fan ? AoiClass::Fan : window ? AoiClass::Window : AoiClass::Interior;
    logits[c] = detail::mode_logits(cfg.comfort, space->ventilation_mode);
    const Logits* shift = fan ? &cfg.comfort.fan : window ? &cfg.comfort.window : nullptr;
    if (shift)
      for (std::size_t k = 0; k < kNumLabels; ++k) logits[c][k] += (*shift)[k];
  }

  // Chairs on cell centres, split between fan, window and interior cells.
  std::array<std::vector<std::size_t>, 3> pool;
  for (std::size_t c = 0; c < scene.cells.size(); ++c) pool[static_cast<std::size_t>(classes[c])].push_back(c);
  for (auto& p : pool) std::shuffle(p.begin(), p.end(), rng);
  const auto want_fan = static_cast<std::size_t>(std::llround(cfg.fan_seat_share * static_cast<double>(cfg.chairs)));
  const auto want_win = static_cast<std::size_t>(std::llround(cfg.window_seat_share * static_cast<double>(cfg.chairs)));
  std::array<std::size_t, 3> take{0, std::min(want_fan, pool[1].size()), std::min(want_win, pool[2].size())};
  take[0] = std::min(pool[0].size(), cfg.chairs - take[1] - take[2]);
  if (take[0] + take[1] + take[2] < cfg.chairs) {
    // Not enough interior cells: top up from the other classes.
    for (std::size_t k : {1u, 2u}) {
      const std::size_t extra = std::min(pool[k].size() - take[k], cfg.chairs - (take[0] + take[1] + take[2]));
      take[k] += extra;
    }
  }
  std::vector<std::size_t> seat_cells;
  for (std::size_t k : {1u, 2u, 0u})
    seat_cells.insert(seat_cells.end(), pool[k].begin(), pool[k].begin() + static_cast<std::ptrdiff_t>(take[k]));
  std::sort(seat_cells.begin(), seat_cells.end());
  std::size_t n_chair = 0;
  for (std::size_t c : seat_cells) {
    const Cell& cell = scene.cells[c];
    std::string id = detail::object_id("CHR", ++n_chair);
    m.objects.push_back({id, ObjectKind::Chair, cell.space_id, {cell.center.x, cell.center.y, 0.45}, std::nullopt});
    scene.seats.push_back(std::move(id));
  }

  // Remaining fixtures: air conditioners in hybrid-cooled spaces, walls and
  // doors on the perimeter, furniture anywhere inside.
  std::vector<std::size_t> hc_spaces, all_spaces;
  for (std::size_t i = 0; i < m.spaces.size(); ++i) {
    all_spaces.push_back(i);
    if (m.spaces[i].ventilation_mode == VentilationMode::HC) hc_spaces.push_back(i);
  }
  std::map<std::string, std::size_t> prefix_count;
  for (const auto& [kind, count] : cfg.fixtures) {
    if (has_aoi_rule(kind)) throw ConfigError("fixtures cannot include AoI kinds");
    const bool perimeter = kind == ObjectKind::SolidWall || kind == ObjectKind::HandRail ||
                           kind == ObjectKind::CurtainWall || kind == ObjectKind::Door || kind == ObjectKind::AirCond;
    const auto& spaces = kind == ObjectKind::AirCond && !hc_spaces.empty() ? hc_spaces : all_spaces;
    const std::string prefix(detail::id_prefix(kind));
    for (std::size_t n = 0; n < count; ++n) {
      const std::size_t si = spaces[n % spaces.size()];
      const SpaceSpec& s = cfg.spaces[si];
      Point2 p;
      if (perimeter) {
        const double t = uniform01(rng) * 2.0 * (s.width + s.depth);
        if (t < s.width) p = {x0[si] + t, 0.0};
        else if (t < s.width + s.depth) p = {x0[si] + s.width, t - s.width};
        else if (t < 2 * s.width + s.depth) p = {x0[si] + 2 * s.width + s.depth - t, s.depth};
        else p = {x0[si], 2 * (s.width + s.depth) - t};
      } else {
        p = {x0[si] + 0.5 + uniform01(rng) * (s.width - 1.0), 0.5 + uniform01(rng) * (s.depth - 1.0)};
      }
      p = {std::round(p.x * 100.0) / 100.0, std::round(p.y * 100.0) / 100.0};
      m.objects.push_back({detail::object_id(prefix, ++prefix_count[prefix]), kind, m.spaces[si].id,
                           {p.x, p.y, kind == ObjectKind::AirCond ? 2.4 : 0.0}, std::nullopt});
    }
  }
  if (cfg.sensors) {
    for (std::size_t i = 0; i < m.spaces.size(); ++i) {
      const SpaceSpec& s = cfg.spaces[i];
      m.objects.push_back({detail::object_id("SNS", i + 1), ObjectKind::Sensor, m.spaces[i].id,
                           {x0[i] + s.width / 2, s.depth / 2, 1.1}, std::nullopt});
    }
  }
  validate(m);

  std::vector<std::string> ids;
  ids.reserve(scene.cells.size());
  for (const Cell& c : scene.cells) ids.push_back(c.id);
  scene.field = ComfortField(std::move(ids), std::move(logits), std::move(classes),
                             preference_archetypes(cfg.comfort.archetype_shrink), cfg.comfort.personality_gamma);
  return scene;
}

// Cell of the chair object `seat`.
inline const Cell& seat_cell(const Scene& scene, const std::string& seat) {
  for (const auto& o : scene.model.objects) {
    if (o.id != seat) continue;
    for (const Cell& c : scene.cells)
      if (c.space_id == o.space_id && std::abs(c.center.x - o.position.x) < 1e-9 &&
          std::abs(c.center.y - o.position.y) < 1e-9)
        return c;
  }
  throw UnknownCell("seat '" + seat + "' is not on a cell centre");
}

inline std::vector<std::pair<std::string, std::size_t>> scene_census(const Scene& scene,
                                                                    const GraphOptions& opts = {}) {
  return build_graph(scene.model, scene.cells, opts).census();
}

}  // namespace cellgraph
