#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "cellgraph.hpp"

namespace testing_util {

inline std::string fixture(const std::string& name) { return std::string(CELLGRAPH_FIXTURES) + "/" + name; }

// One level L3 with a single axis-aligned space S1 of the given size.
inline cellgraph::SpatialModel square_model(double w, double h, cellgraph::VentilationMode mode = cellgraph::VentilationMode::NV) {
  cellgraph::SpatialModel m;
  m.levels.push_back({"L3", "Level 3", 3, 12.0});
  m.spaces.push_back({"S1", "Room", "L3", {{0, 0}, {w, 0}, {w, h}, {0, h}}, mode, std::nullopt});
  m.transform = cellgraph::CoordinateTransform(1.2966, 103.7764, 0.0);
  return m;
}

inline cellgraph::SpatialObject fan(std::string id, std::string space, cellgraph::Point2 at, double radius) {
  cellgraph::AoiParams a;
  a.radius = radius;
  return {std::move(id), cellgraph::ObjectKind::CeilingFan, std::move(space), {at.x, at.y, 2.8}, a};
}

inline cellgraph::SpatialObject window(std::string id, std::string space, cellgraph::Point2 start, cellgraph::Point2 end,
                                       std::optional<double> depth = std::nullopt) {
  cellgraph::AoiParams a;
  a.start = start;
  a.end = end;
  a.depth = depth;
  const cellgraph::Point2 mid{(start.x + end.x) / 2, (start.y + end.y) / 2};
  return {std::move(id), cellgraph::ObjectKind::Window, std::move(space), {mid.x, mid.y, 1.2}, a};
}

inline cellgraph::SpatialObject diffuser(std::string id, std::string space, cellgraph::Point2 at, double dir,
                                         double throw_m, double spread) {
  cellgraph::AoiParams a;
  a.direction_deg = dir;
  a.throw_m = throw_m;
  a.spread_deg = spread;
  return {std::move(id), cellgraph::ObjectKind::VavDiffuser, std::move(space), {at.x, at.y, 2.8}, a};
}

// Several rectangular rooms side by side with randomly placed AoI objects.
inline cellgraph::SpatialModel random_model(std::uint64_t seed, std::size_t rooms, std::size_t objects_per_room) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  cellgraph::SpatialModel m;
  m.levels.push_back({"L2", "Level 2", 2, 8.0});
  double x0 = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < rooms; ++r) {
    const double w = 4.0 + std::floor(u(rng) * 12.0), h = 4.0 + std::floor(u(rng) * 8.0);
    const std::string sid = "S" + std::to_string(r + 1);
    m.spaces.push_back({sid, "Room " + std::to_string(r + 1), "L2", {{x0, 0}, {x0 + w, 0}, {x0 + w, h}, {x0, h}},
                        r % 2 ? cellgraph::VentilationMode::HC : cellgraph::VentilationMode::NV, std::nullopt});
    for (std::size_t k = 0; k < objects_per_room; ++k) {
      const std::string id = "O" + std::to_string(++n);
      const cellgraph::Point2 p{x0 + u(rng) * w, u(rng) * h};
      switch (k % 3) {
        case 0: m.objects.push_back(fan(id, sid, p, 0.5 + 2.5 * u(rng))); break;
        case 1: {
          const double a = x0 + u(rng) * (w - 1.0);
          m.objects.push_back(window(id, sid, {a, 0.0}, {a + 1.0 + u(rng), 0.0}, 1.0 + 2.0 * u(rng)));
          break;
        }
        default: m.objects.push_back(diffuser(id, sid, p, 360.0 * u(rng), 1.0 + 3.0 * u(rng), 30.0 + 150.0 * u(rng)));
      }
    }
    x0 += w;
  }
  return m;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cellgraph_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_util
