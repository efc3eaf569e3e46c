#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cellgraph/errors.hpp"
#include "cellgraph/geometry.hpp"

namespace cellgraph {

enum class VentilationMode { NV, MV, AC, HC };

inline constexpr std::array<VentilationMode, 4> kVentilationModes = {
    VentilationMode::NV, VentilationMode::MV, VentilationMode::AC, VentilationMode::HC};

inline std::string_view to_string(VentilationMode m) {
  switch (m) {
    case VentilationMode::NV: return "NV";
    case VentilationMode::MV: return "MV";
    case VentilationMode::AC: return "AC";
    case VentilationMode::HC: return "HC";
  }
  return "?";
}

inline std::optional<VentilationMode> parse_ventilation_mode(std::string_view s) {
  for (VentilationMode m : kVentilationModes) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

enum class ObjectKind {
  CeilingFan,
  VavDiffuser,
  Window,
  Door,
  SolidWall,
  CurtainWall,
  HandRail,
  AirCond,
  Chair,
  Desk,
  DiningTable,
  MultiTable,
  Sofa,
  Sensor,
};

inline constexpr std::array<ObjectKind, 14> kObjectKinds = {
    ObjectKind::CeilingFan, ObjectKind::VavDiffuser, ObjectKind::Window,   ObjectKind::Door,
    ObjectKind::SolidWall,  ObjectKind::CurtainWall, ObjectKind::HandRail, ObjectKind::AirCond,
    ObjectKind::Chair,      ObjectKind::Desk,        ObjectKind::DiningTable,
    ObjectKind::MultiTable, ObjectKind::Sofa,        ObjectKind::Sensor};

inline std::string_view to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::CeilingFan: return "CeilingFan";
    case ObjectKind::VavDiffuser: return "VavDiffuser";
    case ObjectKind::Window: return "Window";
    case ObjectKind::Door: return "Door";
    case ObjectKind::SolidWall: return "SolidWall";
    case ObjectKind::CurtainWall: return "CurtainWall";
    case ObjectKind::HandRail: return "HandRail";
    case ObjectKind::AirCond: return "AirCond";
    case ObjectKind::Chair: return "Chair";
    case ObjectKind::Desk: return "Desk";
    case ObjectKind::DiningTable: return "DiningTable";
    case ObjectKind::MultiTable: return "MultiTable";
    case ObjectKind::Sofa: return "Sofa";
    case ObjectKind::Sensor: return "Sensor";
  }
  return "?";
}

inline std::optional<ObjectKind> parse_object_kind(std::string_view s) {
  for (ObjectKind k : kObjectKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// Graph node label for an object kind, in the `:Kind:Family` census style.
inline std::string_view node_label(ObjectKind k) {
  switch (k) {
    case ObjectKind::CeilingFan: return "Fan";
    case ObjectKind::VavDiffuser: return "VavDiffuser";
    case ObjectKind::Window: return "Window";
    case ObjectKind::Door: return "Door";
    case ObjectKind::SolidWall: return "SolidWall:Wall";
    case ObjectKind::CurtainWall: return "CurtainWall:Wall";
    case ObjectKind::HandRail: return "HandRail:Wall";
    case ObjectKind::AirCond: return "AirCond";
    case ObjectKind::Chair: return "Chair:Furniture";
    case ObjectKind::Desk: return "Desk:Furniture";
    case ObjectKind::DiningTable: return "DiningTable:Furniture";
    case ObjectKind::MultiTable: return "Furniture:MultiTable";
    case ObjectKind::Sofa: return "Furniture:Sofa";
    case ObjectKind::Sensor: return "Sensor";
  }
  return "?";
}

inline bool has_aoi_rule(ObjectKind k) {
  return k == ObjectKind::CeilingFan || k == ObjectKind::VavDiffuser || k == ObjectKind::Window;
}

inline constexpr double kDefaultWindowDepth = 2.13;  // 7 ft
inline constexpr double kDefaultDiffuserThrow = 2.0;
inline constexpr double kDefaultDiffuserSpread = 90.0;

// Kind-specific area-of-influence parameters. Fans use `radius`; diffusers
// use `throw_m`, `spread_deg` and `direction_deg`; windows use the
// `start`→`end` segment with the room on its left, plus `depth`.
struct AoiParams {
  std::optional<double> radius;
  std::optional<double> throw_m;
  std::optional<double> spread_deg;
  std::optional<double> direction_deg;
  std::optional<Point2> start;
  std::optional<Point2> end;
  std::optional<double> depth;

  friend bool operator==(const AoiParams&, const AoiParams&) = default;
};

struct Level {
  std::string id;
  std::string name;
  int number = 0;
  double elevation = 0.0;

  friend bool operator==(const Level&, const Level&) = default;
};

struct Space {
  std::string id;
  std::string name;
  std::string level_id;
  Polygon footprint;
  VentilationMode ventilation_mode = VentilationMode::MV;
  std::optional<double> setpoint_c;

  friend bool operator==(const Space&, const Space&) = default;
};

struct SpatialObject {
  std::string id;
  ObjectKind kind = ObjectKind::Chair;
  std::string space_id;
  Point3 position;
  std::optional<AoiParams> aoi;

  friend bool operator==(const SpatialObject&, const SpatialObject&) = default;
};

// Equirectangular projection with a rotation about a fixed WGS84 origin.
// Local frame: x east, y north when rotation is zero; `rotation_deg` turns
// the local x axis counter-clockwise away from east.
class CoordinateTransform {
 public:
  static constexpr double kMaxRange = 10'000.0;

  CoordinateTransform() : CoordinateTransform(0.0, 0.0, 0.0) {}
  CoordinateTransform(double origin_lat, double origin_lon, double rotation_deg)
      : origin_lat_(origin_lat), origin_lon_(origin_lon), rotation_deg_(rotation_deg) {
    const double phi = origin_lat * std::numbers::pi / 180.0;
    m_per_deg_lat_ = 111132.92 - 559.82 * std::cos(2 * phi) + 1.175 * std::cos(4 * phi) -
                     0.0023 * std::cos(6 * phi);
    m_per_deg_lon_ = 111412.84 * std::cos(phi) - 93.5 * std::cos(3 * phi) + 0.118 * std::cos(5 * phi);
    const double theta = rotation_deg * std::numbers::pi / 180.0;
    cos_ = std::cos(theta);
    sin_ = std::sin(theta);
  }

  double origin_lat() const { return origin_lat_; }
  double origin_lon() const { return origin_lon_; }
  double rotation_deg() const { return rotation_deg_; }
  double meters_per_degree_lat() const { return m_per_deg_lat_; }
  double meters_per_degree_lon() const { return m_per_deg_lon_; }

  struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
  };

  LatLon to_global(Point2 p) const {
    if (norm(p) >= kMaxRange) throw OutOfRange("local point is 10 km or more from the origin");
    const double east = cos_ * p.x - sin_ * p.y;
    const double north = sin_ * p.x + cos_ * p.y;
    return {origin_lat_ + north / m_per_deg_lat_, origin_lon_ + east / m_per_deg_lon_};
  }

  Point2 to_local(LatLon g) const {
    const double north = (g.lat - origin_lat_) * m_per_deg_lat_;
    const double east = (g.lon - origin_lon_) * m_per_deg_lon_;
    const Point2 p{cos_ * east + sin_ * north, -sin_ * east + cos_ * north};
    if (norm(p) >= kMaxRange) throw OutOfRange("global point maps 10 km or more from the origin");
    return p;
  }

  friend bool operator==(const CoordinateTransform& a, const CoordinateTransform& b) {
    return a.origin_lat_ == b.origin_lat_ && a.origin_lon_ == b.origin_lon_ &&
           a.rotation_deg_ == b.rotation_deg_;
  }

 private:
  double origin_lat_;
  double origin_lon_;
  double rotation_deg_;
  double m_per_deg_lat_ = 0.0;
  double m_per_deg_lon_ = 0.0;
  double cos_ = 1.0;
  double sin_ = 0.0;
};

inline CoordinateTransform::LatLon local_to_global(Point2 p, const CoordinateTransform& t) {
  return t.to_global(p);
}
inline Point2 global_to_local(CoordinateTransform::LatLon g, const CoordinateTransform& t) {
  return t.to_local(g);
}

struct SpatialModel {
  std::vector<Level> levels;
  std::vector<Space> spaces;
  std::vector<SpatialObject> objects;
  CoordinateTransform transform;

  friend bool operator==(const SpatialModel&, const SpatialModel&) = default;

  const Level* find_level(std::string_view id) const {
    for (const auto& l : levels)
      if (l.id == id) return &l;
    return nullptr;
  }
  const Space* find_space(std::string_view id) const {
    for (const auto& s : spaces)
      if (s.id == id) return &s;
    return nullptr;
  }
};

// Throws SchemaError, GeometryError or DanglingRef on the first violation.
inline void validate(const SpatialModel& model) {
  std::set<std::string> ids;
  auto claim = [&](const std::string& id, std::string_view what) {
    if (id.empty()) throw SchemaError(std::string(what) + " with empty id");
    if (!ids.insert(id).second) throw SchemaError("duplicate id '" + id + "'");
  };
  for (const Level& l : model.levels) claim(l.id, "level");
  for (const Space& s : model.spaces) {
    claim(s.id, "space");
    if (!model.find_level(s.level_id))
      throw DanglingRef("space '" + s.id + "' references missing level '" + s.level_id + "'");
    if (s.footprint.size() < 3)
      throw GeometryError("space '" + s.id + "' footprint has fewer than 3 vertices");
    if (!(area(s.footprint) > 0.0))
      throw GeometryError("space '" + s.id + "' footprint has zero area");
    if (!is_simple(s.footprint))
      throw GeometryError("space '" + s.id + "' footprint is self-intersecting");
  }
  for (const SpatialObject& o : model.objects) {
    claim(o.id, "object");
    if (!model.find_space(o.space_id))
      throw DanglingRef("object '" + o.id + "' references missing space '" + o.space_id + "'");
    if (has_aoi_rule(o.kind) && !o.aoi)
      throw SchemaError("object '" + o.id + "' of kind " + std::string(to_string(o.kind)) +
                        " requires aoi parameters");
  }
}

// ---------------------------------------------------------------------------
// Areas of influence

struct DiskRegion {
  Point2 center;
  double radius = 0.0;
};

struct SectorRegion {
  Point2 apex;
  double direction_deg = 0.0;
  double throw_m = 0.0;
  double spread_deg = 0.0;
};

// Strip of width `depth` on the left-hand side of each polyline segment.
struct BandRegion {
  std::vector<Point2> polyline;
  double depth = 0.0;
};

class AoiRegion {
 public:
  enum class Shape { Disk, Sector, Band };

  explicit AoiRegion(DiskRegion d) : geometry_(d) {}
  explicit AoiRegion(SectorRegion s) : geometry_(s) {}
  explicit AoiRegion(BandRegion b) : geometry_(std::move(b)) {}

  Shape shape() const { return static_cast<Shape>(geometry_.index()); }
  const auto& geometry() const { return geometry_; }

  bool contains(Point2 p) const {
    if (const auto* d = std::get_if<DiskRegion>(&geometry_)) {
      return distance(p, d->center) <= d->radius + kGeomEps;
    }
    if (const auto* s = std::get_if<SectorRegion>(&geometry_)) {
      const Point2 v = p - s->apex;
      const double r = norm(v);
      if (r > s->throw_m + kGeomEps) return false;
      if (r <= kGeomEps || s->spread_deg >= 360.0) return true;
      const double dir = s->direction_deg * std::numbers::pi / 180.0;
      const double cosang = dot(v, Point2{std::cos(dir), std::sin(dir)}) / r;
      const double half = 0.5 * s->spread_deg * std::numbers::pi / 180.0;
      return cosang >= std::cos(half) - kGeomEps;
    }
    const auto& b = std::get<BandRegion>(geometry_);
    for (std::size_t i = 0; i + 1 < b.polyline.size(); ++i) {
      const Point2 a = b.polyline[i];
      const Point2 ab = b.polyline[i + 1] - a;
      const double len = norm(ab);
      if (len == 0.0) continue;
      const Point2 ap = p - a;
      const double along = dot(ap, ab) / len;
      const double left = cross(ab, ap) / len;
      if (along >= -kGeomEps && along <= len + kGeomEps && left >= -kGeomEps &&
          left <= b.depth + kGeomEps)
        return true;
    }
    return false;
  }

 private:
  std::variant<DiskRegion, SectorRegion, BandRegion> geometry_;
};

// Region for kinds with an AoI rule; std::nullopt for every other kind.
inline std::optional<AoiRegion> aoi_region(const SpatialObject& obj) {
  if (!has_aoi_rule(obj.kind)) return std::nullopt;
  if (!obj.aoi) throw MissingAoiParams("object '" + obj.id + "' has no aoi parameters");
  const AoiParams& a = *obj.aoi;
  switch (obj.kind) {
    case ObjectKind::CeilingFan:
      if (!a.radius) throw MissingAoiParams("fan '" + obj.id + "' has no radius");
      return AoiRegion(DiskRegion{obj.position.xy(), *a.radius});
    case ObjectKind::VavDiffuser:
      return AoiRegion(SectorRegion{obj.position.xy(), a.direction_deg.value_or(0.0),
                                    a.throw_m.value_or(kDefaultDiffuserThrow),
                                    a.spread_deg.value_or(kDefaultDiffuserSpread)});
    case ObjectKind::Window:
      if (!a.start || !a.end) throw MissingAoiParams("window '" + obj.id + "' has no segment");
      return AoiRegion(BandRegion{{*a.start, *a.end}, a.depth.value_or(kDefaultWindowDepth)});
    default:
      return std::nullopt;
  }
}

}  // namespace cellgraph
