#pragma once

// Canonical floor-plan JSON:
//
//   {
//     "levels":  [{"id": "L3", "name": "Level 3", "number": 3, "elevation": 12.0}],
//     "spaces":  [{"id": "S301", "name": "Studio", "level_id": "L3",
//                  "footprint": [[0,0],[10,0],[10,10],[0,10]],
//                  "ventilation_mode": "NV", "setpoint_c": 26.0}],
//     "objects": [{"id": "F1", "kind": "CeilingFan", "space_id": "S301",
//                  "position": [5,5,3], "aoi": {"radius": 1.5}}],
//     "transform": {"origin_lat": 1.2966, "origin_lon": 103.7707, "rotation_deg": 0}
//   }
//
// Lengths are meters, angles degrees. `aoi` keys: radius (CeilingFan);
// throw, spread, direction (VavDiffuser); start, end, depth (Window, room on
// the left of start→end). Unknown keys are ignored with a warning.

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellgraph/spatial_model.hpp"

namespace cellgraph {

namespace detail {

using nlohmann::json;

class JsonReader {
 public:
  explicit JsonReader(std::vector<std::string>* warnings) : warnings_(warnings) {}

  const json& require(const json& obj, std::string_view key, std::string_view where) const {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(std::string(where) + ": missing field '" + std::string(key) + "'");
    return *it;
  }

  void check_keys(const json& obj, std::initializer_list<std::string_view> known,
                  std::string_view where) const {
    if (!obj.is_object()) throw SchemaError(std::string(where) + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (auto k : known) ok = ok || it.key() == k;
      if (!ok && warnings_)
        warnings_->push_back(std::string(where) + ": ignoring unknown field '" + it.key() + "'");
    }
  }

  static std::string string_at(const json& obj, std::string_view key, std::string_view where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(std::string(where) + ": missing field '" + std::string(key) + "'");
    if (!it->is_string()) throw SchemaError(std::string(where) + ": field '" + std::string(key) + "' must be a string");
    return it->get<std::string>();
  }

  static double number(const json& v, std::string_view where) {
    if (!v.is_number()) throw SchemaError(std::string(where) + ": expected a number");
    return v.get<double>();
  }

  static Point2 point2(const json& v, std::string_view where) {
    if (!v.is_array() || v.size() != 2) throw SchemaError(std::string(where) + ": expected [x, y]");
    return {number(v[0], where), number(v[1], where)};
  }

  static Point3 point3(const json& v, std::string_view where) {
    if (!v.is_array() || (v.size() != 2 && v.size() != 3))
      throw SchemaError(std::string(where) + ": expected [x, y, z]");
    return {number(v[0], where), number(v[1], where), v.size() == 3 ? number(v[2], where) : 0.0};
  }

 private:
  std::vector<std::string>* warnings_;
};

inline json point_json(Point2 p) { return json::array({p.x, p.y}); }

}  // namespace detail

inline SpatialModel parse_floorplan(std::string_view text, std::vector<std::string>* warnings = nullptr) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  detail::JsonReader rd(warnings);
  rd.check_keys(root, {"levels", "spaces", "objects", "transform"}, "document");

  SpatialModel model;
  for (const json& jl : rd.require(root, "levels", "document")) {
    rd.check_keys(jl, {"id", "name", "number", "elevation"}, "level");
    Level l;
    l.id = rd.string_at(jl, "id", "level");
    const std::string where = "level '" + l.id + "'";
    l.name = jl.contains("name") ? rd.string_at(jl, "name", where) : l.id;
    if (jl.contains("number")) {
      if (!jl["number"].is_number_integer()) throw SchemaError(where + ": 'number' must be an integer");
      l.number = jl["number"].get<int>();
    }
    if (jl.contains("elevation")) l.elevation = rd.number(jl["elevation"], where);
    model.levels.push_back(std::move(l));
  }

  for (const json& js : rd.require(root, "spaces", "document")) {
    rd.check_keys(js, {"id", "name", "level_id", "footprint", "ventilation_mode", "setpoint_c"}, "space");
    Space s;
    s.id = rd.string_at(js, "id", "space");
    const std::string where = "space '" + s.id + "'";
    s.name = js.contains("name") ? rd.string_at(js, "name", where) : s.id;
    s.level_id = rd.string_at(js, "level_id", where);
    const json& fp = rd.require(js, "footprint", where);
    if (!fp.is_array()) throw SchemaError(where + ": footprint must be an array of [x, y]");
    for (const json& v : fp) s.footprint.push_back(rd.point2(v, where + " footprint"));
    const std::string mode = rd.string_at(js, "ventilation_mode", where);
    auto m = parse_ventilation_mode(mode);
    if (!m) throw SchemaError(where + ": unknown ventilation_mode '" + mode + "'");
    s.ventilation_mode = *m;
    if (js.contains("setpoint_c") && !js["setpoint_c"].is_null())
      s.setpoint_c = rd.number(js["setpoint_c"], where);
    model.spaces.push_back(std::move(s));
  }

  if (root.contains("objects")) {
    for (const json& jo : root["objects"]) {
      rd.check_keys(jo, {"id", "kind", "space_id", "position", "aoi"}, "object");
      SpatialObject o;
      o.id = rd.string_at(jo, "id", "object");
      const std::string where = "object '" + o.id + "'";
      const std::string kind = rd.string_at(jo, "kind", where);
      auto k = parse_object_kind(kind);
      if (!k) throw SchemaError(where + ": unknown kind '" + kind + "'");
      o.kind = *k;
      o.space_id = rd.string_at(jo, "space_id", where);
      o.position = rd.point3(rd.require(jo, "position", where), where);
      if (jo.contains("aoi") && !jo["aoi"].is_null()) {
        const json& ja = jo["aoi"];
        rd.check_keys(ja, {"radius", "throw", "spread", "direction", "start", "end", "depth"}, where + " aoi");
        AoiParams a;
        if (ja.contains("radius")) a.radius = rd.number(ja["radius"], where);
        if (ja.contains("throw")) a.throw_m = rd.number(ja["throw"], where);
        if (ja.contains("spread")) a.spread_deg = rd.number(ja["spread"], where);
        if (ja.contains("direction")) a.direction_deg = rd.number(ja["direction"], where);
        if (ja.contains("start")) a.start = rd.point2(ja["start"], where);
        if (ja.contains("end")) a.end = rd.point2(ja["end"], where);
        if (ja.contains("depth")) a.depth = rd.number(ja["depth"], where);
        o.aoi = a;
      }
      if (o.kind == ObjectKind::CeilingFan && (!o.aoi || !o.aoi->radius))
        throw SchemaError(where + ": CeilingFan requires aoi.radius");
      if (o.kind == ObjectKind::Window && (!o.aoi || !o.aoi->start || !o.aoi->end))
        throw SchemaError(where + ": Window requires aoi.start and aoi.end");
      model.objects.push_back(std::move(o));
    }
  }

  const json& jt = rd.require(root, "transform", "document");
  rd.check_keys(jt, {"origin_lat", "origin_lon", "rotation_deg"}, "transform");
  model.transform = CoordinateTransform(rd.number(rd.require(jt, "origin_lat", "transform"), "transform"),
                                        rd.number(rd.require(jt, "origin_lon", "transform"), "transform"),
                                        jt.contains("rotation_deg") ? rd.number(jt["rotation_deg"], "transform") : 0.0);

  validate(model);
  return model;
}

inline nlohmann::json floorplan_to_json(const SpatialModel& model) {
  using detail::json;
  json root = json::object();
  json levels = json::array();
  for (const Level& l : model.levels)
    levels.push_back({{"id", l.id}, {"name", l.name}, {"number", l.number}, {"elevation", l.elevation}});
  json spaces = json::array();
  for (const Space& s : model.spaces) {
    json fp = json::array();
    for (Point2 p : s.footprint) fp.push_back(detail::point_json(p));
    json js = {{"id", s.id},
               {"name", s.name},
               {"level_id", s.level_id},
               {"footprint", fp},
               {"ventilation_mode", std::string(to_string(s.ventilation_mode))}};
    if (s.setpoint_c) js["setpoint_c"] = *s.setpoint_c;
    spaces.push_back(std::move(js));
  }
  json objects = json::array();
  for (const SpatialObject& o : model.objects) {
    json jo = {{"id", o.id},
               {"kind", std::string(to_string(o.kind))},
               {"space_id", o.space_id},
               {"position", json::array({o.position.x, o.position.y, o.position.z})}};
    if (o.aoi) {
      const AoiParams& a = *o.aoi;
      json ja = json::object();
      if (a.radius) ja["radius"] = *a.radius;
      if (a.throw_m) ja["throw"] = *a.throw_m;
      if (a.spread_deg) ja["spread"] = *a.spread_deg;
      if (a.direction_deg) ja["direction"] = *a.direction_deg;
      if (a.start) ja["start"] = detail::point_json(*a.start);
      if (a.end) ja["end"] = detail::point_json(*a.end);
      if (a.depth) ja["depth"] = *a.depth;
      jo["aoi"] = std::move(ja);
    }
    objects.push_back(std::move(jo));
  }
  root["levels"] = std::move(levels);
  root["spaces"] = std::move(spaces);
  root["objects"] = std::move(objects);
  root["transform"] = {{"origin_lat", model.transform.origin_lat()},
                       {"origin_lon", model.transform.origin_lon()},
                       {"rotation_deg", model.transform.rotation_deg()}};
  return root;
}

inline std::string serialize_floorplan(const SpatialModel& model) {
  return floorplan_to_json(model).dump(2) + "\n";
}

}  // namespace cellgraph
