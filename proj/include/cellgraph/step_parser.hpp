#pragma once

// Minimal ISO-10303-21 reader that pulls storeys, spaces and a handful of
// element types out of an IFC physical file. Geometry is limited to
// IfcPolyline footprints and IfcLocalPlacement translations.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cellgraph/errors.hpp"
#include "cellgraph/spatial_model.hpp"

namespace cellgraph {

namespace step {

struct Value;
using List = std::vector<Value>;

struct Null {
  friend bool operator==(Null, Null) { return true; }
};
struct Derived {  // '*'
  friend bool operator==(Derived, Derived) { return true; }
};
struct Ref {
  std::uint64_t id = 0;
  friend bool operator==(Ref, Ref) = default;
};
struct Enum {
  std::string name;
  friend bool operator==(const Enum&, const Enum&) = default;
};
struct Typed {  // e.g. IFCLABEL('x')
  std::string type;
  std::shared_ptr<List> args;
};

struct Value {
  std::variant<Null, Derived, Ref, std::string, double, Enum, List, Typed> v;

  const Ref* ref() const { return std::get_if<Ref>(&v); }
  const List* list() const { return std::get_if<List>(&v); }
  const std::string* str() const { return std::get_if<std::string>(&v); }
  const Enum* enumeration() const { return std::get_if<Enum>(&v); }
  std::optional<double> number() const {
    if (auto* d = std::get_if<double>(&v)) return *d;
    if (auto* t = std::get_if<Typed>(&v); t && t->args && t->args->size() == 1)
      return (*t->args)[0].number();
    return std::nullopt;
  }
  std::optional<std::string> text() const {
    if (auto* s = str()) return *s;
    if (auto* t = std::get_if<Typed>(&v); t && t->args && t->args->size() == 1)
      return (*t->args)[0].text();
    return std::nullopt;
  }
};

struct Entity {
  std::uint64_t id = 0;
  std::string type;  // upper case
  List args;
  std::size_t line = 0;
};

class ArgParser {
 public:
  ArgParser(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  List parse_list() {
    expect('(');
    List out;
    skip_ws();
    if (peek() == ')') {
      ++pos_;
      return out;
    }
    for (;;) {
      out.push_back(parse_value());
      skip_ws();
      const char c = get();
      if (c == ')') break;
      if (c != ',') fail("expected ',' or ')' in parameter list");
    }
    return out;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool at_end() const { return pos_ >= s_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw StepSyntaxError(line_, msg); }
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  char get() {
    if (pos_ >= s_.size()) fail("unexpected end of statement");
    return s_[pos_++];
  }
  void expect(char c) {
    skip_ws();
    if (get() != c) fail(std::string("expected '") + c + "'");
  }

  Value parse_value() {
    skip_ws();
    const char c = peek();
    if (c == '$') {
      ++pos_;
      return {Null{}};
    }
    if (c == '*') {
      ++pos_;
      return {Derived{}};
    }
    if (c == '#') {
      ++pos_;
      return {Ref{parse_uint()}};
    }
    if (c == '\'') return {parse_string()};
    if (c == '.') {
      ++pos_;
      std::string name;
      while (peek() != '.' && peek() != '\0') name.push_back(get());
      if (get() != '.') fail("unterminated enumeration");
      return {Enum{name}};
    }
    if (c == '(') return {parse_list()};
    if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) return {parse_number()};
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::string type;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') type.push_back(get());
      skip_ws();
      Typed t{to_upper(type), std::make_shared<List>(parse_list())};
      return {std::move(t)};
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::uint64_t parse_uint() {
    const std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (start == pos_) fail("expected entity number after '#'");
    std::uint64_t v = 0;
    std::from_chars(s_.data() + start, s_.data() + pos_, v);
    return v;
  }

  std::string parse_string() {
    ++pos_;  // opening quote
    std::string out;
    for (;;) {
      if (pos_ >= s_.size()) fail("unterminated string literal");
      const char c = s_[pos_++];
      if (c == '\'') {
        if (peek() == '\'') {
          out.push_back('\'');
          ++pos_;
          continue;
        }
        return out;
      }
      out.push_back(c);
    }
  }

  double parse_number() {
    const std::size_t start = pos_;
    if (peek() == '-' || peek() == '+') ++pos_;
    while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == 'E' ||
           peek() == 'e' || ((peek() == '-' || peek() == '+') && (s_[pos_ - 1] == 'E' || s_[pos_ - 1] == 'e')))
      ++pos_;
    std::string tok(s_.substr(start, pos_ - start));
    // STEP allows a trailing '.' with no fraction digits ("3." or "1.E-5").
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size() && !(tok.back() == '.' && used + 1 == tok.size())) fail("bad number '" + tok + "'");
      return v;
    } catch (const std::logic_error&) {
      fail("bad number '" + tok + "'");
    }
  }

 public:
  static std::string to_upper(std::string s) {
    for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

inline void collect_refs(const Value& v, std::vector<std::uint64_t>& out) {
  if (auto* r = v.ref()) {
    out.push_back(r->id);
  } else if (auto* l = v.list()) {
    for (const Value& x : *l) collect_refs(x, out);
  } else if (auto* t = std::get_if<Typed>(&v.v)) {
    if (t->args)
      for (const Value& x : *t->args) collect_refs(x, out);
  }
}

// Parses `#id = TYPE(args);` statements in the DATA section. A statement
// may wrap across lines only while its parentheses are open; a new
// `#id =` line or a section keyword before the terminating ';' is an error
// reported at the statement's first line.
inline std::vector<Entity> parse_data_section(std::string_view text) {
  std::vector<Entity> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  bool in_data = false;
  bool ended = false;

  std::string pending;
  std::size_t pending_line = 0;

  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };

  // True when `stmt` ends with ';' outside string literals.
  auto complete = [](std::string_view stmt) {
    bool in_str = false;
    char last = '\0';
    for (char c : stmt) {
      if (c == '\'') {
        in_str = !in_str;
        last = c;
      } else if (!in_str && !std::isspace(static_cast<unsigned char>(c))) {
        last = c;
      }
    }
    return !in_str && last == ';';
  };

  auto flush = [&](std::string_view stmt, std::size_t at) {
    stmt = trim(stmt);
    if (stmt.empty() || stmt.front() != '#') throw StepSyntaxError(at, "expected '#<id> = ENTITY(...);'");
    const std::size_t eq = stmt.find('=');
    if (eq == std::string_view::npos) throw StepSyntaxError(at, "missing '=' in entity instance");
    Entity e;
    e.line = at;
    const std::string_view id_part = trim(stmt.substr(1, eq - 1));
    auto [p, ec] = std::from_chars(id_part.data(), id_part.data() + id_part.size(), e.id);
    if (ec != std::errc() || p != id_part.data() + id_part.size())
      throw StepSyntaxError(at, "bad entity number '" + std::string(id_part) + "'");
    std::string_view rest = trim(stmt.substr(eq + 1));
    std::size_t name_end = 0;
    while (name_end < rest.size() &&
           (std::isalnum(static_cast<unsigned char>(rest[name_end])) || rest[name_end] == '_'))
      ++name_end;
    if (name_end == 0) throw StepSyntaxError(at, "missing entity type name");
    e.type = ArgParser::to_upper(std::string(rest.substr(0, name_end)));
    ArgParser ap(rest.substr(name_end), at);
    e.args = ap.parse_list();
    ap.skip_ws();
    std::string_view tail = trim(rest.substr(name_end + ap.pos()));
    if (tail != ";") throw StepSyntaxError(at, "expected ';' after parameter list");
    out.push_back(std::move(e));
  };

  while (pos <= text.size() && !ended) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(raw);

    if (!pending.empty()) {
      const bool restart = (!line.empty() && line.front() == '#') || line == "ENDSEC;";
      if (restart) throw StepSyntaxError(pending_line, "unterminated entity instance");
      pending.append(" ").append(line);
      if (complete(pending)) {
        flush(pending, pending_line);
        pending.clear();
      }
      continue;
    }
    if (line.empty() || line.starts_with("/*")) continue;
    if (!header_seen) {
      if (line != "ISO-10303-21;") throw StepSyntaxError(line_no, "missing ISO-10303-21 header");
      header_seen = true;
      continue;
    }
    if (!in_data) {
      if (line == "DATA;") in_data = true;
      else if (line == "END-ISO-10303-21;") ended = true;
      continue;
    }
    if (line == "ENDSEC;") {
      in_data = false;
      continue;
    }
    if (complete(line)) {
      flush(line, line_no);
    } else {
      pending = std::string(line);
      pending_line = line_no;
    }
  }
  if (!pending.empty()) throw StepSyntaxError(pending_line, "unterminated entity instance");
  if (!header_seen) throw StepSyntaxError(1, "missing ISO-10303-21 header");
  return out;
}

}  // namespace step

struct StepWarning {
  std::size_t line = 0;
  std::string message;
  bool skipped = false;  // non-whitelisted entity
};

struct IfcParseOptions {
  VentilationMode default_mode = VentilationMode::MV;
  double window_width = 1.0;  // used when IfcWindow has no OverallWidth
  CoordinateTransform transform;
};

struct IfcParseResult {
  SpatialModel model;
  std::vector<StepWarning> warnings;

  std::size_t skipped_count() const {
    std::size_t n = 0;
    for (const auto& w : warnings) n += w.skipped ? 1 : 0;
    return n;
  }
};

inline bool is_ifc_whitelisted(std::string_view type) {
  static const std::set<std::string, std::less<>> kTypes = {
      "IFCSPACE",        "IFCDOOR",          "IFCWINDOW",
      "IFCFURNITURE",    "IFCFURNISHINGELEMENT", "IFCCHAIR",
      "IFCDESK",         "IFCTABLE",         "IFCSOFA",
      "IFCSENSOR",       "IFCBUILDINGSTOREY", "IFCRELCONTAINEDINSPATIALSTRUCTURE",
      "IFCPOLYLINE",     "IFCCARTESIANPOINT", "IFCLOCALPLACEMENT",
      "IFCAXIS2PLACEMENT3D"};
  return kTypes.contains(type);
}

inline IfcParseResult parse_ifc_subset(std::string_view text, const IfcParseOptions& opts = {}) {
  using namespace step;
  IfcParseResult result;
  const std::vector<Entity> entities = parse_data_section(text);

  std::map<std::uint64_t, const Entity*> by_id;
  for (const Entity& e : entities) {
    if (!by_id.emplace(e.id, &e).second)
      throw StepSyntaxError(e.line, "duplicate entity #" + std::to_string(e.id));
  }
  for (const Entity& e : entities) {
    std::vector<std::uint64_t> refs;
    for (const Value& v : e.args) collect_refs(v, refs);
    for (auto r : refs)
      if (!by_id.contains(r))
        throw UnresolvedRef("#" + std::to_string(r) + " cited at line " + std::to_string(e.line) +
                            " is never defined");
  }
  for (const Entity& e : entities) {
    if (!is_ifc_whitelisted(e.type))
      result.warnings.push_back({e.line, "skipped " + e.type + " #" + std::to_string(e.id), true});
  }

  auto arg = [](const Entity& e, std::size_t i) -> const Value* {
    return i < e.args.size() ? &e.args[i] : nullptr;
  };
  auto entity_of = [&](const Value* v) -> const Entity* {
    if (!v || !v->ref()) return nullptr;
    return by_id.at(v->ref()->id);
  };
  auto cartesian = [&](const Entity* e) -> std::optional<Point3> {
    if (!e || e->type != "IFCCARTESIANPOINT" || e->args.empty() || !e->args[0].list()) return std::nullopt;
    const List& c = *e->args[0].list();
    Point3 p;
    if (c.size() > 0) p.x = c[0].number().value_or(0.0);
    if (c.size() > 1) p.y = c[1].number().value_or(0.0);
    if (c.size() > 2) p.z = c[2].number().value_or(0.0);
    return p;
  };
  // Sum of IfcLocalPlacement translations up the PlacementRelTo chain.
  auto placement_origin = [&](const Entity* lp) {
    Point3 acc;
    std::set<std::uint64_t> seen;
    while (lp && lp->type == "IFCLOCALPLACEMENT" && seen.insert(lp->id).second) {
      if (const Entity* ax = entity_of(arg(*lp, 1)); ax && ax->type == "IFCAXIS2PLACEMENT3D") {
        if (auto p = cartesian(entity_of(arg(*ax, 0)))) {
          acc.x += p->x;
          acc.y += p->y;
          acc.z += p->z;
        }
      }
      lp = entity_of(arg(*lp, 0));
    }
    return acc;
  };
  auto placement_chain = [&](const Entity* lp) {
    std::vector<std::uint64_t> chain;
    while (lp && lp->type == "IFCLOCALPLACEMENT") {
      if (std::find(chain.begin(), chain.end(), lp->id) != chain.end()) break;
      chain.push_back(lp->id);
      lp = entity_of(arg(*lp, 0));
    }
    return chain;
  };
  // Depth-first search from a representation reference to the first polyline.
  auto find_polyline = [&](const Value* start) -> const Entity* {
    std::vector<std::uint64_t> stack;
    if (start) collect_refs(*start, stack);
    std::set<std::uint64_t> seen;
    std::reverse(stack.begin(), stack.end());
    while (!stack.empty()) {
      const auto id = stack.back();
      stack.pop_back();
      if (!seen.insert(id).second) continue;
      const Entity* e = by_id.at(id);
      if (e->type == "IFCPOLYLINE") return e;
      std::vector<std::uint64_t> next;
      for (const Value& v : e->args) collect_refs(v, next);
      for (auto it = next.rbegin(); it != next.rend(); ++it) stack.push_back(*it);
    }
    return nullptr;
  };
  auto label_of = [&](const Entity& e, std::string fallback) {
    if (const Value* v = arg(e, 2); v) {
      if (auto t = v->text(); t && !t->empty()) return *t;
    }
    return fallback;
  };

  SpatialModel& model = result.model;
  model.transform = opts.transform;

  // Storeys, keyed by their placement entity for space assignment.
  std::map<std::uint64_t, std::string> storey_by_placement;
  int ordinal = 0;
  for (const Entity& e : entities) {
    if (e.type != "IFCBUILDINGSTOREY") continue;
    Level l;
    l.id = "L" + std::to_string(e.id);
    l.name = label_of(e, l.id);
    ++ordinal;
    l.number = ordinal;
    for (char c : l.name) {
      if (std::isdigit(static_cast<unsigned char>(c))) {
        l.number = c - '0';
        break;
      }
    }
    if (const Value* v = arg(e, 9); v)
      if (auto z = v->number()) l.elevation = *z;
    if (const Entity* lp = entity_of(arg(e, 5))) storey_by_placement[lp->id] = l.id;
    model.levels.push_back(std::move(l));
  }

  std::map<std::uint64_t, std::string> space_by_entity;
  for (const Entity& e : entities) {
    if (e.type != "IFCSPACE") continue;
    Space s;
    s.id = "S" + std::to_string(e.id);
    s.name = label_of(e, s.id);
    s.ventilation_mode = opts.default_mode;
    const Entity* lp = entity_of(arg(e, 5));
    const Point3 origin = placement_origin(lp);
    for (auto pid : placement_chain(lp)) {
      if (auto it = storey_by_placement.find(pid); it != storey_by_placement.end()) {
        s.level_id = it->second;
        break;
      }
    }
    if (s.level_id.empty() && model.levels.size() == 1) s.level_id = model.levels.front().id;
    if (s.level_id.empty()) throw DanglingRef("space #" + std::to_string(e.id) + " is not placed on any storey");
    const Entity* poly = find_polyline(arg(e, 6));
    if (!poly) throw GeometryError("space #" + std::to_string(e.id) + " has no IfcPolyline footprint");
    if (!poly->args.empty() && poly->args[0].list()) {
      for (const Value& v : *poly->args[0].list()) {
        auto p = cartesian(entity_of(&v));
        if (!p) throw GeometryError("polyline #" + std::to_string(poly->id) + " references a non-point");
        s.footprint.push_back({p->x + origin.x, p->y + origin.y});
      }
    }
    if (s.footprint.size() > 1 && s.footprint.front() == s.footprint.back()) s.footprint.pop_back();
    space_by_entity[e.id] = s.id;
    model.spaces.push_back(std::move(s));
  }

  std::map<std::uint64_t, std::string> container;  // element entity -> space id
  for (const Entity& e : entities) {
    if (e.type != "IFCRELCONTAINEDINSPATIALSTRUCTURE") continue;
    const Entity* relating = entity_of(arg(e, 5));
    if (!relating) continue;
    auto sp = space_by_entity.find(relating->id);
    const Value* related = arg(e, 4);
    if (!related || !related->list()) continue;
    for (const Value& v : *related->list()) {
      if (const Entity* el = entity_of(&v)) {
        if (sp != space_by_entity.end()) container[el->id] = sp->second;
        else container.emplace(el->id, std::string());  // storey-level containment
      }
    }
  }

  auto furniture_kind = [&](const Entity& e) {
    if (e.type == "IFCCHAIR") return ObjectKind::Chair;
    if (e.type == "IFCDESK") return ObjectKind::Desk;
    if (e.type == "IFCTABLE") return ObjectKind::DiningTable;
    if (e.type == "IFCSOFA") return ObjectKind::Sofa;
    std::string hint;
    for (std::size_t i : {8u, 4u, 2u}) {
      if (const Value* v = arg(e, i)) {
        if (auto* en = v->enumeration()) hint += en->name + " ";
        else if (auto t = v->text()) hint += ArgParser::to_upper(*t) + " ";
      }
    }
    if (hint.find("CHAIR") != std::string::npos) return ObjectKind::Chair;
    if (hint.find("DESK") != std::string::npos) return ObjectKind::Desk;
    if (hint.find("SOFA") != std::string::npos) return ObjectKind::Sofa;
    if (hint.find("TABLE") != std::string::npos) return ObjectKind::DiningTable;
    return ObjectKind::MultiTable;
  };

  for (const Entity& e : entities) {
    std::optional<ObjectKind> kind;
    if (e.type == "IFCDOOR") kind = ObjectKind::Door;
    else if (e.type == "IFCWINDOW") kind = ObjectKind::Window;
    else if (e.type == "IFCSENSOR") kind = ObjectKind::Sensor;
    else if (e.type == "IFCFURNITURE" || e.type == "IFCFURNISHINGELEMENT" || e.type == "IFCCHAIR" ||
             e.type == "IFCDESK" || e.type == "IFCTABLE" || e.type == "IFCSOFA")
      kind = furniture_kind(e);
    if (!kind) continue;

    SpatialObject o;
    o.id = std::string(to_string(*kind)).substr(0, 2) + std::to_string(e.id);
    o.kind = *kind;
    o.position = placement_origin(entity_of(arg(e, 5)));
    auto c = container.find(e.id);
    if (c != container.end() && !c->second.empty()) {
      o.space_id = c->second;
    } else {
      for (const Space& s : model.spaces) {
        if (contains(s.footprint, o.position.xy())) {
          o.space_id = s.id;
          break;
        }
      }
    }
    if (o.space_id.empty()) {
      result.warnings.push_back({e.line, e.type + " #" + std::to_string(e.id) + " lies in no space; dropped", false});
      continue;
    }
    if (o.kind == ObjectKind::Window) {
      double width = opts.window_width;
      if (const Value* v = arg(e, 9))
        if (auto w = v->number(); w && *w > 0) width = *w;
      AoiParams a;
      a.start = Point2{o.position.x - 0.5 * width, o.position.y};
      a.end = Point2{o.position.x + 0.5 * width, o.position.y};
      o.aoi = a;
    }
    model.objects.push_back(std::move(o));
  }

  validate(model);
  return result;
}

}  // namespace cellgraph
