#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cellgraph/csv.hpp"
#include "cellgraph/errors.hpp"
#include "cellgraph/hnsw.hpp"
#include "cellgraph/spatial_model.hpp"

namespace cellgraph {

// ---------------------------------------------------------------------------
// Discretization

struct Cell {
  std::string id;  // C{level}{space:02}{index:04}
  Point2 center;
  std::string space_id;
  std::string level_id;
  long col = 0;  // lattice coordinates within the space
  long row = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

inline std::string format_cell_id(int level_number, std::size_t space_ordinal, std::size_t index) {
  std::ostringstream os;
  os << 'C' << level_number << std::setw(2) << std::setfill('0') << space_ordinal << std::setw(4)
     << std::setfill('0') << index;
  return os.str();
}

// Square lattice per space anchored at the footprint's bounding-box corner.
// A cell exists when its center lies in the footprint; ids run row-major
// (south to north, then west to east). Spaces too small for any cell are
// reported through `warnings`.
inline std::vector<Cell> discretize(const SpatialModel& model, double cell_size,
                                    std::vector<std::string>* warnings = nullptr) {
  if (!(cell_size > 0.0)) throw ConfigError("cell_size must be positive");
  std::vector<Cell> cells;
  std::map<std::string, std::size_t> ordinal_in_level;
  for (const Space& s : model.spaces) {
    const Level* level = model.find_level(s.level_id);
    if (!level) throw DanglingRef("space '" + s.id + "' references missing level '" + s.level_id + "'");
    const std::size_t ordinal = ++ordinal_in_level[s.level_id];
    const BoundingBox box = bounds(s.footprint);
    const auto cols = static_cast<long>(std::ceil((box.max.x - box.min.x) / cell_size - 1e-9));
    const auto rows = static_cast<long>(std::ceil((box.max.y - box.min.y) / cell_size - 1e-9));
    std::size_t index = 0;
    for (long r = 0; r < rows; ++r) {
      for (long c = 0; c < cols; ++c) {
        const Point2 center{box.min.x + (static_cast<double>(c) + 0.5) * cell_size,
                            box.min.y + (static_cast<double>(r) + 0.5) * cell_size};
        if (!contains(s.footprint, center)) continue;
        cells.push_back({format_cell_id(level->number, ordinal, ++index), center, s.id, s.level_id, c, r});
      }
    }
    if (index == 0 && warnings) warnings->push_back("EmptySpace: space '" + s.id + "' yields no cells");
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Attributed graph

enum class Relation : std::uint8_t {
  ADJACENT,
  IN_AOI_OF,
  CONTAINED_IN,
  ON_LEVEL,
  HAS_ATTRIBUTE,
  VOTED_AT,
  BELONGS_TO_PERSONALITY,
};

inline constexpr std::array<Relation, 7> kRelations = {
    Relation::ADJACENT,      Relation::IN_AOI_OF, Relation::CONTAINED_IN,          Relation::ON_LEVEL,
    Relation::HAS_ATTRIBUTE, Relation::VOTED_AT,  Relation::BELONGS_TO_PERSONALITY};

inline std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::ADJACENT: return "ADJACENT";
    case Relation::IN_AOI_OF: return "IN_AOI_OF";
    case Relation::CONTAINED_IN: return "CONTAINED_IN";
    case Relation::ON_LEVEL: return "ON_LEVEL";
    case Relation::HAS_ATTRIBUTE: return "HAS_ATTRIBUTE";
    case Relation::VOTED_AT: return "VOTED_AT";
    case Relation::BELONGS_TO_PERSONALITY: return "BELONGS_TO_PERSONALITY";
  }
  return "?";
}

inline std::optional<Relation> parse_relation(std::string_view s) {
  for (Relation r : kRelations)
    if (to_string(r) == s) return r;
  return std::nullopt;
}

inline const std::set<std::string, std::less<>>& allowed_node_labels() {
  static const std::set<std::string, std::less<>> labels = [] {
    std::set<std::string, std::less<>> out = {"Cell",     "Space",    "Level",     "ThermalComfortPersonality",
                                              "Occupant", "Feedback", "Attribute"};
    for (ObjectKind k : kObjectKinds) out.emplace(node_label(k));
    return out;
  }();
  return labels;
}

struct Node {
  std::string id;
  std::string label;
  std::map<std::string, std::string> attrs;
};

struct Edge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  Relation relation = Relation::ADJACENT;
};

// Typed nodes plus an undirected adjacency view of typed edges. Self-loops
// are rejected and a second edge between the same pair is ignored.
class AttributedGraph {
 public:
  std::uint32_t add_node(std::string id, std::string label, std::map<std::string, std::string> attrs = {}) {
    if (!allowed_node_labels().contains(label)) throw SchemaError("unknown node label '" + label + "'");
    if (auto it = index_.find(id); it != index_.end()) {
      if (nodes_[it->second].label != label)
        throw SchemaError("node '" + id + "' already exists with label " + nodes_[it->second].label);
      return it->second;
    }
    const auto idx = static_cast<std::uint32_t>(nodes_.size());
    index_.emplace(id, idx);
    nodes_.push_back({std::move(id), std::move(label), std::move(attrs)});
    adjacency_.emplace_back();
    return idx;
  }

  bool add_edge(std::uint32_t src, std::uint32_t dst, Relation rel) {
    if (src == dst) throw SchemaError("self-loop on node '" + nodes_[src].id + "'");
    const std::uint64_t key = pair_key(src, dst);
    if (!pairs_.insert(key).second) return false;
    edges_.push_back({src, dst, rel});
    adjacency_[src].push_back(dst);
    adjacency_[dst].push_back(src);
    return true;
  }

  bool add_edge(std::string_view src, std::string_view dst, Relation rel) {
    return add_edge(require(src), require(dst), rel);
  }

  std::optional<std::uint32_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t require(std::string_view id) const {
    auto i = find(id);
    if (!i) throw SchemaError("unknown node '" + std::string(id) + "'");
    return *i;
  }

  bool has_edge(std::string_view a, std::string_view b) const {
    auto ia = find(a);
    auto ib = find(b);
    return ia && ib && pairs_.contains(pair_key(*ia, *ib));
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(std::uint32_t i) const { return nodes_[i]; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::uint32_t>& neighbours(std::uint32_t i) const { return adjacency_[i]; }
  std::size_t degree(std::uint32_t i) const { return adjacency_[i].size(); }

  // (label, count), by descending count then label.
  std::vector<std::pair<std::string, std::size_t>> census() const {
    std::map<std::string, std::size_t> counts;
    for (const Node& n : nodes_) ++counts[n.label];
    std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
  }

  struct NamedEdge {
    std::string src;
    Relation relation;
    std::string dst;
    friend auto operator<=>(const NamedEdge& a, const NamedEdge& b) {
      if (auto c = a.src <=> b.src; c != 0) return c;
      if (auto c = to_string(a.relation) <=> to_string(b.relation); c != 0) return c;
      return a.dst <=> b.dst;
    }
    friend bool operator==(const NamedEdge&, const NamedEdge&) = default;
  };

  std::vector<NamedEdge> canonical_edges() const {
    std::vector<NamedEdge> out;
    out.reserve(edges_.size());
    for (const Edge& e : edges_) out.push_back({nodes_[e.src].id, e.relation, nodes_[e.dst].id});
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::uint32_t>> adjacency_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::set<std::uint64_t> pairs_;
};

inline std::string attribute_node_id(VentilationMode m) { return "attr:" + std::string(to_string(m)); }
inline std::string attribute_node_id(ObjectKind k) { return "attr:" + std::string(to_string(k)); }

inline std::string_view attribute_description(VentilationMode m) {
  switch (m) {
    case VentilationMode::NV: return "natural-ventilated space";
    case VentilationMode::MV: return "mechanically-ventilated space";
    case VentilationMode::AC: return "air-conditioned space";
    case VentilationMode::HC: return "hybrid-cooled space";
  }
  return "";
}

struct GraphOptions {
  double cell_size = 1.0;
  bool cell_adjacency = true;
  // Connect every AoI-bearing object to a shared node for its kind, the
  // way ventilation modes are connected to spaces.
  bool object_kind_attributes = true;
};

inline std::string format_coord(double v) { return format_number(v); }

inline AttributedGraph build_graph(const SpatialModel& model, const std::vector<Cell>& cells,
                                   const GraphOptions& opts = {}) {
  AttributedGraph g;
  for (const Level& l : model.levels)
    g.add_node(l.id, "Level", {{"name", l.name}, {"number", std::to_string(l.number)}});
  for (const Space& s : model.spaces) {
    std::map<std::string, std::string> attrs{{"name", s.name},
                                             {"ventilation_mode", std::string(to_string(s.ventilation_mode))}};
    if (s.setpoint_c) attrs["setpoint_c"] = format_coord(*s.setpoint_c);
    g.add_node(s.id, "Space", std::move(attrs));
    g.add_edge(s.id, s.level_id, Relation::ON_LEVEL);
    const std::string attr = attribute_node_id(s.ventilation_mode);
    g.add_node(attr, "Attribute", {{"name", std::string(attribute_description(s.ventilation_mode))}});
    g.add_edge(s.id, attr, Relation::HAS_ATTRIBUTE);
  }

  struct AoiObject {
    std::string id;
    std::string level_id;
    AoiRegion region;
  };
  std::vector<AoiObject> aoi_objects;
  for (const SpatialObject& o : model.objects) {
    g.add_node(o.id, std::string(node_label(o.kind)),
               {{"kind", std::string(to_string(o.kind))}, {"x", format_coord(o.position.x)},
                {"y", format_coord(o.position.y)}});
    g.add_edge(o.id, o.space_id, Relation::CONTAINED_IN);
    if (auto region = aoi_region(o)) {
      aoi_objects.push_back({o.id, model.find_space(o.space_id)->level_id, std::move(*region)});
      if (opts.object_kind_attributes) {
        const std::string attr = attribute_node_id(o.kind);
        g.add_node(attr, "Attribute", {{"name", std::string(to_string(o.kind))}});
        g.add_edge(o.id, attr, Relation::HAS_ATTRIBUTE);
      }
    }
  }

  std::map<std::tuple<std::string, long, long>, std::uint32_t> lattice;
  for (const Cell& c : cells) {
    const auto idx = g.add_node(c.id, "Cell", {{"x", format_coord(c.center.x)},
                                               {"y", format_coord(c.center.y)},
                                               {"space_id", c.space_id}});
    g.add_edge(idx, g.require(c.space_id), Relation::CONTAINED_IN);
    lattice.emplace(std::make_tuple(c.space_id, c.col, c.row), idx);
  }
  if (opts.cell_adjacency) {
    for (const Cell& c : cells) {
      const auto self = lattice.at({c.space_id, c.col, c.row});
      for (auto [dc, dr] : {std::pair{1L, 0L}, std::pair{0L, 1L}}) {
        auto it = lattice.find({c.space_id, c.col + dc, c.row + dr});
        if (it != lattice.end()) g.add_edge(self, it->second, Relation::ADJACENT);
      }
    }
  }
  for (const Cell& c : cells) {
    for (const AoiObject& a : aoi_objects) {
      if (a.level_id == c.level_id && a.region.contains(c.center))
        g.add_edge(c.id, a.id, Relation::IN_AOI_OF);
    }
  }
  return g;
}

// `src<TAB>relation<TAB>dst`, one edge per line, canonical order.
inline std::string export_adjacency_list(const AttributedGraph& g) {
  std::string out;
  for (const auto& e : g.canonical_edges()) {
    out += e.src;
    out += '\t';
    out += to_string(e.relation);
    out += '\t';
    out += e.dst;
    out += '\n';
  }
  return out;
}

struct AdjacencyRecord {
  std::string src;
  Relation relation;
  std::string dst;
};

inline std::vector<AdjacencyRecord> parse_adjacency_list(std::string_view text) {
  std::vector<AdjacencyRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos)
      throw SchemaError("adjacency list line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
    auto rel = parse_relation(line.substr(t1 + 1, t2 - t1 - 1));
    if (!rel) throw SchemaError("adjacency list line " + std::to_string(line_no) + ": unknown relation");
    out.push_back({std::string(line.substr(0, t1)), *rel, std::string(line.substr(t2 + 1))});
  }
  return out;
}

inline std::string export_census_csv(const AttributedGraph& g) {
  std::string out = "label,count\n";
  for (const auto& [label, count] : g.census()) out += label + "," + std::to_string(count) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Cell lookup and feedback linking

// One k-NN index per level over that level's cell centers.
class CellLocator {
 public:
  CellLocator() = default;
  explicit CellLocator(const std::vector<Cell>& cells, HnswParams params = {}) {
    std::map<std::string, std::pair<std::vector<Point2>, std::vector<std::string>>> per_level;
    for (const Cell& c : cells) {
      auto& [pts, ids] = per_level[c.level_id];
      pts.push_back(c.center);
      ids.push_back(c.id);
    }
    for (auto& [level, data] : per_level)
      indices_.emplace(level, KnnIndex(std::move(data.first), std::move(data.second), params));
  }

  const KnnIndex& index(std::string_view level_id) const {
    auto it = indices_.find(std::string(level_id));
    if (it == indices_.end() || it->second.empty())
      throw NoCellOnLevel("no cells indexed on level '" + std::string(level_id) + "'");
    return it->second;
  }

  // Nearest cell; equidistant candidates resolve to the smaller cell id.
  KnnHit nearest(std::string_view level_id, Point2 p) const { return index(level_id).query(p, 1).front(); }

 private:
  std::map<std::string, KnnIndex, std::less<>> indices_;
};

struct LocatedVote {
  std::string user_id;
  double timestamp = 0.0;
  std::string level_id;
  Point2 position;  // local frame
  std::map<std::string, std::string> attrs;
};

struct LinkResult {
  AttributedGraph graph;
  std::vector<std::string> vote_cells;  // linked cell per input vote
};

inline std::string personality_node_id(int personality) {
  std::ostringstream os;
  os << "TCP" << std::setw(2) << std::setfill('0') << personality;
  return os.str();
}
inline std::string occupant_node_id(std::string_view user) { return "U:" + std::string(user); }

inline LinkResult link_feedback(const AttributedGraph& graph, const CellLocator& locator,
                                const std::vector<LocatedVote>& votes,
                                const std::map<std::string, int>& personalities) {
  LinkResult r{graph, {}};
  r.vote_cells.reserve(votes.size());
  std::size_t n = 0;
  for (const LocatedVote& v : votes) {
    const KnnHit hit = locator.nearest(v.level_id, v.position);
    std::ostringstream id;
    id << "FB" << std::setw(6) << std::setfill('0') << ++n;
    auto attrs = v.attrs;
    attrs["user_id"] = v.user_id;
    attrs["timestamp"] = format_coord(v.timestamp);
    const auto fb = r.graph.add_node(id.str(), "Feedback", std::move(attrs));
    r.graph.add_edge(fb, r.graph.require(hit.id), Relation::VOTED_AT);
    r.vote_cells.push_back(hit.id);
  }
  for (const auto& [user, p] : personalities) {
    const auto occ = r.graph.add_node(occupant_node_id(user), "Occupant", {{"user_id", user}});
    const auto tcp = r.graph.add_node(personality_node_id(p), "ThermalComfortPersonality",
                                      {{"personality", std::to_string(p)}});
    r.graph.add_edge(occ, tcp, Relation::BELONGS_TO_PERSONALITY);
  }
  return r;
}

}  // namespace cellgraph
