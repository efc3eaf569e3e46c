#pragma once

// End-to-end comparison of the cell-embedding feature set against the
// conventional feature sets, plus spatial-coherence measures of an
// embedding over a scene.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellgraph/classifier.hpp"
#include "cellgraph/embedding.hpp"
#include "cellgraph/graph.hpp"
#include "cellgraph/scene.hpp"
#include "cellgraph/similarity.hpp"
#include "cellgraph/simulation.hpp"

namespace cellgraph {

struct EvaluationConfig {
  GraphOptions graph;
  HnswParams hnsw;
  WalkParams walks;
  SkipGramParams skipgram;
  ForestParams forest;
  std::size_t n_splits = 30;
  double test_fraction = 0.03;
  std::uint64_t split_seed = 1;
  std::size_t personalities = 10;
  std::uint64_t personality_seed = 1;
  std::size_t anchors = 5;
  bool normalize_maps = false;
};

inline constexpr std::string_view kEmbeddingFeatureSet = "cell_embedding";

struct FeatureSet {
  std::string name;
  std::vector<std::string> columns;
};

// Conventional feature sets. A time-only set comes first as a null control.
inline std::vector<FeatureSet> baseline_feature_sets() {
  const std::vector<std::string> time{"hour", "weekday"};
  const std::vector<std::string> env{"air_temp", "humidity", "noise", "lux"};
  const std::vector<std::string> body{"near_body_temp", "heart_rate"};
  const std::vector<std::string> room{"room"};
  const std::vector<std::string> history{"history_cooler", "history_no_preference", "history_warmer"};
  auto cat = [](std::initializer_list<std::vector<std::string>> parts) {
    std::vector<std::string> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
  };
  return {
      {"time", time},
      {"time+env", cat({time, env})},
      {"time+env+near_body+hr", cat({time, env, body})},
      {"time+env+near_body+hr+room+history", cat({time, env, body, room, history})},
      {"time+near_body+hr+room+history", cat({time, body, room, history})},
      {"time+hr+room+history", cat({time, {"heart_rate"}, room, history})},
      {"time+room+history", cat({time, room, history})},
  };
}

struct FeatureTable {
  std::vector<std::string> names;
  Matrix X;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    throw ConfigError("unknown feature column '" + name + "'");
  }

  Matrix select(const std::vector<std::string>& cols) const {
    Matrix out(X.rows, cols.size());
    std::vector<std::size_t> idx;
    for (const auto& c : cols) idx.push_back(column(c));
    for (std::size_t r = 0; r < X.rows; ++r)
      for (std::size_t j = 0; j < idx.size(); ++j) out.at(r, j) = X.at(r, idx[j]);
    return out;
  }
};

// Every conventional feature for each linked record. Environment readings
// come from the sensor of the space the record was linked to; history is
// the smoothed label mix of the user's earlier votes.
inline FeatureTable conventional_features(const std::vector<FeedbackRecord>& records, const SimOutput& sim,
                                          const Scene& scene) {
  FeatureTable t;
  t.names = {"hour",       "weekday",        "air_temp",       "humidity",       "noise",
             "lux",        "near_body_temp", "heart_rate",     "room",           "history_cooler",
             "history_no_preference",        "history_warmer"};
  t.X = Matrix(records.size(), t.names.size());
  std::map<std::string, std::size_t> room_index;
  for (std::size_t i = 0; i < scene.model.spaces.size(); ++i) room_index[scene.model.spaces[i].id] = i;
  std::map<std::string, std::string> cell_space;
  for (const Cell& c : scene.cells) cell_space[c.id] = c.space_id;

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].user_id != records[b].user_id ? records[a].user_id < records[b].user_id
                                                    : records[a].timestamp < records[b].timestamp;
  });
  std::map<std::string, LabelHistogram> seen;
  for (std::size_t i : order) {
    const FeedbackRecord& r = records[i];
    const double since = r.timestamp - sim.start_time;
    const std::string& space = cell_space.at(r.cell_id);
    const SensorReading& env = reading_at(sim.sensors.at(space), r.timestamp);
    LabelHistogram& h = seen[r.user_id];
    const double n = h[0] + h[1] + h[2];
    auto row = t.X.row(i);
    row[0] = std::floor(std::fmod(since, 86400.0) / 3600.0);
    row[1] = std::fmod(std::floor(since / 86400.0), 7.0);
    row[2] = env.air_temp;
    row[3] = env.humidity;
    row[4] = env.noise;
    row[5] = env.lux;
    row[6] = r.near_body_temp;
    row[7] = r.heart_rate;
    row[8] = static_cast<double>(room_index.at(space));
    for (std::size_t k = 0; k < kNumLabels; ++k) row[9 + k] = (h[k] + 1.0) / (n + 3.0);
    h[static_cast<std::size_t>(r.label)] += 1.0;
  }
  return t;
}

struct FeatureSetResult {
  std::string name;
  std::vector<std::string> columns;
  CvMetrics metrics;
};

struct Evaluation {
  std::string scene_name;
  std::size_t n_votes = 0;
  std::size_t n_users = 0;
  double majority_rate = 0.0;
  double linkage_rate = 0.0;  // votes linked to their true cell
  std::vector<std::pair<std::string, std::size_t>> census;
  std::vector<FeatureSetResult> results;  // baselines, then the embedding set
  EmbeddingMatrix embedding;
  std::vector<std::string> anchors;
  std::vector<std::vector<SimilarityEntry>> similarity_maps;
  std::map<std::string, int> personalities;
  SplitPlan plan;

  const FeatureSetResult& result(std::string_view name) const {
    for (const auto& r : results)
      if (r.name == name) return r;
    throw ConfigError("no feature set '" + std::string(name) + "'");
  }
  // Accuracy points of the embedding set over `baseline`.
  double advantage_over(std::string_view baseline) const {
    return result(kEmbeddingFeatureSet).metrics.mean_test_accuracy - result(baseline).metrics.mean_test_accuracy;
  }
};

// Anchor cells for similarity maps: the cells under the first fans and
// windows, then evenly spaced cells.
inline std::vector<std::string> pick_anchors(const Scene& scene, std::size_t n) {
  std::vector<std::string> out;
  auto add = [&](const std::string& id) {
    if (out.size() < n && std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  };
  const CellLocator locator(scene.cells);
  std::size_t fans = 0, windows = 0;
  for (const auto& o : scene.model.objects) {
    if (o.kind == ObjectKind::CeilingFan && fans < 2) {
      add(locator.nearest(scene.model.find_space(o.space_id)->level_id, o.position.xy()).id);
      ++fans;
    } else if (o.kind == ObjectKind::Window && windows < 2) {
      const Point2 a = *o.aoi->start, b = *o.aoi->end;
      const Point2 mid{(a.x + b.x) / 2, (a.y + b.y) / 2};
      const Point2 dir = b - a;
      const double len = norm(dir);
      const Point2 inward{-dir.y / len * 0.5, dir.x / len * 0.5};
      add(locator.nearest(scene.model.find_space(o.space_id)->level_id, mid + inward).id);
      ++windows;
    }
  }
  for (std::size_t i = 0; out.size() < n && i < scene.cells.size(); ++i) {
    const std::size_t step = std::max<std::size_t>(1, scene.cells.size() / n);
    add(scene.cells[(i * step + step / 2) % scene.cells.size()].id);
  }
  return out;
}

inline Evaluation evaluate(const Scene& scene, const SimOutput& sim, const EvaluationConfig& cfg) {
  Evaluation ev;
  ev.scene_name = scene.config.name;
  AttributedGraph graph = build_graph(scene.model, scene.cells, cfg.graph);
  const CellLocator locator(scene.cells, cfg.hnsw);

  const std::vector<FeedbackRecord> records = link_votes(sim.votes, scene.model, locator);
  if (records.empty()) throw ConfigError("simulation produced no votes");
  ev.n_votes = records.size();
  std::size_t linked = 0;
  for (std::size_t i = 0; i < records.size(); ++i) linked += records[i].cell_id == sim.truth[i].cell_id;
  ev.linkage_rate = static_cast<double>(linked) / static_cast<double>(records.size());

  ev.personalities = cluster_personalities(sim.onboarding, std::min(cfg.personalities, sim.onboarding.size()),
                                           cfg.personality_seed);
  ev.n_users = sim.onboarding.size();
  std::vector<LocatedVote> located;
  located.reserve(sim.votes.size());
  for (const auto& v : sim.votes) {
    located.push_back({v.user_id, v.timestamp, level_for_floor(scene.model, v.floor),
                       scene.model.transform.to_local({v.lat, v.lon}), {}});
  }
  graph = link_feedback(graph, locator, located, ev.personalities).graph;
  ev.census = graph.census();

  const WalkGraph wg = WalkGraph::from_graph(graph);
  ev.embedding = train_skipgram(wg, random_walks(wg, cfg.walks), cfg.skipgram);

  std::vector<int> y;
  std::array<std::size_t, kNumLabels> counts{};
  for (const auto& r : records) {
    y.push_back(static_cast<int>(r.label));
    ++counts[static_cast<std::size_t>(r.label)];
  }
  ev.majority_rate = static_cast<double>(*std::max_element(counts.begin(), counts.end())) /
                     static_cast<double>(records.size());
  ev.plan = make_split_plan(records.size(), cfg.n_splits, cfg.test_fraction, cfg.split_seed);

  const FeatureTable table = conventional_features(records, sim, scene);
  for (const auto& fs : baseline_feature_sets()) {
    CvMetrics m = cross_validate(table.select(fs.columns), y, ev.plan, cfg.forest);
    m.feature_names = fs.columns;
    ev.results.push_back({fs.name, fs.columns, std::move(m)});
  }
  const LabeledDataset ds = assemble_features(records, ev.embedding, ev.personalities);
  ev.results.push_back({std::string(kEmbeddingFeatureSet), ds.feature_names, cross_validate(ds, ev.plan, cfg.forest)});

  ev.anchors = pick_anchors(scene, cfg.anchors);
  for (const auto& a : ev.anchors) {
    auto map = similarity_map(ev.embedding, a, scene.cells);
    ev.similarity_maps.push_back(cfg.normalize_maps ? normalize_map(std::move(map)) : std::move(map));
  }
  return ev;
}

inline nlohmann::ordered_json evaluation_to_json(const Evaluation& ev) {
  using json = nlohmann::ordered_json;
  json j;
  j["scene"] = ev.scene_name;
  j["n_votes"] = ev.n_votes;
  j["n_users"] = ev.n_users;
  j["majority_rate"] = ev.majority_rate;
  j["linkage_rate"] = ev.linkage_rate;
  json census = json::object();
  for (const auto& [label, n] : ev.census) census[label] = n;
  j["census"] = census;
  j["splits"] = {{"count", ev.plan.splits.size()},
                 {"test_fraction", ev.plan.test_fraction},
                 {"test_size", ev.plan.splits.empty() ? 0 : ev.plan.splits.front().test.size()}};
  json rows = json::array();
  for (const auto& r : ev.results) {
    rows.push_back({{"feature_set", r.name},
                    {"features", r.columns},
                    {"mean_train_accuracy", r.metrics.mean_train_accuracy},
                    {"mean_test_accuracy", r.metrics.mean_test_accuracy},
                    {"sd_test_accuracy", r.metrics.sd_test_accuracy}});
  }
  j["results"] = rows;
  const auto& emb = ev.result(kEmbeddingFeatureSet).metrics;
  json cmp = json::array();
  for (const auto& r : ev.results) {
    if (r.name == kEmbeddingFeatureSet) continue;
    const double base = r.metrics.mean_test_accuracy;
    cmp.push_back({{"baseline", r.name},
                   {"baseline_accuracy", base},
                   {"embedding_accuracy", emb.mean_test_accuracy},
                   {"improvement_points", 100.0 * (emb.mean_test_accuracy - base)},
                   {"improvement_percent", base > 0.0 ? 100.0 * (emb.mean_test_accuracy - base) / base : 0.0}});
  }
  j["comparison"] = cmp;
  j["embedding_metrics"] = metrics_to_json(emb);
  j["similarity_anchors"] = ev.anchors;
  return j;
}

inline std::string evaluation_to_text(const Evaluation& ev) {
  auto fixed = [](double v, int prec) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return std::string(buf);
  };
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  const double emb = ev.result(kEmbeddingFeatureSet).metrics.mean_test_accuracy;
  std::string out;
  out += "scene: " + ev.scene_name + "\n";
  out += "votes: " + std::to_string(ev.n_votes) + " from " + std::to_string(ev.n_users) + " users\n";
  out += "majority-class rate: " + fixed(ev.majority_rate, 3) + "\n";
  out += "vote linkage to true cell: " + fixed(ev.linkage_rate, 3) + "\n";
  out += "splits: " + std::to_string(ev.plan.splits.size()) + " x " +
         std::to_string(ev.plan.splits.empty() ? 0 : ev.plan.splits.front().test.size()) + " test rows\n\n";
  out += pad("feature set", 38) + pad("test acc", 10) + pad("sd", 8) + "embedding gain\n";
  for (const auto& r : ev.results) {
    const double acc = r.metrics.mean_test_accuracy;
    out += pad(r.name, 38) + pad(fixed(acc, 3), 10) + pad(fixed(r.metrics.sd_test_accuracy, 3), 8);
    if (r.name == kEmbeddingFeatureSet) out += "-";
    else out += (emb >= acc ? "+" : "") + fixed(100.0 * (emb - acc), 1) + " pts";
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spatial coherence of an embedding

inline double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw DimensionMismatch("spearman needs two equal-length series");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Breadth-first hop counts from `source` over ADJACENT edges only; cells
// not reachable that way are absent.
inline std::map<std::string, std::size_t> adjacency_hops(const AttributedGraph& g, const std::string& source) {
  std::map<std::string, std::size_t> out;
  std::vector<std::size_t> dist(g.node_count(), SIZE_MAX);
  std::vector<std::vector<std::uint32_t>> adj(g.node_count());
  for (const Edge& e : g.edges()) {
    if (e.relation != Relation::ADJACENT) continue;
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  const auto s = g.require(source);
  std::deque<std::uint32_t> q{s};
  dist[s] = 0;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop_front();
    out[g.node(u).id] = dist[u];
    for (auto v : adj[u]) {
      if (dist[v] != SIZE_MAX) continue;
      dist[v] = dist[u] + 1;
      q.push_back(v);
    }
  }
  return out;
}

struct Coherence {
  double within = 0.0;   // mean similarity of cell pairs in the same AoI class
  double between = 0.0;  // mean similarity of fan/window cell pairs
  double spearman = 0.0; // hop distance vs similarity from `anchor`
  std::string anchor;
};

// Over fan and window cells. The rank correlation uses every cell reachable
// from the anchor (the first fan cell) through cell adjacency.
inline Coherence spatial_coherence(const Scene& scene, const AttributedGraph& graph, const EmbeddingMatrix& emb) {
  std::array<std::vector<std::size_t>, 3> by_class;
  for (std::size_t i = 0; i < scene.cells.size(); ++i)
    by_class[static_cast<std::size_t>(scene.field.classes()[i])].push_back(i);
  const auto& fan = by_class[static_cast<std::size_t>(AoiClass::Fan)];
  const auto& win = by_class[static_cast<std::size_t>(AoiClass::Window)];
  if (fan.empty() || win.empty()) throw ConfigError("scene needs fan and window cells");
  auto sim = [&](std::size_t a, std::size_t b) {
    return cosine_similarity(emb.vector(scene.cells[a].id), emb.vector(scene.cells[b].id));
  };
  Coherence c;
  double within = 0.0;
  std::size_t n_within = 0;
  for (const auto* cls : {&fan, &win})
    for (std::size_t i = 0; i < cls->size(); ++i)
      for (std::size_t j = i + 1; j < cls->size(); ++j) {
        within += sim((*cls)[i], (*cls)[j]);
        ++n_within;
      }
  double between = 0.0;
  for (std::size_t a : fan)
    for (std::size_t b : win) between += sim(a, b);
  c.within = within / static_cast<double>(n_within);
  c.between = between / static_cast<double>(fan.size() * win.size());

  c.anchor = scene.cells[fan.front()].id;
  const auto hops = adjacency_hops(graph, c.anchor);
  std::vector<double> h, s;
  for (const auto& [id, d] : hops) {
    if (id == c.anchor) continue;
    h.push_back(static_cast<double>(d));
    s.push_back(cosine_similarity(emb.vector(c.anchor), emb.vector(id)));
  }
  c.spearman = spearman_rho(h, s);
  return c;
}

}  // namespace cellgraph
