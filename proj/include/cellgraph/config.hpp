#pragma once

// Single JSON configuration for the command-line pipeline. Every random
// stream is derived from the one root seed.

#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "cellgraph/csv.hpp"
#include "cellgraph/errors.hpp"
#include "cellgraph/evaluation.hpp"
#include "cellgraph/rng.hpp"
#include "cellgraph/scene.hpp"
#include "cellgraph/simulation.hpp"

namespace cellgraph {

struct PipelinePaths {
  std::string model;       // floor-plan JSON or IFC/STEP file
  std::string fixes;       // location fix CSV
  std::string feedback;    // feedback vote CSV
  std::string onboarding;  // per-user label histogram CSV
  std::string graph;       // adjacency list
  std::string embeddings;  // embedding TSV
  std::string forest;      // saved forest
  std::string out = "out";
};

struct PipelineConfig {
  std::optional<std::uint64_t> seed;
  std::string scene = "default";
  double cell_size = 1.0;
  bool cell_adjacency = true;
  std::optional<double> fan_radius;
  std::optional<double> window_width;
  std::optional<double> window_depth;
  std::size_t users = 30;
  std::size_t days = 10;
  double position_noise = 0.35;
  WalkParams walks;
  SkipGramParams skipgram;
  ForestParams forest;
  std::size_t n_splits = 30;
  double test_fraction = 0.03;
  std::size_t personalities = 10;
  PipelinePaths paths;

  std::uint64_t root_seed() const {
    if (!seed) throw ConfigError("a root seed is required (config \"seed\" or --seed)");
    return *seed;
  }
};

namespace detail {

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  T v{};
  read_field(j, key, v);
  out = v;
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw ConfigError("unknown config key '" + where + k + "'");
}

inline std::string resolve(const std::string& path, const std::filesystem::path& base) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  return p.is_absolute() || base.empty() ? path : (base / p).lexically_normal().string();
}

}  // namespace detail

// `base_dir` anchors relative paths. Referenced input files must exist.
inline PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  using detail::read_field;
  detail::reject_unknown(j,
                         {"seed", "scene", "cell_size", "cell_adjacency", "aoi", "simulation", "walks", "skipgram",
                          "forest", "split", "personalities", "paths"},
                         "");
  PipelineConfig c;
  read_field(j, "seed", c.seed);
  read_field(j, "scene", c.scene);
  read_field(j, "cell_size", c.cell_size);
  read_field(j, "cell_adjacency", c.cell_adjacency);
  read_field(j, "personalities", c.personalities);
  if (j.contains("aoi")) {
    const auto& a = j["aoi"];
    detail::reject_unknown(a, {"fan_radius", "window_width", "window_depth"}, "aoi.");
    read_field(a, "fan_radius", c.fan_radius);
    read_field(a, "window_width", c.window_width);
    read_field(a, "window_depth", c.window_depth);
  }
  if (j.contains("simulation")) {
    const auto& s = j["simulation"];
    detail::reject_unknown(s, {"users", "days", "position_noise"}, "simulation.");
    read_field(s, "users", c.users);
    read_field(s, "days", c.days);
    read_field(s, "position_noise", c.position_noise);
  }
  if (j.contains("walks")) {
    const auto& w = j["walks"];
    detail::reject_unknown(w, {"walks_per_node", "walk_length", "return_p", "inout_q", "threads"}, "walks.");
    read_field(w, "walks_per_node", c.walks.walks_per_node);
    read_field(w, "walk_length", c.walks.walk_length);
    read_field(w, "return_p", c.walks.return_p);
    read_field(w, "inout_q", c.walks.inout_q);
    read_field(w, "threads", c.walks.threads);
  }
  if (j.contains("skipgram")) {
    const auto& s = j["skipgram"];
    detail::reject_unknown(s, {"dim", "window", "negatives", "epochs", "lr_start", "lr_end", "workers"}, "skipgram.");
    read_field(s, "dim", c.skipgram.dim);
    read_field(s, "window", c.skipgram.window);
    read_field(s, "negatives", c.skipgram.negatives);
    read_field(s, "epochs", c.skipgram.epochs);
    read_field(s, "lr_start", c.skipgram.lr_start);
    read_field(s, "lr_end", c.skipgram.lr_end);
    read_field(s, "workers", c.skipgram.workers);
  }
  if (j.contains("forest")) {
    const auto& f = j["forest"];
    detail::reject_unknown(f, {"n_trees", "max_depth", "max_features", "min_samples_split", "bootstrap", "threads"},
                           "forest.");
    read_field(f, "n_trees", c.forest.n_trees);
    read_field(f, "max_depth", c.forest.max_depth);
    read_field(f, "max_features", c.forest.max_features);
    read_field(f, "min_samples_split", c.forest.min_samples_split);
    read_field(f, "bootstrap", c.forest.bootstrap);
    read_field(f, "threads", c.forest.threads);
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    detail::reject_unknown(s, {"n_splits", "test_fraction"}, "split.");
    read_field(s, "n_splits", c.n_splits);
    read_field(s, "test_fraction", c.test_fraction);
  }
  if (j.contains("paths")) {
    const auto& p = j["paths"];
    detail::reject_unknown(p, {"model", "fixes", "feedback", "onboarding", "graph", "embeddings", "forest", "out"},
                           "paths.");
    read_field(p, "model", c.paths.model);
    read_field(p, "fixes", c.paths.fixes);
    read_field(p, "feedback", c.paths.feedback);
    read_field(p, "onboarding", c.paths.onboarding);
    read_field(p, "graph", c.paths.graph);
    read_field(p, "embeddings", c.paths.embeddings);
    read_field(p, "forest", c.paths.forest);
    read_field(p, "out", c.paths.out);
  }
  for (std::string* path : {&c.paths.model, &c.paths.fixes, &c.paths.feedback, &c.paths.onboarding, &c.paths.graph,
                            &c.paths.embeddings, &c.paths.forest}) {
    *path = detail::resolve(*path, base_dir);
    if (!path->empty() && !std::filesystem::exists(*path)) throw IoError("config references missing file " + *path);
  }
  c.paths.out = detail::resolve(c.paths.out, base_dir);

  if (!(c.cell_size > 0.0)) throw ConfigError("cell_size must be positive");
  if (c.users == 0) throw ConfigError("simulation.users must be at least 1");
  if (c.skipgram.dim == 0) throw ConfigError("skipgram.dim must be at least 1");
  if (c.forest.n_trees == 0) throw ConfigError("forest.n_trees must be at least 1");
  if (c.n_splits == 0) throw ConfigError("split.n_splits must be at least 1");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) throw ConfigError("split.test_fraction must lie in (0, 1)");
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  return parse_pipeline_config(read_file(path), std::filesystem::path(path).parent_path());
}

inline SceneConfig scene_config_for(const PipelineConfig& c) {
  SceneConfig s;
  if (c.scene == "default") s = default_scene_config();
  else if (c.scene == "homogeneous") s = homogeneous_scene_config();
  else if (c.scene == "two_fan") s = two_fan_scene_config();
  else if (c.scene == "corridor") s = corridor_scene_config();
  else throw ConfigError("unknown scene preset '" + c.scene + "'");
  s.seed = derive_seed(c.root_seed(), "scene");
  s.cell_size = c.cell_size;
  if (c.fan_radius) s.fan_radius = *c.fan_radius;
  if (c.window_width) s.window_width = *c.window_width;
  if (c.window_depth) s.window_depth = *c.window_depth;
  return s;
}

inline SimConfig sim_config_for(const PipelineConfig& c) {
  SimConfig s;
  s.n_users = c.users;
  s.days = c.days;
  s.position_noise = c.position_noise;
  s.seed = derive_seed(c.root_seed(), "simulation");
  return s;
}

inline EvaluationConfig evaluation_config_for(const PipelineConfig& c) {
  const std::uint64_t root = c.root_seed();
  EvaluationConfig e;
  e.graph.cell_size = c.cell_size;
  e.graph.cell_adjacency = c.cell_adjacency;
  e.walks = c.walks;
  e.walks.seed = derive_seed(root, "walks");
  e.skipgram = c.skipgram;
  e.skipgram.seed = derive_seed(root, "skipgram");
  e.forest = c.forest;
  e.forest.seed = derive_seed(root, "forest");
  e.n_splits = c.n_splits;
  e.test_fraction = c.test_fraction;
  e.split_seed = derive_seed(root, "split-plan");
  e.personalities = c.personalities;
  e.personality_seed = derive_seed(root, "personality");
  return e;
}

}  // namespace cellgraph
