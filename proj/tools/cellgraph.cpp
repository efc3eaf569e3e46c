// Command-line front end. Each subcommand reads and writes the documented
// file formats; exit status is 0 on success, 1 on validation errors and 2 on
// I/O errors.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cellgraph.hpp"

namespace fs = std::filesystem;
using namespace cellgraph;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;

  std::string input, model, fixes, feedback, onboarding, graph, embeddings, forest, anchor;
  bool no_cell_adjacency = false;
  bool normalize = false;
  double hr = 72.0, temp = 31.0;
  std::size_t top = 10;
};

// Config file first, then command-line overrides.
PipelineConfig resolve(const Options& o) {
  PipelineConfig c = o.config.empty() ? PipelineConfig{} : load_pipeline_config(o.config);
  if (o.seed) c.seed = o.seed;
  if (!o.out.empty()) c.paths.out = o.out;
  if (o.no_cell_adjacency) c.cell_adjacency = false;
  auto take = [](const std::string& flag, std::string& slot) {
    if (!flag.empty()) slot = flag;
  };
  take(o.model, c.paths.model);
  take(o.fixes, c.paths.fixes);
  take(o.feedback, c.paths.feedback);
  take(o.onboarding, c.paths.onboarding);
  take(o.graph, c.paths.graph);
  take(o.embeddings, c.paths.embeddings);
  take(o.forest, c.paths.forest);
  return c;
}

const std::string& need(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing input: ") + what);
  if (!fs::exists(path)) throw IoError(std::string(what) + " '" + path + "' does not exist");
  return path;
}

std::string out_path(const PipelineConfig& c, const std::string& name) {
  std::error_code ec;
  fs::create_directories(c.paths.out, ec);
  if (ec) throw IoError("cannot create output directory '" + c.paths.out + "': " + ec.message());
  return (fs::path(c.paths.out) / name).string();
}

void emit(const PipelineConfig& c, const std::string& name, std::string_view content) {
  const std::string path = out_path(c, name);
  write_file(path, content);
  std::cout << "wrote " << path << "\n";
}

SpatialModel read_model(const PipelineConfig& c) {
  std::vector<std::string> warnings;
  SpatialModel m = load_model(need(c.paths.model, "--model"), &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << c.paths.model << ": " << w << "\n";
  return m;
}

std::vector<Cell> read_cells(const PipelineConfig& c, const SpatialModel& model) {
  std::vector<std::string> warnings;
  auto cells = discretize(model, c.cell_size, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return cells;
}

std::vector<FeedbackRecord> read_records(const PipelineConfig& c, const SpatialModel& model,
                                         const std::vector<Cell>& cells) {
  const auto& path = need(c.paths.feedback, "--feedback");
  return link_votes(parse_feedback_csv(read_file(path), path), model, CellLocator(cells));
}

EmbeddingMatrix read_embeddings(const PipelineConfig& c) {
  return parse_embeddings_tsv(read_file(need(c.paths.embeddings, "--embeddings")));
}

LabeledDataset read_dataset(const PipelineConfig& c) {
  const SpatialModel model = read_model(c);
  const auto cells = read_cells(c, model);
  return assemble_features(read_records(c, model, cells), read_embeddings(c));
}

// ---------------------------------------------------------------------------

void cmd_ingest(const Options& o) {
  PipelineConfig c = resolve(o);
  if (!o.input.empty()) c.paths.model = o.input;
  const SpatialModel model = read_model(c);
  emit(c, "model.json", serialize_floorplan(model));
}

void cmd_discretize(const Options& o) {
  const PipelineConfig c = resolve(o);
  const SpatialModel model = read_model(c);
  emit(c, "cells.csv", cells_to_csv(read_cells(c, model)));
}

void cmd_build_graph(const Options& o) {
  const PipelineConfig c = resolve(o);
  const SpatialModel model = read_model(c);
  const auto cells = read_cells(c, model);
  GraphOptions opts;
  opts.cell_size = c.cell_size;
  opts.cell_adjacency = c.cell_adjacency;
  AttributedGraph graph = build_graph(model, cells, opts);
  if (!c.paths.feedback.empty()) {
    const CellLocator locator(cells);
    const auto& path = need(c.paths.feedback, "--feedback");
    const auto votes = parse_feedback_csv(read_file(path), path);
    const auto records = link_votes(votes, model, locator);
    std::map<std::string, LabelHistogram> onboarding;
    if (!c.paths.onboarding.empty())
      onboarding = parse_onboarding_csv(read_file(need(c.paths.onboarding, "--onboarding")), c.paths.onboarding);
    const auto personalities =
        personalities_for(records, onboarding, c.personalities, derive_seed(c.root_seed(), "personality"));
    graph = link_feedback(graph, locator, locate_votes(model, votes), personalities).graph;
  }
  emit(c, "graph.tsv", export_adjacency_list(graph));
  emit(c, "census.csv", export_census_csv(graph));
}

void cmd_locate(const Options& o) {
  const PipelineConfig c = resolve(o);
  const SpatialModel model = read_model(c);
  const auto cells = read_cells(c, model);
  const auto& path = need(c.paths.fixes, "--fixes");
  const auto located = locate_fixes(model, CellLocator(cells), parse_fixes_csv(read_file(path), path));
  emit(c, "located.csv", located_fixes_csv(located));
}

void cmd_embed(const Options& o) {
  const PipelineConfig c = resolve(o);
  const EvaluationConfig ec = evaluation_config_for(c);
  const auto& path = need(c.paths.graph, "--graph");
  const WalkGraph g = WalkGraph::from_adjacency(parse_adjacency_list(read_file(path)));
  const auto corpus = random_walks(g, ec.walks);
  emit(c, "embeddings.tsv", export_embeddings_tsv(train_skipgram(g, corpus, ec.skipgram)));
}

void cmd_similarity(const Options& o) {
  const PipelineConfig c = resolve(o);
  const SpatialModel model = read_model(c);
  const auto cells = read_cells(c, model);
  auto map = similarity_map(read_embeddings(c), o.anchor, cells);
  if (o.normalize) map = normalize_map(std::move(map));
  emit(c, "similarity_" + o.anchor + ".geojson", similarity_map_geojson(map, model.transform, o.anchor));
  emit(c, "similarity_" + o.anchor + ".csv", similarity_map_csv(map));
}

void cmd_train(const Options& o) {
  const PipelineConfig c = resolve(o);
  const EvaluationConfig ec = evaluation_config_for(c);
  const LabeledDataset ds = read_dataset(c);
  const ForestModel model = train_forest(ds.X, ds.y, kNumLabels, ec.forest);
  for (const auto& w : model.warnings) std::cerr << "warning: " << w << "\n";
  emit(c, "forest.txt", save_forest(model));
}

void cmd_cross_validate(const Options& o) {
  const PipelineConfig c = resolve(o);
  const EvaluationConfig ec = evaluation_config_for(c);
  const LabeledDataset ds = read_dataset(c);
  const SplitPlan plan = make_split_plan(ds.X.rows, ec.n_splits, ec.test_fraction, ec.split_seed);
  nlohmann::ordered_json j;
  j["rows"] = ds.X.rows;
  j["splits"] = plan.splits.size();
  j["test_fraction"] = plan.test_fraction;
  j["test_size"] = plan.splits.front().test.size();
  j["metrics"] = metrics_to_json(cross_validate(ds, plan, ec.forest));
  emit(c, "cv.json", j.dump(2) + "\n");
}

void cmd_recommend(const Options& o) {
  const PipelineConfig c = resolve(o);
  const SpatialModel model = read_model(c);
  const auto cells = read_cells(c, model);
  const ForestModel forest = load_forest(read_file(need(c.paths.forest, "--forest")));
  const auto scores = recommend_cells(forest, read_embeddings(c), cell_ids(cells), o.hr, o.temp, o.top);
  std::string csv = "rank,cell_id,p_no_preference\n";
  for (std::size_t i = 0; i < scores.size(); ++i)
    csv += std::to_string(i + 1) + "," + scores[i].cell_id + "," + format_number(scores[i].score) + "\n";
  std::cout << csv;
  emit(c, "recommendations.csv", csv);
}

void cmd_simulate(const Options& o) {
  const PipelineConfig c = resolve(o);
  const Scene scene = generate_scene(scene_config_for(c));
  const SimOutput sim = simulate_occupants(scene, sim_config_for(c));
  emit(c, "model.json", serialize_floorplan(scene.model));
  emit(c, "fixes.csv", fixes_to_csv(sim.fixes));
  emit(c, "feedback.csv", feedback_to_csv(sim.votes));
  emit(c, "onboarding.csv", onboarding_to_csv(sim));
  emit(c, "sensors.csv", sensors_to_csv(sim));
  emit(c, "truth.csv", truth_to_csv(sim));
}

void cmd_evaluate(const Options& o) {
  const PipelineConfig c = resolve(o);
  const Scene scene = generate_scene(scene_config_for(c));
  const SimOutput sim = simulate_occupants(scene, sim_config_for(c));
  const Evaluation ev = evaluate(scene, sim, evaluation_config_for(c));
  emit(c, "report.json", evaluation_to_json(ev).dump(2) + "\n");
  emit(c, "report.txt", evaluation_to_text(ev));
  emit(c, "embeddings.tsv", export_embeddings_tsv(ev.embedding));
  std::string census = "label,count\n";
  for (const auto& [label, n] : ev.census) census += label + "," + std::to_string(n) + "\n";
  emit(c, "census.csv", census);
  for (std::size_t i = 0; i < ev.anchors.size(); ++i)
    emit(c, "similarity_" + ev.anchors[i] + ".geojson",
         similarity_map_geojson(ev.similarity_maps[i], scene.model.transform, ev.anchors[i]));
  std::cout << evaluation_to_text(ev);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cellgraph: cell graphs, embeddings and thermal-preference models for buildings"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "pipeline configuration (JSON)");
  app.add_option("--seed", o.seed, "root seed");
  app.add_option("--out", o.out, "output directory");

  auto model_opt = [&](CLI::App* s) { s->add_option("--model", o.model, "floor-plan JSON or IFC file"); };
  auto* ingest = app.add_subcommand("ingest", "parse a floor plan or IFC file into model.json");
  ingest->add_option("input", o.input, "input file")->required();
  auto* disc = app.add_subcommand("discretize", "write the cell lattice");
  model_opt(disc);
  auto* bg = app.add_subcommand("build-graph", "write the attributed graph adjacency list and census");
  model_opt(bg);
  bg->add_option("--feedback", o.feedback, "feedback vote CSV to link into the graph");
  bg->add_option("--onboarding", o.onboarding, "onboarding histogram CSV for personality clustering");
  bg->add_flag("--no-cell-adjacency", o.no_cell_adjacency, "omit cell-to-cell edges");
  auto* loc = app.add_subcommand("locate", "clean a fix stream and snap fixes to cells");
  model_opt(loc);
  loc->add_option("--fixes", o.fixes, "location fix CSV");
  auto* emb = app.add_subcommand("embed", "random walks and skip-gram over an adjacency list");
  emb->add_option("--graph", o.graph, "adjacency list");
  auto* sim = app.add_subcommand("similarity-map", "cosine similarity of every cell to an anchor cell");
  model_opt(sim);
  sim->add_option("--embeddings", o.embeddings, "embedding TSV");
  sim->add_option("--anchor", o.anchor, "anchor cell id")->required();
  sim->add_flag("--normalize", o.normalize, "min-max rescale to [0, 1]");
  auto* train = app.add_subcommand("train", "fit the forest on linked feedback");
  auto* cv = app.add_subcommand("cross-validate", "Monte-Carlo split evaluation of the forest");
  for (auto* s : {train, cv}) {
    model_opt(s);
    s->add_option("--embeddings", o.embeddings, "embedding TSV");
    s->add_option("--feedback", o.feedback, "feedback vote CSV");
  }
  auto* rec = app.add_subcommand("recommend", "rank cells by predicted comfort");
  model_opt(rec);
  rec->add_option("--embeddings", o.embeddings, "embedding TSV");
  rec->add_option("--forest", o.forest, "saved forest");
  rec->add_option("--hr", o.hr, "heart rate (bpm)");
  rec->add_option("--temp", o.temp, "near-body temperature (deg C)");
  rec->add_option("--top", o.top, "number of cells");
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic scene and occupant streams");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "run the synthetic comparison against the baselines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) cmd_ingest(o);
    else if (*disc) cmd_discretize(o);
    else if (*bg) cmd_build_graph(o);
    else if (*loc) cmd_locate(o);
    else if (*emb) cmd_embed(o);
    else if (*sim) cmd_similarity(o);
    else if (*train) cmd_train(o);
    else if (*cv) cmd_cross_validate(o);
    else if (*rec) cmd_recommend(o);
    else if (*simulate) cmd_simulate(o);
    else if (*evaluate_cmd) cmd_evaluate(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
