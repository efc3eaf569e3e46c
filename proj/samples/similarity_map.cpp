// Builds the two-fan lab scene, embeds its cell graph and prints a coarse
// text heat map of similarity to the cell under the first fan.

#include <cstdio>
#include <iostream>

#include "cellgraph.hpp"

using namespace cellgraph;

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::stoull(argv[1]) : 7;
  SceneConfig sc = two_fan_scene_config();
  sc.seed = seed;
  const Scene scene = generate_scene(sc);
  const AttributedGraph graph = build_graph(scene.model, scene.cells);
  const WalkGraph wg = WalkGraph::from_graph(graph);

  WalkParams wp;
  wp.seed = derive_seed(seed, "walks");
  SkipGramParams sp;
  sp.seed = derive_seed(seed, "skipgram");
  const EmbeddingMatrix emb = train_skipgram(wg, random_walks(wg, wp), sp);

  const CellLocator locator(scene.cells);
  const std::string anchor = locator.nearest(scene.cells.front().level_id, sc.fan_positions.front()).id;
  const auto map = normalize_map(similarity_map(emb, anchor, scene.cells));

  long cols = 0, rows = 0;
  for (const Cell& c : scene.cells) {
    cols = std::max(cols, c.col + 1);
    rows = std::max(rows, c.row + 1);
  }
  std::vector<std::string> grid(static_cast<std::size_t>(rows), std::string(static_cast<std::size_t>(cols), ' '));
  const char* shades = " .:-=+*#%@";
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Cell& c = scene.cells[i];
    const auto level = static_cast<std::size_t>(map[i].similarity * 9.0 + 0.5);
    grid[static_cast<std::size_t>(c.row)][static_cast<std::size_t>(c.col)] = c.id == anchor ? 'A' : shades[level];
  }
  std::cout << "anchor " << anchor << " (A), darker = more similar\n";
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) std::cout << *it << "\n";
  return 0;
}
