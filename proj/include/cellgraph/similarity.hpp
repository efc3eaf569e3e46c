#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellgraph/embedding.hpp"
#include "cellgraph/errors.hpp"
#include "cellgraph/graph.hpp"
#include "cellgraph/kmeans.hpp"

namespace cellgraph {

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("cosine similarity of vectors with different lengths");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw ZeroVector("cosine similarity of a zero vector");
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

struct SimilarityEntry {
  std::string cell_id;
  Point2 center;
  double similarity = 0.0;
};

// Similarity of every cell to `anchor`, in the order of `cells`.
inline std::vector<SimilarityEntry> similarity_map(const EmbeddingMatrix& emb, const std::string& anchor,
                                                   const std::vector<Cell>& cells) {
  const bool known = std::any_of(cells.begin(), cells.end(), [&](const Cell& c) { return c.id == anchor; });
  if (!known || !emb.contains(anchor)) throw UnknownCell("anchor '" + anchor + "' is not a known cell");
  const auto a = emb.vector(anchor);
  std::vector<SimilarityEntry> out;
  out.reserve(cells.size());
  for (const Cell& c : cells) out.push_back({c.id, c.center, cosine_similarity(a, emb.vector(c.id))});
  return out;
}

// Min-max rescale to [0, 1]; a constant map becomes all ones.
inline std::vector<SimilarityEntry> normalize_map(std::vector<SimilarityEntry> map) {
  if (map.empty()) return map;
  auto [lo, hi] = std::minmax_element(map.begin(), map.end(), [](const auto& a, const auto& b) {
    return a.similarity < b.similarity;
  });
  const double min = lo->similarity;
  const double span = hi->similarity - min;
  for (auto& e : map) e.similarity = span > 0.0 ? (e.similarity - min) / span : 1.0;
  return map;
}

inline std::string similarity_map_csv(const std::vector<SimilarityEntry>& map) {
  std::string out = "cell_id,x,y,similarity\n";
  for (const auto& e : map)
    out += e.cell_id + "," + format_number(e.center.x) + "," + format_number(e.center.y) + "," +
           format_number(e.similarity) + "\n";
  return out;
}

// Point features in WGS84 (lon, lat) with local x/y kept as properties.
inline std::string similarity_map_geojson(const std::vector<SimilarityEntry>& map, const CoordinateTransform& t,
                                          const std::string& anchor = {}) {
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (const auto& e : map) {
    const auto g = t.to_global(e.center);
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "Point"}, {"coordinates", {g.lon, g.lat}}};
    f["properties"] = {{"cell_id", e.cell_id}, {"x", e.center.x}, {"y", e.center.y}, {"similarity", e.similarity}};
    features.push_back(std::move(f));
  }
  nlohmann::ordered_json doc;
  doc["type"] = "FeatureCollection";
  if (!anchor.empty()) doc["anchor"] = anchor;
  doc["features"] = std::move(features);
  return doc.dump(2) + "\n";
}

// k-means over the embedding vectors of `cell_ids`.
inline std::map<std::string, std::size_t> cluster_cells(const EmbeddingMatrix& emb,
                                                        const std::vector<std::string>& cell_ids, std::size_t k,
                                                        std::uint64_t seed) {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (k > cell_ids.size())
    throw KTooLarge("k = " + std::to_string(k) + " exceeds " + std::to_string(cell_ids.size()) + " cells");
  std::vector<std::vector<double>> pts;
  pts.reserve(cell_ids.size());
  for (const auto& id : cell_ids) {
    const auto v = emb.vector(id);
    pts.emplace_back(v.begin(), v.end());
  }
  KMeansParams p;
  p.k = k;
  p.seed = seed;
  const auto r = kmeans(pts, p);
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < cell_ids.size(); ++i) out[cell_ids[i]] = r.labels[i];
  return out;
}

}  // namespace cellgraph
