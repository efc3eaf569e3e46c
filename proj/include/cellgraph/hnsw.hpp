#pragma once

// Hierarchical navigable small-world graph over 2D points (Malkov &
// Yashunin). Layer-0 lists hold up to 2*M links, upper layers up to M;
// neighbours are chosen with the distance-diversity heuristic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "cellgraph/errors.hpp"
#include "cellgraph/geometry.hpp"
#include "cellgraph/rng.hpp"

namespace cellgraph {

struct HnswParams {
  std::size_t M = 16;
  std::size_t ef_construction = 200;
  std::size_t ef_search = 64;
  std::uint64_t seed = 0x5eed;
};

struct KnnHit {
  std::size_t index = 0;  // position in the build input
  std::string id;
  double distance = 0.0;
};

class KnnIndex {
 public:
  KnnIndex() = default;

  KnnIndex(std::vector<Point2> points, std::vector<std::string> ids, HnswParams params = {})
      : points_(std::move(points)), ids_(std::move(ids)), params_(params) {
    if (ids_.size() != points_.size()) throw DimensionMismatch("ids and points differ in length");
    if (params_.M < 2) throw ConfigError("HNSW M must be at least 2");
    level_mult_ = 1.0 / std::log(static_cast<double>(params_.M));
    Rng rng(derive_seed(params_.seed, "hnsw-levels"));
    links_.resize(points_.size());
    for (std::uint32_t i = 0; i < points_.size(); ++i) insert(i, rng);
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const HnswParams& params() const { return params_; }
  const std::vector<Point2>& points() const { return points_; }
  const std::vector<std::string>& ids() const { return ids_; }
  int top_level() const { return top_level_; }
  std::size_t level_of(std::size_t i) const { return links_[i].size() - 1; }
  const std::vector<std::uint32_t>& neighbours(std::size_t i, std::size_t layer) const {
    return links_[i][layer];
  }

  // Up to k approximate nearest points ordered by (distance, id).
  std::vector<KnnHit> query(Point2 q, std::size_t k) const { return query(q, k, params_.ef_search); }

  std::vector<KnnHit> query(Point2 q, std::size_t k, std::size_t ef) const {
    if (points_.empty()) throw EmptyIndex("query on an empty index");
    if (k == 0) throw ConfigError("k must be at least 1");
    std::uint32_t ep = entry_;
    for (int layer = top_level_; layer > 0; --layer) ep = greedy_closest(q, ep, layer);
    auto found = search_layer(q, {ep}, std::max(ef, k), 0);
    std::vector<KnnHit> hits;
    hits.reserve(found.size());
    for (const auto& [d2, i] : found) hits.push_back({i, ids_[i], std::sqrt(d2)});
    std::sort(hits.begin(), hits.end(), [](const KnnHit& a, const KnnHit& b) {
      return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
  }

 private:
  using Scored = std::pair<double, std::uint32_t>;  // (squared distance, node)

  double d2(Point2 q, std::uint32_t i) const { return squared_distance(q, points_[i]); }

  std::size_t max_links(std::size_t layer) const { return layer == 0 ? 2 * params_.M : params_.M; }

  std::uint32_t greedy_closest(Point2 q, std::uint32_t ep, std::size_t layer) const {
    double best = d2(q, ep);
    for (bool moved = true; moved;) {
      moved = false;
      for (std::uint32_t n : links_[ep][layer]) {
        const double d = d2(q, n);
        if (d < best) {
          best = d;
          ep = n;
          moved = true;
        }
      }
    }
    return ep;
  }

  // Returns up to `ef` closest nodes found, sorted ascending.
  std::vector<Scored> search_layer(Point2 q, const std::vector<std::uint32_t>& entries, std::size_t ef,
                                   std::size_t layer) const {
    thread_local std::vector<std::uint32_t> marks;
    thread_local std::uint32_t stamp = 0;
    if (marks.size() < points_.size()) marks.resize(points_.size(), 0);
    if (++stamp == 0) {
      std::fill(marks.begin(), marks.end(), 0);
      stamp = 1;
    }

    std::priority_queue<Scored, std::vector<Scored>, std::greater<>> candidates;
    std::priority_queue<Scored> best;
    for (std::uint32_t e : entries) {
      if (marks[e] == stamp) continue;
      marks[e] = stamp;
      const double d = d2(q, e);
      candidates.emplace(d, e);
      best.emplace(d, e);
    }
    while (!candidates.empty()) {
      const auto [dc, c] = candidates.top();
      if (best.size() >= ef && dc > best.top().first) break;
      candidates.pop();
      for (std::uint32_t n : links_[c][layer]) {
        if (marks[n] == stamp) continue;
        marks[n] = stamp;
        const double d = d2(q, n);
        if (best.size() < ef || d < best.top().first) {
          candidates.emplace(d, n);
          best.emplace(d, n);
          if (best.size() > ef) best.pop();
        }
      }
    }
    std::vector<Scored> out;
    out.reserve(best.size());
    while (!best.empty()) {
      out.push_back(best.top());
      best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  // Diversity heuristic: keep a candidate only if it is closer to the base
  // than to every neighbour already kept.
  std::vector<std::uint32_t> select_neighbours(const std::vector<Scored>& sorted, std::size_t m) const {
    std::vector<std::uint32_t> kept;
    for (const auto& [d, c] : sorted) {
      if (kept.size() >= m) break;
      bool good = true;
      for (std::uint32_t r : kept) {
        if (squared_distance(points_[c], points_[r]) < d) {
          good = false;
          break;
        }
      }
      if (good) kept.push_back(c);
    }
    return kept;
  }

  void insert(std::uint32_t i, Rng& rng) {
    const double u = 1.0 - uniform01(rng);  // (0, 1]
    const int level = static_cast<int>(std::floor(-std::log(u) * level_mult_));
    links_[i].resize(static_cast<std::size_t>(level) + 1);
    if (i == 0) {
      entry_ = 0;
      top_level_ = level;
      return;
    }
    const Point2 q = points_[i];
    std::uint32_t ep = entry_;
    for (int layer = top_level_; layer > level; --layer) ep = greedy_closest(q, ep, layer);
    std::vector<std::uint32_t> entries{ep};
    for (int layer = std::min(level, top_level_); layer >= 0; --layer) {
      const auto lay = static_cast<std::size_t>(layer);
      auto found = search_layer(q, entries, params_.ef_construction, lay);
      auto chosen = select_neighbours(found, params_.M);
      links_[i][lay] = chosen;
      for (std::uint32_t n : chosen) {
        auto& back = links_[n][lay];
        back.push_back(i);
        if (back.size() > max_links(lay)) {
          std::vector<Scored> scored;
          scored.reserve(back.size());
          for (std::uint32_t b : back) scored.emplace_back(squared_distance(points_[n], points_[b]), b);
          std::sort(scored.begin(), scored.end());
          back = select_neighbours(scored, max_links(lay));
        }
      }
      entries.clear();
      for (const auto& s : found) entries.push_back(s.second);
    }
    if (level > top_level_) {
      top_level_ = level;
      entry_ = i;
    }
  }

  std::vector<Point2> points_;
  std::vector<std::string> ids_;
  HnswParams params_;
  double level_mult_ = 1.0;
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;
  std::uint32_t entry_ = 0;
  int top_level_ = 0;
};

}  // namespace cellgraph
