#pragma once

// CART trees with Gini impurity and a bagged, feature-subsampled forest.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cellgraph/errors.hpp"
#include "cellgraph/rng.hpp"

namespace cellgraph {

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t max_depth = 220;
  std::size_t max_features = 4;
  std::size_t min_samples_split = 2;
  bool bootstrap = true;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  int label = 0;
  std::uint32_t depth = 0;
  std::uint8_t candidates = 0;  // features examined at this node
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  std::vector<double> importances;  // normalized impurity decrease per feature

  int predict(std::span<const double> x) const {
    std::uint32_t i = 0;
    while (nodes[i].feature >= 0) i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].label;
  }

  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes) d = std::max<std::size_t>(d, n.depth);
    return d;
  }
};

namespace detail {

inline int majority(std::span<const double> counts) {
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

inline double gini(std::span<const double> counts, double total) {
  if (total <= 0.0) return 0.0;
  double s = 0.0;
  for (double c : counts) s += c * c;
  return 1.0 - s / (total * total);
}

// Per-feature dense ranks of the training matrix, computed once per forest.
// Split scans then work on small integers instead of re-sorting doubles.
struct FeatureRanks {
  std::vector<std::vector<std::uint32_t>> rank;  // [feature][row]
  std::vector<std::vector<double>> values;       // [feature][rank], ascending

  explicit FeatureRanks(const Matrix& X) : rank(X.cols), values(X.cols) {
    std::vector<std::uint32_t> order(X.rows);
    for (std::size_t f = 0; f < X.cols; ++f) {
      std::iota(order.begin(), order.end(), 0u);
      std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return X.at(a, f) < X.at(b, f); });
      rank[f].resize(X.rows);
      for (std::uint32_t r : order) {
        const double v = X.at(r, f);
        if (values[f].empty() || values[f].back() != v) values[f].push_back(v);
        rank[f][r] = static_cast<std::uint32_t>(values[f].size() - 1);
      }
    }
  }
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, const std::vector<int>& y, std::size_t n_classes, const ForestParams& p,
              const FeatureRanks& ranks)
      : X_(X), y_(y), k_(n_classes), p_(p), ranks_(ranks) {}

  DecisionTree build(std::vector<std::uint32_t> samples, Rng& rng) {
    DecisionTree t;
    t.importances.assign(X_.cols, 0.0);
    samples_ = std::move(samples);
    struct Task {
      std::size_t begin, end;
      std::uint32_t node;
      std::uint32_t depth;
    };
    t.nodes.push_back({});
    std::vector<Task> stack{{0, samples_.size(), 0, 0}};
    std::vector<double> counts(k_);
    std::vector<std::size_t> features(X_.cols);
    const double root_n = static_cast<double>(samples_.size());

    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      std::fill(counts.begin(), counts.end(), 0.0);
      for (std::size_t i = task.begin; i < task.end; ++i) counts[static_cast<std::size_t>(y_[samples_[i]])] += 1.0;
      const double n = static_cast<double>(task.end - task.begin);
      TreeNode& node = t.nodes[task.node];
      node.depth = task.depth;
      node.label = majority(counts);
      const double impurity = gini(counts, n);
      if (impurity <= 0.0 || task.depth >= p_.max_depth || task.end - task.begin < p_.min_samples_split) continue;

      // Draw max_features distinct candidate features.
      std::iota(features.begin(), features.end(), 0);
      const std::size_t m = std::min(p_.max_features, X_.cols);
      for (std::size_t i = 0; i < m; ++i) std::swap(features[i], features[i + uniform_index(rng, X_.cols - i)]);
      node.candidates = static_cast<std::uint8_t>(m);

      Split best;
      for (std::size_t f = 0; f < m; ++f) evaluate_feature(features[f], task.begin, task.end, counts, best);
      if (best.feature < 0) continue;

      const auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(task.begin),
                                      samples_.begin() + static_cast<std::ptrdiff_t>(task.end), [&](std::uint32_t s) {
                                        return X_.at(s, static_cast<std::size_t>(best.feature)) <= best.threshold;
                                      });
      const std::size_t split = static_cast<std::size_t>(mid - samples_.begin());
      t.importances[static_cast<std::size_t>(best.feature)] += (n / root_n) * (impurity - best.child_impurity);

      const auto left = static_cast<std::uint32_t>(t.nodes.size());
      t.nodes.push_back({});
      t.nodes.push_back({});
      TreeNode& parent = t.nodes[task.node];
      parent.feature = best.feature;
      parent.threshold = best.threshold;
      parent.left = left;
      parent.right = left + 1;
      stack.push_back({split, task.end, left + 1, task.depth + 1});
      stack.push_back({task.begin, split, left, task.depth + 1});
    }
    const double total = std::accumulate(t.importances.begin(), t.importances.end(), 0.0);
    if (total > 0.0)
      for (double& v : t.importances) v /= total;
    return t;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double child_impurity = 0.0;  // weighted
    double score = -1.0;          // negated weighted impurity, higher is better
  };

  // Scans the boundaries between consecutive distinct values in ascending
  // order. Large nodes bucket class counts by rank; small nodes sort keys.
  void evaluate_feature(std::size_t f, std::size_t begin, std::size_t end, const std::vector<double>& total,
                        Split& best) {
    const auto& rank = ranks_.rank[f];
    const auto& values = ranks_.values[f];
    const std::size_t size = end - begin;
    const double n = static_cast<double>(size);
    left_.assign(k_, 0.0);
    right_ = total;
    std::uint32_t prev = 0;
    bool have_prev = false;
    auto boundary = [&](std::uint32_t r) {
      if (have_prev) {
        double nl = 0.0;
        for (double c : left_) nl += c;
        const double nr = n - nl;
        const double weighted = (nl * gini(left_, nl) + nr * gini(right_, nr)) / n;
        if (-weighted > best.score) {
          const double a = values[prev], b = values[r];
          double thr = a + (b - a) / 2.0;
          if (!(thr < b)) thr = a;
          best = {static_cast<int>(f), thr, weighted, -weighted};
        }
      }
      prev = r;
      have_prev = true;
    };

    if (size * 4 >= values.size()) {
      hist_.assign(values.size() * k_, 0.0);
      std::uint32_t lo = UINT32_MAX, hi = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const std::uint32_t r = rank[samples_[i]];
        hist_[r * k_ + static_cast<std::size_t>(y_[samples_[i]])] += 1.0;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      if (lo == hi) return;
      for (std::uint32_t r = lo; r <= hi; ++r) {
        const double* h = &hist_[r * k_];
        bool any = false;
        for (std::size_t c = 0; c < k_; ++c) any = any || h[c] > 0.0;
        if (!any) continue;
        boundary(r);
        if (r == hi) break;
        for (std::size_t c = 0; c < k_; ++c) {
          left_[c] += h[c];
          right_[c] -= h[c];
        }
      }
    } else {
      keys_.clear();
      for (std::size_t i = begin; i < end; ++i)
        keys_.push_back((static_cast<std::uint64_t>(rank[samples_[i]]) << 8) |
                        static_cast<std::uint64_t>(y_[samples_[i]]));
      std::sort(keys_.begin(), keys_.end());
      if ((keys_.front() >> 8) == (keys_.back() >> 8)) return;
      for (std::size_t i = 0; i < keys_.size();) {
        const auto r = static_cast<std::uint32_t>(keys_[i] >> 8);
        boundary(r);
        std::size_t j = i;
        for (; j < keys_.size() && (keys_[j] >> 8) == r; ++j) {
          left_[keys_[j] & 0xff] += 1.0;
          right_[keys_[j] & 0xff] -= 1.0;
        }
        i = j;
      }
    }
  }

  const Matrix& X_;
  const std::vector<int>& y_;
  std::size_t k_;
  const ForestParams& p_;
  const FeatureRanks& ranks_;
  std::vector<std::uint32_t> samples_;
  std::vector<double> hist_;
  std::vector<std::uint64_t> keys_;
  std::vector<double> left_, right_;
};

}  // namespace detail

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  ForestParams params;
  std::vector<std::string> warnings;

  // Hard vote; ties go to the lowest class index.
  int predict(std::span<const double> x) const { return detail::majority(votes(x)); }

  std::vector<double> predict_proba(std::span<const double> x) const {
    auto v = votes(x);
    const double n = static_cast<double>(trees.size());
    for (double& p : v) p /= n;
    return v;
  }

  std::vector<double> votes(std::span<const double> x) const {
    if (x.size() != n_features)
      throw DimensionMismatch("expected " + std::to_string(n_features) + " features, got " + std::to_string(x.size()));
    for (double v : x)
      if (!std::isfinite(v)) throw DimensionMismatch("feature vector has a non-finite entry");
    std::vector<double> counts(n_classes, 0.0);
    for (const auto& t : trees) counts[static_cast<std::size_t>(t.predict(x))] += 1.0;
    return counts;
  }

  std::vector<double> feature_importances() const {
    std::vector<double> out(n_features, 0.0);
    for (const auto& t : trees)
      for (std::size_t f = 0; f < n_features; ++f) out[f] += t.importances[f];
    const double total = std::accumulate(out.begin(), out.end(), 0.0);
    if (total > 0.0)
      for (double& v : out) v /= total;
    return out;
  }
};

// Labels must lie in [0, n_classes). A single-class training set yields a
// constant predictor and a warning.
inline ForestModel train_forest(const Matrix& X, const std::vector<int>& y, std::size_t n_classes,
                                const ForestParams& p = {}) {
  if (X.rows != y.size()) throw DimensionMismatch("feature rows and labels differ in length");
  if (X.rows == 0) throw ConfigError("cannot train on an empty dataset");
  if (p.n_trees == 0) throw ConfigError("forest needs at least one tree");
  if (n_classes == 0 || n_classes > 256) throw ConfigError("forest supports 1 to 256 classes");
  for (int label : y)
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) throw ConfigError("label out of range");

  ForestModel m;
  m.n_classes = n_classes;
  m.n_features = X.cols;
  m.params = p;
  m.trees.resize(p.n_trees);
  {
    std::vector<bool> seen(n_classes, false);
    for (int label : y) seen[static_cast<std::size_t>(label)] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2)
      m.warnings.push_back("DegenerateLabels: single class in training data, forest is a constant predictor");
  }

  const detail::FeatureRanks ranks(X);
  auto grow = [&](std::size_t begin, std::size_t end) {
    detail::TreeBuilder builder(X, y, n_classes, p, ranks);
    for (std::size_t t = begin; t < end; ++t) {
      Rng rng(derive_seed(p.seed, "tree", t));
      std::vector<std::uint32_t> samples(X.rows);
      if (p.bootstrap) {
        for (auto& s : samples) s = static_cast<std::uint32_t>(uniform_index(rng, X.rows));
      } else {
        std::iota(samples.begin(), samples.end(), 0u);
      }
      m.trees[t] = builder.build(std::move(samples), rng);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(p.threads, static_cast<unsigned>(p.n_trees)));
  if (threads == 1) {
    grow(0, p.n_trees);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (p.n_trees + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = std::min(p.n_trees, t * chunk);
      pool.emplace_back(grow, b, std::min(p.n_trees, b + chunk));
    }
  }
  return m;
}

// Plain-text model file:
//   forest <n_classes> <n_features> <n_trees>
//   tree <n_nodes>
//   <feature> <threshold> <left> <right> <label> <depth> <candidates>   (per node)
//   importances <v1> ... <vF>                                           (per tree)
inline std::string save_forest(const ForestModel& m) {
  std::string out = "forest " + std::to_string(m.n_classes) + " " + std::to_string(m.n_features) + " " +
                    std::to_string(m.trees.size()) + "\n";
  auto num = [](double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
  };
  for (const auto& t : m.trees) {
    out += "tree " + std::to_string(t.nodes.size()) + "\n";
    for (const auto& n : t.nodes) {
      out += std::to_string(n.feature) + " " + num(n.threshold) + " " + std::to_string(n.left) + " " +
             std::to_string(n.right) + " " + std::to_string(n.label) + " " + std::to_string(n.depth) + " " +
             std::to_string(n.candidates) + "\n";
    }
    out += "importances";
    for (double v : t.importances) out += " " + num(v);
    out += "\n";
  }
  return out;
}

inline ForestModel load_forest(const std::string& text) {
  std::istringstream in(text);
  auto fail = [](const std::string& what) { throw SchemaError("forest file: " + what); };
  std::string tag;
  std::size_t n_trees = 0;
  ForestModel m;
  if (!(in >> tag >> m.n_classes >> m.n_features >> n_trees) || tag != "forest") fail("bad header");
  m.params.n_trees = n_trees;
  m.trees.resize(n_trees);
  for (auto& t : m.trees) {
    std::size_t n_nodes = 0;
    if (!(in >> tag >> n_nodes) || tag != "tree") fail("expected tree record");
    t.nodes.resize(n_nodes);
    for (auto& n : t.nodes) {
      unsigned candidates = 0;
      std::string thr;
      if (!(in >> n.feature >> thr >> n.left >> n.right >> n.label >> n.depth >> candidates)) fail("bad node");
      auto [p, ec] = std::from_chars(thr.data(), thr.data() + thr.size(), n.threshold);
      if (ec != std::errc()) fail("bad threshold");
      n.candidates = static_cast<std::uint8_t>(candidates);
      if (n.feature >= static_cast<int>(m.n_features) || (n.feature >= 0 && (n.left >= n_nodes || n.right >= n_nodes)) ||
          n.label < 0 || static_cast<std::size_t>(n.label) >= m.n_classes)
        fail("node out of range");
    }
    if (!(in >> tag) || tag != "importances") fail("expected importances");
    t.importances.resize(m.n_features);
    for (double& v : t.importances) {
      std::string s;
      in >> s;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc()) fail("bad importance");
    }
  }
  return m;
}

}  // namespace cellgraph
