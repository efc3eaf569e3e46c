#pragma once

// Random walks over the attributed graph and skip-gram with negative
// sampling on the resulting node sequences.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "cellgraph/csv.hpp"
#include "cellgraph/errors.hpp"
#include "cellgraph/graph.hpp"
#include "cellgraph/rng.hpp"

namespace cellgraph {

// Undirected, unlabeled view used for walks. Nodes are ordered by id and
// neighbour lists by neighbour id, so in-memory graphs and adjacency-list
// files produce identical walks.
class WalkGraph {
 public:
  static WalkGraph from_graph(const AttributedGraph& g) {
    std::vector<std::string> ids;
    ids.reserve(g.node_count());
    for (const Node& n : g.nodes()) ids.push_back(n.id);
    std::vector<std::pair<std::string, std::string>> edges;
    edges.reserve(g.edge_count());
    for (const Edge& e : g.edges()) edges.emplace_back(g.node(e.src).id, g.node(e.dst).id);
    return WalkGraph(std::move(ids), edges);
  }

  static WalkGraph from_adjacency(const std::vector<AdjacencyRecord>& records) {
    std::vector<std::string> ids;
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& r : records) {
      ids.push_back(r.src);
      ids.push_back(r.dst);
      edges.emplace_back(r.src, r.dst);
    }
    return WalkGraph(std::move(ids), edges);
  }

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(std::uint32_t i) const { return ids_[i]; }
  std::span<const std::uint32_t> neighbours(std::uint32_t i) const { return adjacency_[i]; }

  std::optional<std::uint32_t> find(const std::string& id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) return std::nullopt;
    return static_cast<std::uint32_t>(it - ids_.begin());
  }

  bool has_edge(std::uint32_t a, std::uint32_t b) const {
    const auto& n = adjacency_[a];
    return std::binary_search(n.begin(), n.end(), b);
  }

 private:
  WalkGraph(std::vector<std::string> ids, const std::vector<std::pair<std::string, std::string>>& edges) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    ids_ = std::move(ids);
    adjacency_.resize(ids_.size());
    for (const auto& [a, b] : edges) {
      const auto ia = *find(a);
      const auto ib = *find(b);
      if (ia == ib) continue;
      adjacency_[ia].push_back(ib);
      adjacency_[ib].push_back(ia);
    }
    for (auto& n : adjacency_) {
      std::sort(n.begin(), n.end());
      n.erase(std::unique(n.begin(), n.end()), n.end());
    }
  }

  std::vector<std::string> ids_;
  std::vector<std::vector<std::uint32_t>> adjacency_;
};

struct WalkParams {
  std::size_t walks_per_node = 10;
  std::size_t walk_length = 40;
  std::uint64_t seed = 1;
  // Second-order bias (return / in-out). 1.0 / 1.0 gives uniform walks.
  double return_p = 1.0;
  double inout_q = 1.0;
  unsigned threads = 1;
};

struct WalkCorpus {
  std::vector<std::vector<std::uint32_t>> walks;  // node indices into the WalkGraph
  WalkParams params;

  std::size_t token_count() const {
    std::size_t n = 0;
    for (const auto& w : walks) n += w.size();
    return n;
  }
};

namespace detail {

inline std::vector<std::uint32_t> one_walk(const WalkGraph& g, std::uint32_t start, const WalkParams& p, Rng& rng) {
  std::vector<std::uint32_t> walk;
  walk.reserve(p.walk_length);
  walk.push_back(start);
  const bool biased = p.return_p != 1.0 || p.inout_q != 1.0;
  std::vector<double> weights;
  while (walk.size() < p.walk_length) {
    const auto cur = walk.back();
    const auto nbrs = g.neighbours(cur);
    if (nbrs.empty()) break;
    if (!biased || walk.size() < 2) {
      walk.push_back(nbrs[uniform_index(rng, nbrs.size())]);
      continue;
    }
    const auto prev = walk[walk.size() - 2];
    weights.clear();
    for (auto n : nbrs) {
      if (n == prev) weights.push_back(1.0 / p.return_p);
      else if (g.has_edge(prev, n)) weights.push_back(1.0);
      else weights.push_back(1.0 / p.inout_q);
    }
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    walk.push_back(nbrs[pick(rng)]);
  }
  return walk;
}

}  // namespace detail

// `walks_per_node` rounds, each starting one walk at every node in id order.
// Each (round, node) walk draws from its own seeded stream, so the corpus
// does not depend on the thread count.
inline WalkCorpus random_walks(const WalkGraph& g, const WalkParams& p) {
  if (g.size() == 0) throw ConfigError("random walks need a non-empty graph");
  if (p.walk_length == 0) throw ConfigError("walk_length must be at least 1");
  WalkCorpus corpus;
  corpus.params = p;
  const std::size_t n = g.size();
  corpus.walks.resize(p.walks_per_node * n);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t w = begin; w < end; ++w) {
      Rng rng(derive_seed(p.seed, "walk", w));
      corpus.walks[w] = detail::one_walk(g, static_cast<std::uint32_t>(w % n), p, rng);
    }
  };
  const unsigned threads = std::max(1u, p.threads);
  if (threads == 1) {
    run(0, corpus.walks.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (corpus.walks.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = std::min(corpus.walks.size(), t * chunk);
      const std::size_t e = std::min(corpus.walks.size(), b + chunk);
      pool.emplace_back(run, b, e);
    }
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Skip-gram

inline constexpr std::size_t kEmbeddingDim = 20;

struct SkipGramParams {
  std::size_t dim = kEmbeddingDim;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr_start = 0.025;
  double lr_end = 0.0001;
  std::uint64_t seed = 1;
  // 1 = deterministic. More workers update shared weights without locking.
  unsigned workers = 1;
};

class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim)
      : ids_(std::move(ids)), dim_(dim), data_(ids_.size() * dim, 0.0) {
    for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
  }

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(const std::string& id) const { return index_.contains(id); }

  std::span<const double> vector(const std::string& id) const {
    auto i = find(id);
    if (!i) throw MissingEmbedding("no embedding for node '" + id + "'");
    return row(*i);
  }

  SkipGramParams params;

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.ids_ == b.ids_ && a.dim_ == b.dim_ && a.data_ == b.data_;
  }

 private:
  std::vector<std::string> ids_;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Negative-sampling loss for one (center, context) pair:
//   -log s(u.v+) - sum_k log s(-u.v_k)
inline double pair_loss(std::span<const double> center, std::span<const double> context,
                        const std::vector<std::span<const double>>& negatives) {
  auto dotp = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  double loss = -std::log(sigmoid(dotp(center, context)));
  for (const auto& n : negatives) loss -= std::log(sigmoid(-dotp(center, n)));
  return loss;
}

struct PairGradient {
  std::vector<double> center;
  std::vector<double> context;
  std::vector<std::vector<double>> negatives;
};

inline PairGradient pair_gradient(std::span<const double> center, std::span<const double> context,
                                  const std::vector<std::span<const double>>& negatives) {
  const std::size_t d = center.size();
  PairGradient g{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), {}};
  auto dotp = [](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  const double cp = sigmoid(dotp(center, context)) - 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    g.center[i] += cp * context[i];
    g.context[i] = cp * center[i];
  }
  for (const auto& n : negatives) {
    const double cn = sigmoid(dotp(center, n));
    std::vector<double> gn(d);
    for (std::size_t i = 0; i < d; ++i) {
      g.center[i] += cn * n[i];
      gn[i] = cn * center[i];
    }
    g.negatives.push_back(std::move(gn));
  }
  return g;
}

namespace detail {

template <bool Shared>
struct Cell64 {
  static double load(double& x) {
    if constexpr (Shared) return std::atomic_ref<double>(x).load(std::memory_order_relaxed);
    else return x;
  }
  static void store(double& x, double v) {
    if constexpr (Shared) std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
    else x = v;
  }
};

// One SGD step on pair_loss for (center, target list) where target[0] is
// the positive context. Output vectors are updated against the old center
// vector, then the center moves by the accumulated gradient.
template <bool Shared>
inline void sgd_pair_step(double* in, double* const* outs, std::size_t n_out, std::size_t dim, double lr,
                          std::vector<double>& grad_in) {
  using C = Cell64<Shared>;
  std::fill(grad_in.begin(), grad_in.end(), 0.0);
  for (std::size_t t = 0; t < n_out; ++t) {
    double* out = outs[t];
    double f = 0.0;
    for (std::size_t i = 0; i < dim; ++i) f += C::load(in[i]) * C::load(out[i]);
    const double coeff = sigmoid(f) - (t == 0 ? 1.0 : 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      const double o = C::load(out[i]);
      grad_in[i] += coeff * o;
      C::store(out[i], o - lr * coeff * C::load(in[i]));
    }
  }
  for (std::size_t i = 0; i < dim; ++i) C::store(in[i], C::load(in[i]) - lr * grad_in[i]);
}

}  // namespace detail

// Input vectors start uniform in [-0.5/dim, 0.5/dim]; output vectors start
// at zero. Returns the input vectors, keyed by WalkGraph id.
inline EmbeddingMatrix train_skipgram(const WalkGraph& g, const WalkCorpus& corpus, const SkipGramParams& p = {}) {
  const std::size_t tokens = corpus.token_count();
  if (tokens == 0) throw EmptyCorpus("walk corpus has no tokens");
  if (p.dim == 0) throw ConfigError("embedding dim must be positive");
  const std::size_t n = g.size();
  const std::size_t dim = p.dim;

  EmbeddingMatrix emb(g.ids(), dim);
  emb.params = p;
  {
    Rng rng(derive_seed(p.seed, "skipgram-init"));
    std::uniform_real_distribution<double> u(-0.5 / static_cast<double>(dim), 0.5 / static_cast<double>(dim));
    for (double& x : emb.data()) x = u(rng);
  }
  std::vector<double> out_vecs(n * dim, 0.0);

  std::vector<double> counts(n, 0.0);
  for (const auto& w : corpus.walks)
    for (auto t : w) counts[t] += 1.0;
  for (double& c : counts) c = std::pow(c, 0.75);
  // Noise draws come from a table where node i fills a share of slots
  // proportional to count^0.75.
  std::vector<std::uint32_t> noise_table;
  {
    const double total_weight = std::accumulate(counts.begin(), counts.end(), 0.0);
    const std::size_t slots = std::max<std::size_t>(1 << 20, 64 * n);
    noise_table.reserve(slots);
    double cum = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      cum += counts[i];
      const auto upto = static_cast<std::size_t>(std::llround(cum / total_weight * static_cast<double>(slots)));
      while (noise_table.size() < upto) noise_table.push_back(i);
    }
  }

  const double total = static_cast<double>(tokens) * static_cast<double>(p.epochs);
  std::atomic<std::size_t> processed{0};

  auto train_range = [&]<bool Shared>(std::size_t begin, std::size_t end, std::uint64_t stream) {
    Rng rng(derive_seed(p.seed, "skipgram-train", stream));
    auto noise = [&](Rng& r) { return noise_table[uniform_index(r, noise_table.size())]; };
    std::vector<double> grad(dim);
    std::vector<double*> targets;
    targets.reserve(p.negatives + 1);
    std::size_t local = 0;
    for (std::size_t e = 0; e < p.epochs; ++e) {
      for (std::size_t wi = begin; wi < end; ++wi) {
        const auto& walk = corpus.walks[wi];
        for (std::size_t i = 0; i < walk.size(); ++i) {
          const std::size_t done = Shared ? processed.fetch_add(1, std::memory_order_relaxed) : local;
          ++local;
          const double lr = std::max(p.lr_end, p.lr_start - (p.lr_start - p.lr_end) * static_cast<double>(done) / total);
          const std::size_t shrink = p.window > 0 ? uniform_index(rng, p.window) : 0;
          const std::size_t reach = p.window - shrink;
          const std::size_t lo = i >= reach ? i - reach : 0;
          const std::size_t hi = std::min(walk.size() - 1, i + reach);
          double* in = emb.data().data() + walk[i] * dim;
          for (std::size_t j = lo; j <= hi; ++j) {
            if (j == i) continue;
            const auto ctx = walk[j];
            targets.clear();
            targets.push_back(out_vecs.data() + ctx * dim);
            for (std::size_t k = 0; k < p.negatives; ++k) {
              const auto neg = noise(rng);
              if (neg == ctx) continue;
              targets.push_back(out_vecs.data() + neg * dim);
            }
            detail::sgd_pair_step<Shared>(in, targets.data(), targets.size(), dim, lr, grad);
          }
        }
      }
    }
  };

  const unsigned workers = std::max(1u, p.workers);
  if (workers == 1) {
    train_range.template operator()<false>(0, corpus.walks.size(), 0);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (corpus.walks.size() + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
      const std::size_t b = std::min(corpus.walks.size(), t * chunk);
      const std::size_t e = std::min(corpus.walks.size(), b + chunk);
      pool.emplace_back([&, b, e, t] { train_range.template operator()<true>(b, e, t); });
    }
  }
  return emb;
}

// `node_id<TAB>v1<TAB>...<TAB>vD`, one node per line, in matrix order.
inline std::string export_embeddings_tsv(const EmbeddingMatrix& emb) {
  std::string out;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    out += emb.ids()[i];
    for (double v : emb.row(i)) {
      out += '\t';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

inline EmbeddingMatrix parse_embeddings_tsv(std::string_view text) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t s = 0;
    for (;;) {
      const std::size_t t = line.find('\t', s);
      fields.push_back(line.substr(s, t == std::string_view::npos ? std::string_view::npos : t - s));
      if (t == std::string_view::npos) break;
      s = t + 1;
    }
    if (fields.size() < 2) throw SchemaError("embedding line " + std::to_string(line_no) + ": no vector");
    std::vector<double> v;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double x = 0.0;
      auto [p, ec] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), x);
      if (ec != std::errc() || p != fields[i].data() + fields[i].size())
        throw SchemaError("embedding line " + std::to_string(line_no) + ": bad number");
      v.push_back(x);
    }
    if (!rows.empty() && v.size() != rows.front().size())
      throw DimensionMismatch("embedding line " + std::to_string(line_no) + ": inconsistent dimension");
    ids.emplace_back(fields[0]);
    rows.push_back(std::move(v));
  }
  if (rows.empty()) throw SchemaError("embedding file is empty");
  EmbeddingMatrix emb(ids, rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), emb.row(i).begin());
  return emb;
}

}  // namespace cellgraph
