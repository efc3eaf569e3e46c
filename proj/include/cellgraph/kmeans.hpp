#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "cellgraph/errors.hpp"
#include "cellgraph/rng.hpp"

namespace cellgraph {

struct KMeansParams {
  std::size_t k = 2;
  std::size_t max_iter = 300;
  double tol = 1e-4;  // on the summed squared center shift
  std::size_t n_init = 4;
  std::uint64_t seed = 1;
};

struct KMeansResult {
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> centers;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline KMeansResult kmeans_once(const std::vector<std::vector<double>>& pts, std::size_t k, std::size_t max_iter,
                                double tol, Rng& rng) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.front().size();
  KMeansResult r;

  // k-means++ seeding
  r.centers.push_back(pts[uniform_index(rng, n)]);
  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = sq_dist(pts[i], r.centers[0]);
  while (r.centers.size() < k) {
    double total = 0.0;
    for (double d : closest) total += d;
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = uniform_index(rng, n);
    } else {
      double u = uniform01(rng) * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        u -= closest[pick];
        if (u < 0.0) break;
      }
    }
    r.centers.push_back(pts[pick]);
    for (std::size_t i = 0; i < n; ++i) closest[i] = std::min(closest[i], sq_dist(pts[i], r.centers.back()));
  }

  r.labels.assign(n, 0);
  for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(pts[i], r.centers[c]);
        if (d < best) {
          best = d;
          r.labels[i] = c;
        }
      }
    }
    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++count[r.labels[i]];
      for (std::size_t j = 0; j < dim; ++j) next[r.labels[i]][j] += pts[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) {
        // Empty cluster takes the point farthest from its center.
        std::size_t far = 0;
        double worst = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = sq_dist(pts[i], r.centers[r.labels[i]]);
          if (d > worst) {
            worst = d;
            far = i;
          }
        }
        next[c] = pts[far];
        r.labels[far] = c;
        continue;
      }
      for (double& v : next[c]) v /= static_cast<double>(count[c]);
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift += sq_dist(next[c], r.centers[c]);
    r.centers = std::move(next);
    if (shift <= tol) break;
  }
  r.iterations = std::min(r.iterations, max_iter);

  r.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(pts[i], r.centers[c]);
      if (d < best) {
        best = d;
        r.labels[i] = c;
      }
    }
    r.inertia += best;
  }
  return r;
}

}  // namespace detail

// Lloyd iterations from k-means++ seeds; the lowest-inertia restart wins.
inline KMeansResult kmeans(const std::vector<std::vector<double>>& points, const KMeansParams& p) {
  if (p.k == 0) throw ConfigError("k must be at least 1");
  if (p.k > points.size())
    throw KTooLarge("k = " + std::to_string(p.k) + " exceeds " + std::to_string(points.size()) + " points");
  for (const auto& v : points)
    if (v.size() != points.front().size()) throw DimensionMismatch("k-means points differ in dimension");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t run = 0; run < std::max<std::size_t>(1, p.n_init); ++run) {
    Rng rng(derive_seed(p.seed, "kmeans", run));
    auto r = detail::kmeans_once(points, p.k, p.max_iter, p.tol, rng);
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

// Adjusted Rand index between two labelings of the same items.
template <typename A, typename B>
double adjusted_rand_index(const std::vector<A>& a, const std::vector<B>& b) {
  if (a.size() != b.size()) throw DimensionMismatch("labelings differ in length");
  const double n = static_cast<double>(a.size());
  std::map<std::pair<A, B>, double> joint;
  std::map<A, double> ra;
  std::map<B, double> rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [_, v] : joint) sum_joint += c2(v);
  for (const auto& [_, v] : ra) sum_a += c2(v);
  for (const auto& [_, v] : rb) sum_b += c2(v);
  const double expected = sum_a * sum_b / c2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

}  // namespace cellgraph
