#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "cellgraph.hpp"
#include "helpers.hpp"

using namespace cellgraph;

namespace {

// Four Gaussian blobs at the corners of a square; opposite corners share a label.
void xor_data(std::size_t n, std::uint64_t seed, Matrix& X, std::vector<int>& y) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.15);
  X = Matrix(n, 2);
  y.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const int a = static_cast<int>(i % 2), b = static_cast<int>((i / 2) % 2);
    X.at(i, 0) = a + noise(rng);
    X.at(i, 1) = b + noise(rng);
    y.push_back(a ^ b);
  }
}

// Majority vote recomputed from the trees alone, walking each tree by hand.
int replay(const ForestModel& m, std::span<const double> x) {
  std::vector<int> counts(m.n_classes, 0);
  for (const auto& t : m.trees) {
    std::size_t i = 0;
    while (t.nodes[i].feature >= 0) {
      const auto& n = t.nodes[i];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    ++counts[static_cast<std::size_t>(t.nodes[i].label)];
  }
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

ForestParams small_forest(std::size_t trees, std::uint64_t seed = 1) {
  ForestParams p;
  p.n_trees = trees;
  p.seed = seed;
  return p;
}

EmbeddingMatrix constant_embedding(const std::vector<std::string>& ids, double v) {
  EmbeddingMatrix e(ids, 20);
  std::fill(e.data().begin(), e.data().end(), v);
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------
// Features

TEST(Features, DirectConcatenation) {
  const auto emb = constant_embedding({"C3010001"}, 0.1);
  const auto ds = assemble_features({{"u1", 0, "C3010001", ThermalLabel::PreferWarmer, 70, 31}}, emb);
  ASSERT_EQ(ds.X.rows, 1u);
  ASSERT_EQ(ds.X.cols, 22u);
  for (std::size_t j = 0; j < 20; ++j) EXPECT_EQ(ds.X.at(0, j), 0.1);
  EXPECT_EQ(ds.X.at(0, 20), 70.0);
  EXPECT_EQ(ds.X.at(0, 21), 31.0);
  EXPECT_EQ(ds.y, std::vector<int>{2});
  EXPECT_EQ(ds.feature_names.size(), 22u);
  EXPECT_EQ(ds.personality, std::vector<int>{-1});
}

TEST(Features, SharedCellsShareColumnsAndOrderIsEquivariant) {
  EmbeddingMatrix emb({"A", "B", "C"}, 20);
  for (std::size_t i = 0; i < emb.data().size(); ++i) emb.data()[i] = std::sin(static_cast<double>(i));
  std::vector<FeedbackRecord> recs;
  for (int i = 0; i < 12; ++i)
    recs.push_back({"u" + std::to_string(i % 4), static_cast<double>(i), std::string(1, "ABC"[i % 3]),
                    static_cast<ThermalLabel>(i % 3), 60.0 + i, 28.0 + 0.1 * i});
  const auto ds = assemble_features(recs, emb);
  for (std::size_t j = 0; j < 20; ++j) EXPECT_EQ(ds.X.at(0, j), ds.X.at(3, j));
  auto shuffled = recs;
  std::mt19937_64 rng(4);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto ds2 = assemble_features(shuffled, emb);
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    const auto k = static_cast<std::size_t>(std::find(recs.begin(), recs.end(), shuffled[i]) - recs.begin());
    for (std::size_t j = 0; j < 22; ++j) EXPECT_EQ(ds2.X.at(i, j), ds.X.at(k, j));
    EXPECT_EQ(ds2.y[i], ds.y[k]);
  }
}

TEST(Features, MissingEmbedding) {
  const auto emb = constant_embedding({"A"}, 0.1);
  EXPECT_THROW(assemble_features({{"u", 0, "B", ThermalLabel::NoPreference, 70, 31}}, emb), MissingEmbedding);
}

// ---------------------------------------------------------------------------
// Forest

TEST(Forest, SingleClassIsConstantPredictor) {
  Matrix X(10, 3);
  for (std::size_t i = 0; i < 10; ++i) X.at(i, 0) = static_cast<double>(i);
  const std::vector<int> y(10, 1);
  const auto m = train_forest(X, y, 3, small_forest(5));
  ASSERT_FALSE(m.warnings.empty());
  EXPECT_NE(m.warnings[0].find("DegenerateLabels"), std::string::npos);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(m.predict(X.row(i)), 1);
    EXPECT_EQ(m.predict_proba(X.row(i))[1], 1.0);
  }
}

TEST(Forest, XorIsShattered) {
  Matrix X;
  std::vector<int> y;
  xor_data(400, 3, X, y);
  const auto m = train_forest(X, y, 2, small_forest(50));
  std::size_t hit = 0;
  for (std::size_t i = 0; i < X.rows; ++i) hit += m.predict(X.row(i)) == y[i];
  EXPECT_GE(static_cast<double>(hit) / static_cast<double>(X.rows), 0.95);
}

TEST(Forest, SameSeedSamePredictions) {
  Matrix X, probe;
  std::vector<int> y, unused;
  xor_data(300, 5, X, y);
  xor_data(100, 6, probe, unused);
  const auto a = train_forest(X, y, 2, small_forest(30, 9));
  const auto b = train_forest(X, y, 2, small_forest(30, 9));
  for (std::size_t i = 0; i < probe.rows; ++i) EXPECT_EQ(a.votes(probe.row(i)), b.votes(probe.row(i)));
  EXPECT_EQ(save_forest(a), save_forest(b));
}

TEST(Forest, ParallelEqualsSequential) {
  Matrix X;
  std::vector<int> y;
  xor_data(300, 7, X, y);
  ForestParams p = small_forest(24, 2);
  const auto a = train_forest(X, y, 2, p);
  p.threads = 4;
  const auto b = train_forest(X, y, 2, p);
  EXPECT_EQ(save_forest(a), save_forest(b));
}

TEST(Forest, ProbabilitiesAndPerTreeReplay) {
  Matrix X;
  std::vector<int> y;
  xor_data(200, 11, X, y);
  for (std::size_t i = 0; i < y.size(); i += 3) y[i] = 2;  // a noisy third class
  const auto m = train_forest(X, y, 3, small_forest(41));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> x{u(rng), u(rng)};
    const auto p = m.predict_proba(x);
    double total = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(m.predict(x), replay(m, x));
  }
  EXPECT_THROW(m.predict(std::vector<double>{1.0}), DimensionMismatch);
  EXPECT_THROW(m.predict(std::vector<double>{1.0, std::nan("")}), DimensionMismatch);
}

TEST(Forest, TreeOrderDoesNotMatter) {
  Matrix X;
  std::vector<int> y;
  xor_data(200, 12, X, y);
  auto m = train_forest(X, y, 2, small_forest(31));
  auto r = m;
  std::reverse(r.trees.begin(), r.trees.end());
  std::mt19937_64 rng(5);
  std::shuffle(r.trees.begin() + 3, r.trees.end(), rng);
  for (std::size_t i = 0; i < X.rows; ++i) EXPECT_EQ(m.predict_proba(X.row(i)), r.predict_proba(X.row(i)));
}

TEST(Forest, TieGoesToLowestClass) {
  ForestModel m;
  m.n_classes = 3;
  m.n_features = 1;
  for (int label : {2, 1, 2, 1}) m.trees.push_back({{{-1, 0.0, 0, 0, label, 0, 0}}, {0.0}});
  EXPECT_EQ(m.predict(std::vector<double>{0.0}), 1);
}

TEST(Forest, ConformsToHyperparameters) {
  Matrix X(300, 22);
  std::vector<int> y;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t i = 0; i < 300; ++i) {
    for (std::size_t j = 0; j < 22; ++j) X.at(i, j) = n(rng);
    y.push_back(X.at(i, 0) + 0.5 * X.at(i, 20) > 0.3 ? 0 : (X.at(i, 21) > 0 ? 1 : 2));
  }
  const auto m = train_forest(X, y, 3);
  EXPECT_EQ(m.trees.size(), 200u);
  EXPECT_EQ(m.params.max_depth, 220u);
  EXPECT_EQ(m.params.max_features, 4u);
  for (const auto& t : m.trees) {
    EXPECT_LE(t.depth(), 220u);
    for (const auto& node : t.nodes)
      if (node.feature >= 0) {
        EXPECT_LE(node.candidates, 4u);
        EXPECT_LT(node.feature, 22);
      }
  }
}

TEST(Forest, DepthCapIsRespected) {
  Matrix X;
  std::vector<int> y;
  xor_data(300, 13, X, y);
  ForestParams p = small_forest(10);
  p.max_depth = 2;
  for (const auto& t : train_forest(X, y, 2, p).trees) EXPECT_LE(t.depth(), 2u);
}

TEST(Forest, MonotoneTransformLeavesPredictionsUnchanged) {
  Matrix X(250, 22);
  std::vector<int> y;
  std::mt19937_64 rng(22);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t i = 0; i < 250; ++i) {
    for (std::size_t j = 0; j < 22; ++j) X.at(i, j) = n(rng);
    y.push_back(static_cast<int>(i % 3));
  }
  Matrix T = X;
  for (double& v : T.data) v = 2.0 * v + 1.0;
  const auto a = train_forest(X, y, 3, small_forest(40));
  const auto b = train_forest(T, y, 3, small_forest(40));
  for (int i = 0; i < 300; ++i) {
    std::vector<double> x(22), t(22);
    for (std::size_t j = 0; j < 22; ++j) {
      x[j] = n(rng);
      t[j] = 2.0 * x[j] + 1.0;
    }
    EXPECT_EQ(a.votes(x), b.votes(t));
  }
  for (std::size_t i = 0; i < 250; ++i) EXPECT_EQ(a.votes(X.row(i)), b.votes(T.row(i)));
}

// ---------------------------------------------------------------------------
// Split protocol and cross-validation

TEST(Splits, ThousandRowsThirtyByThirty) {
  const SplitPlan plan = make_split_plan(1000, 30, 0.03, 5);
  ASSERT_EQ(plan.splits.size(), 30u);
  for (const auto& s : plan.splits) {
    EXPECT_EQ(s.test.size(), 30u);
    EXPECT_EQ(s.train.size(), 970u);
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
  }
  EXPECT_NO_THROW(check_plan(plan, 1000));
  const SplitPlan again = make_split_plan(1000, 30, 0.03, 5);
  for (std::size_t s = 0; s < 30; ++s) EXPECT_EQ(plan.splits[s].test, again.splits[s].test);
  EXPECT_NE(plan.splits[0].test, make_split_plan(1000, 30, 0.03, 6).splits[0].test);
  EXPECT_NE(plan.splits[0].test, plan.splits[1].test);
}

TEST(Splits, SizesAndValidation) {
  EXPECT_EQ(test_size_for(1000, 0.03), 30u);
  EXPECT_EQ(test_size_for(10, 0.03), 1u);
  EXPECT_EQ(test_size_for(50, 0.03), 2u);  // round(1.5)
  EXPECT_THROW(make_split_plan(1), ConfigError);
  SplitPlan bad = make_split_plan(20, 2, 0.1, 1);
  bad.splits[1].test.push_back(bad.splits[1].train.front());
  EXPECT_THROW(check_plan(bad, 20), ConfigError);
  EXPECT_THROW(check_plan(make_split_plan(20, 2, 0.1, 1), 21), DimensionMismatch);
}

TEST(CrossValidate, PermutedLabelsScoreNearMajorityRate) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::size_t N = 1000;
  Matrix X(N, 22);
  std::vector<int> y;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < 22; ++j) X.at(i, j) = n(rng);
    y.push_back(i < 600 ? 1 : (i < 800 ? 0 : 2));
  }
  std::shuffle(y.begin(), y.end(), rng);
  const auto m = cross_validate(X, y, make_split_plan(N, 30, 0.03, 3), small_forest(50));
  EXPECT_NEAR(m.mean_test_accuracy, 0.6, 0.05);
  EXPECT_EQ(m.per_split.size(), 30u);
  std::size_t total = 0;
  for (const auto& row : m.confusion)
    for (auto c : row) total += c;
  EXPECT_EQ(total, 900u);
  const auto j = metrics_to_json(m);
  for (const char* key : {"per_split", "mean_test_accuracy", "confusion_matrix", "feature_importances"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["per_split"].size(), 30u);
  EXPECT_EQ(j["per_split"][0]["test_size"], 30);
}

TEST(CrossValidate, LearnableSignalIsLearned) {
  Matrix X;
  std::vector<int> y;
  xor_data(600, 19, X, y);
  const auto m = cross_validate(X, y, make_split_plan(600, 10, 0.03, 1), small_forest(30), 2);
  EXPECT_GT(m.mean_test_accuracy, 0.9);
  EXPECT_GT(m.mean_train_accuracy, 0.95);
}

// ---------------------------------------------------------------------------
// Personalities

TEST(Personalities, IdenticalHistogramsShareCluster) {
  std::map<std::string, LabelHistogram> users = {
      {"a", {10, 5, 1}}, {"b", {20, 10, 2}}, {"c", {0, 3, 9}}, {"d", {1, 8, 1}}, {"e", {5, 5, 5}}};
  const auto p = cluster_personalities(users, 4, 1);
  EXPECT_EQ(p.at("a"), p.at("b"));
  users.erase("b");
  const auto each = cluster_personalities(users, 4, 1);
  std::set<int> distinct;
  for (const auto& [u, k] : each) distinct.insert(k);
  EXPECT_EQ(distinct.size(), 4u);
  EXPECT_THROW(cluster_personalities(users, 5, 1), KTooLarge);
}

TEST(Personalities, RecoverHarnessArchetypes) {
  const Scene scene = generate_scene(two_fan_scene_config());
  SimConfig sc;
  sc.days = 1;
  sc.n_users = 60;
  const SimOutput sim = simulate_occupants(scene, sc);
  const auto p = cluster_personalities(sim.onboarding, 10, 7);
  std::vector<int> got;
  std::vector<std::size_t> truth;
  for (const auto& [user, k] : p) {
    got.push_back(k);
    truth.push_back(sim.personality.at(user));
  }
  EXPECT_GE(adjusted_rand_index(got, truth), 0.6);
}

// ---------------------------------------------------------------------------
// Recommendation

TEST(Recommend, OrderingTiesAndIdenticalEmbeddings) {
  EmbeddingMatrix emb({"C1", "C2", "C3", "C4"}, 20);
  for (std::size_t j = 0; j < 20; ++j) {
    emb.row(0)[j] = 1.0;
    emb.row(1)[j] = 1.0;
    emb.row(2)[j] = -1.0;
    emb.row(3)[j] = 0.0;
  }
  Matrix X(60, 22);
  std::vector<int> y;
  for (std::size_t i = 0; i < 60; ++i) {
    const std::size_t c = i % 3;
    for (std::size_t j = 0; j < 20; ++j) X.at(i, j) = emb.row(c == 2 ? 3 : c)[j] + (c == 1 ? -2.0 : 0.0);
    X.at(i, 20) = 70;
    X.at(i, 21) = 30;
    y.push_back(c == 0 ? 1 : 0);
  }
  const auto model = train_forest(X, y, 3, small_forest(25));
  const std::vector<std::string> ids = {"C4", "C3", "C2", "C1"};
  const auto all = recommend_cells(model, emb, ids, 70, 30, 10);
  ASSERT_EQ(all.size(), 4u);
  for (std::size_t i = 1; i < all.size(); ++i) {
    EXPECT_GE(all[i - 1].score, all[i].score);
    if (all[i - 1].score == all[i].score) EXPECT_LT(all[i - 1].cell_id, all[i].cell_id);
  }
  std::map<std::string, double> score;
  for (const auto& s : all) score[s.cell_id] = s.score;
  EXPECT_EQ(score["C1"], score["C2"]);
  EXPECT_EQ(recommend_cells(model, emb, ids, 70, 30, 2).size(), 2u);
  EXPECT_THROW(recommend_cells(model, emb, ids, 70, 30, 0), ConfigError);
}

TEST(Recommend, TopCellsAreMoreComfortableThanAverage) {
  SceneConfig cfg = two_fan_scene_config();
  const Scene scene = generate_scene(cfg);
  SimConfig sc;
  sc.n_users = 30;
  sc.days = 10;
  sc.seed = 4;
  const SimOutput sim = simulate_occupants(scene, sc);
  const AttributedGraph graph = build_graph(scene.model, scene.cells);
  const WalkGraph wg = WalkGraph::from_graph(graph);
  const EmbeddingMatrix emb = train_skipgram(wg, random_walks(wg, {}), {});
  const CellLocator locator(scene.cells);
  const auto records = link_votes(sim.votes, scene.model, locator);
  const auto ds = assemble_features(records, emb);
  const auto model = train_forest(ds.X, ds.y, 3, small_forest(100));
  double hr = 0, temp = 0;
  for (const auto& r : records) {
    hr += r.heart_rate / static_cast<double>(records.size());
    temp += r.near_body_temp / static_cast<double>(records.size());
  }
  const auto top = recommend_cells(model, emb, cell_ids(scene.cells), hr, temp, 10);
  double top_mean = 0, all_mean = 0;
  for (const auto& s : top) top_mean += scene.field.mean_probabilities(scene.field.index(s.cell_id))[1] / 10.0;
  for (std::size_t i = 0; i < scene.cells.size(); ++i)
    all_mean += scene.field.mean_probabilities(i)[1] / static_cast<double>(scene.cells.size());
  EXPECT_GE(top_mean, all_mean);
}
