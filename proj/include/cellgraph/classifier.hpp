#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellgraph/csv.hpp"
#include "cellgraph/embedding.hpp"
#include "cellgraph/errors.hpp"
#include "cellgraph/forest.hpp"
#include "cellgraph/graph.hpp"
#include "cellgraph/kmeans.hpp"
#include "cellgraph/localization.hpp"

namespace cellgraph {

enum class ThermalLabel { PreferCooler = 0, NoPreference = 1, PreferWarmer = 2 };

inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<ThermalLabel, 3> kThermalLabels = {ThermalLabel::PreferCooler, ThermalLabel::NoPreference,
                                                              ThermalLabel::PreferWarmer};

inline std::string_view to_string(ThermalLabel l) {
  switch (l) {
    case ThermalLabel::PreferCooler: return "prefer_cooler";
    case ThermalLabel::NoPreference: return "no_preference";
    case ThermalLabel::PreferWarmer: return "prefer_warmer";
  }
  return "?";
}

inline std::optional<ThermalLabel> parse_thermal_label(std::string_view s) {
  for (ThermalLabel l : kThermalLabels)
    if (to_string(l) == s) return l;
  return std::nullopt;
}

struct FeedbackRecord {
  std::string user_id;
  double timestamp = 0.0;
  std::string cell_id;
  ThermalLabel label = ThermalLabel::NoPreference;
  double heart_rate = 70.0;      // bpm
  double near_body_temp = 31.0;  // deg C

  friend bool operator==(const FeedbackRecord&, const FeedbackRecord&) = default;
};

inline void check_record(const FeedbackRecord& r) {
  if (!(r.heart_rate > 20.0 && r.heart_rate < 250.0))
    throw SchemaError("heart_rate " + format_number(r.heart_rate) + " outside (20, 250)");
  if (!(r.near_body_temp > 15.0 && r.near_body_temp < 45.0))
    throw SchemaError("near_body_temp " + format_number(r.near_body_temp) + " outside (15, 45)");
}

// One row of the feedback ingest file, before cell linking.
struct FeedbackVote {
  std::string user_id;
  double timestamp = 0.0;
  double lat = 0.0;
  double lon = 0.0;
  int floor = 0;
  ThermalLabel label = ThermalLabel::NoPreference;
  double heart_rate = 70.0;
  double near_body_temp = 31.0;
};

inline std::vector<FeedbackVote> parse_feedback_csv(std::string_view text, std::string source = "feedback.csv") {
  const CsvTable t = CsvTable::parse(text, std::move(source));
  const auto cu = t.column("user_id"), ct = t.column("timestamp"), cla = t.column("lat"), clo = t.column("lon"),
             cf = t.column("floor"), cl = t.column("label"), ch = t.column("heart_rate"),
             cb = t.column("near_body_temp");
  std::vector<FeedbackVote> out;
  out.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    FeedbackVote v;
    v.user_id = t.row(i)[cu];
    v.timestamp = t.number(i, ct);
    v.lat = t.number(i, cla);
    v.lon = t.number(i, clo);
    v.floor = static_cast<int>(t.integer(i, cf));
    auto label = parse_thermal_label(t.row(i)[cl]);
    if (!label) throw SchemaError(t.where(t.line(i)) + ": unknown label '" + t.row(i)[cl] + "'");
    v.label = *label;
    v.heart_rate = t.number(i, ch);
    v.near_body_temp = t.number(i, cb);
    try {
      check_record({v.user_id, v.timestamp, {}, v.label, v.heart_rate, v.near_body_temp});
    } catch (const SchemaError& e) {
      throw SchemaError(t.where(t.line(i)) + ": " + e.what());
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline std::string feedback_to_csv(const std::vector<FeedbackVote>& votes) {
  std::string out = "user_id,timestamp,lat,lon,floor,label,heart_rate,near_body_temp\n";
  for (const auto& v : votes) {
    out += v.user_id + "," + format_number(v.timestamp) + "," + format_number(v.lat) + "," + format_number(v.lon) +
           "," + std::to_string(v.floor) + "," + std::string(to_string(v.label)) + "," + format_number(v.heart_rate) +
           "," + format_number(v.near_body_temp) + "\n";
  }
  return out;
}

inline std::string records_to_csv(const std::vector<FeedbackRecord>& records) {
  std::string out = "user_id,timestamp,cell_id,label,heart_rate,near_body_temp\n";
  for (const auto& r : records) {
    out += r.user_id + "," + format_number(r.timestamp) + "," + r.cell_id + "," + std::string(to_string(r.label)) +
           "," + format_number(r.heart_rate) + "," + format_number(r.near_body_temp) + "\n";
  }
  return out;
}

inline std::vector<FeedbackRecord> parse_records_csv(std::string_view text, std::string source = "records.csv") {
  const CsvTable t = CsvTable::parse(text, std::move(source));
  const auto cu = t.column("user_id"), ct = t.column("timestamp"), cc = t.column("cell_id"), cl = t.column("label"),
             ch = t.column("heart_rate"), cb = t.column("near_body_temp");
  std::vector<FeedbackRecord> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto label = parse_thermal_label(t.row(i)[cl]);
    if (!label) throw SchemaError(t.where(t.line(i)) + ": unknown label '" + t.row(i)[cl] + "'");
    FeedbackRecord r{t.row(i)[cu], t.number(i, ct), t.row(i)[cc], *label, t.number(i, ch), t.number(i, cb)};
    check_record(r);
    out.push_back(std::move(r));
  }
  return out;
}

// Snaps each vote's position to its nearest cell on the vote's floor.
inline std::vector<FeedbackRecord> link_votes(const std::vector<FeedbackVote>& votes, const SpatialModel& model,
                                              const CellLocator& locator) {
  std::vector<FeedbackRecord> out;
  out.reserve(votes.size());
  for (const auto& v : votes) {
    const LocationFix fix{v.user_id, v.lat, v.lon, 0.0, v.floor, v.timestamp, kMinAccuracy};
    out.push_back({v.user_id, v.timestamp, snap_to_cell(fix, model, locator).id, v.label, v.heart_rate,
                   v.near_body_temp});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

struct LabeledDataset {
  Matrix X;
  std::vector<int> y;
  std::vector<std::string> groups;  // user per row
  std::vector<int> personality;     // -1 when unknown
  std::vector<std::string> feature_names;
};

inline std::vector<std::string> embedding_feature_names(std::size_t dim) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= dim; ++i) names.push_back("emb_" + std::to_string(i));
  names.emplace_back("heart_rate");
  names.emplace_back("near_body_temp");
  return names;
}

inline LabeledDataset assemble_features(const std::vector<FeedbackRecord>& records, const EmbeddingMatrix& emb,
                                        const std::map<std::string, int>& personalities = {}) {
  LabeledDataset ds;
  const std::size_t dim = emb.dim();
  ds.X = Matrix(records.size(), dim + 2);
  ds.feature_names = embedding_feature_names(dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto v = emb.vector(r.cell_id);
    auto row = ds.X.row(i);
    std::copy(v.begin(), v.end(), row.begin());
    row[dim] = r.heart_rate;
    row[dim + 1] = r.near_body_temp;
    ds.y.push_back(static_cast<int>(r.label));
    ds.groups.push_back(r.user_id);
    auto it = personalities.find(r.user_id);
    ds.personality.push_back(it == personalities.end() ? -1 : it->second);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Personalities

using LabelHistogram = std::array<double, kNumLabels>;

inline std::map<std::string, LabelHistogram> label_histograms(const std::vector<FeedbackRecord>& records) {
  std::map<std::string, LabelHistogram> out;
  for (const auto& r : records) out[r.user_id][static_cast<std::size_t>(r.label)] += 1.0;
  return out;
}

// k-means over per-user label frequencies (histograms normalized to the
// simplex). Cluster ids are renumbered by first appearance in user order.
inline std::map<std::string, int> cluster_personalities(const std::map<std::string, LabelHistogram>& users,
                                                        std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ConfigError("k must be at least 1");
  if (k > users.size())
    throw KTooLarge("k = " + std::to_string(k) + " exceeds " + std::to_string(users.size()) + " users");
  std::vector<std::vector<double>> pts;
  for (const auto& [_, h] : users) {
    const double total = h[0] + h[1] + h[2];
    if (total <= 0.0) throw SchemaError("user with an empty label histogram");
    pts.push_back({h[0] / total, h[1] / total, h[2] / total});
  }
  KMeansParams p;
  p.k = k;
  p.seed = seed;
  p.n_init = 10;
  const auto r = kmeans(pts, p);
  std::map<std::size_t, int> renumber;
  std::map<std::string, int> out;
  std::size_t i = 0;
  for (const auto& [user, _] : users) {
    auto [it, fresh] = renumber.emplace(r.labels[i++], static_cast<int>(renumber.size()));
    out[user] = it->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Split protocol

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

struct SplitPlan {
  std::size_t n_rows = 0;
  double test_fraction = 0.03;
  std::vector<DataSplit> splits;
};

inline std::size_t test_size_for(std::size_t n, double fraction) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
}

// Independent shuffles; each split takes the first round(f*N) shuffled rows
// as its test set.
inline SplitPlan make_split_plan(std::size_t n, std::size_t n_splits = 30, double test_fraction = 0.03,
                                 std::uint64_t seed = 1) {
  if (n < 2) throw ConfigError("split plan needs at least 2 rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
  const std::size_t n_test = test_size_for(n, test_fraction);
  if (n_test >= n) throw ConfigError("test set would leave no training rows");
  SplitPlan plan{n, test_fraction, {}};
  for (std::size_t s = 0; s < n_splits; ++s) {
    const std::uint64_t split_seed = derive_seed(seed, "split", s);
    Rng rng(split_seed);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    DataSplit d;
    d.seed = split_seed;
    d.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    d.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    std::sort(d.test.begin(), d.test.end());
    std::sort(d.train.begin(), d.train.end());
    plan.splits.push_back(std::move(d));
  }
  return plan;
}

inline void check_plan(const SplitPlan& plan, std::size_t n) {
  if (plan.n_rows != n) throw DimensionMismatch("split plan built for a different row count");
  for (const auto& s : plan.splits) {
    std::vector<bool> seen(n, false);
    for (auto i : s.train) {
      if (i >= n || seen[i]) throw ConfigError("split plan has an invalid training index");
      seen[i] = true;
    }
    for (auto i : s.test) {
      if (i >= n || seen[i]) throw ConfigError("split plan test rows overlap training rows");
      seen[i] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw ConfigError("split plan misses rows");
  }
}

inline Matrix select_rows(const Matrix& X, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), X.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(X.row(rows[i]).begin(), X.row(rows[i]).end(), out.row(i).begin());
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation

struct SplitMetrics {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t test_size = 0;
};

struct CvMetrics {
  std::vector<SplitMetrics> per_split;
  double mean_train_accuracy = 0.0;
  double mean_test_accuracy = 0.0;
  double sd_test_accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted], summed over splits
  std::vector<double> feature_importances;
  std::vector<std::string> feature_names;
};

inline CvMetrics cross_validate(const Matrix& X, const std::vector<int>& y, const SplitPlan& plan,
                                const ForestParams& params, std::size_t n_classes = kNumLabels) {
  check_plan(plan, X.rows);
  CvMetrics m;
  m.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
  m.feature_importances.assign(X.cols, 0.0);
  for (std::size_t s = 0; s < plan.splits.size(); ++s) {
    const DataSplit& split = plan.splits[s];
    std::vector<int> ytr;
    for (auto i : split.train) ytr.push_back(y[i]);
    ForestParams p = params;
    p.seed = derive_seed(params.seed, "cv-forest", s);
    const ForestModel model = train_forest(select_rows(X, split.train), ytr, n_classes, p);
    SplitMetrics sm;
    std::size_t hit = 0;
    for (auto i : split.train) hit += model.predict(X.row(i)) == y[i];
    sm.train_accuracy = static_cast<double>(hit) / static_cast<double>(split.train.size());
    hit = 0;
    for (auto i : split.test) {
      const int pred = model.predict(X.row(i));
      hit += pred == y[i];
      ++m.confusion[static_cast<std::size_t>(y[i])][static_cast<std::size_t>(pred)];
    }
    sm.test_size = split.test.size();
    sm.test_accuracy = static_cast<double>(hit) / static_cast<double>(split.test.size());
    m.per_split.push_back(sm);
    const auto imp = model.feature_importances();
    for (std::size_t f = 0; f < X.cols; ++f) m.feature_importances[f] += imp[f] / static_cast<double>(plan.splits.size());
  }
  const double n = static_cast<double>(m.per_split.size());
  for (const auto& s : m.per_split) {
    m.mean_train_accuracy += s.train_accuracy / n;
    m.mean_test_accuracy += s.test_accuracy / n;
  }
  double var = 0.0;
  for (const auto& s : m.per_split) var += (s.test_accuracy - m.mean_test_accuracy) * (s.test_accuracy - m.mean_test_accuracy);
  m.sd_test_accuracy = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  return m;
}

inline CvMetrics cross_validate(const LabeledDataset& ds, const SplitPlan& plan, const ForestParams& params) {
  CvMetrics m = cross_validate(ds.X, ds.y, plan, params);
  m.feature_names = ds.feature_names;
  return m;
}

inline nlohmann::ordered_json metrics_to_json(const CvMetrics& m) {
  nlohmann::ordered_json j;
  j["per_split"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.per_split.size(); ++i) {
    j["per_split"].push_back({{"split", i},
                              {"train_accuracy", m.per_split[i].train_accuracy},
                              {"test_accuracy", m.per_split[i].test_accuracy},
                              {"test_size", m.per_split[i].test_size}});
  }
  j["mean_train_accuracy"] = m.mean_train_accuracy;
  j["mean_test_accuracy"] = m.mean_test_accuracy;
  j["sd_test_accuracy"] = m.sd_test_accuracy;
  nlohmann::ordered_json labels = nlohmann::ordered_json::array();
  for (ThermalLabel l : kThermalLabels) labels.push_back(std::string(to_string(l)));
  j["confusion_matrix"] = {{"labels", labels}, {"counts", m.confusion}};
  nlohmann::ordered_json imp = nlohmann::ordered_json::object();
  for (std::size_t f = 0; f < m.feature_importances.size(); ++f) {
    const std::string name = f < m.feature_names.size() ? m.feature_names[f] : "f" + std::to_string(f + 1);
    imp[name] = m.feature_importances[f];
  }
  j["feature_importances"] = imp;
  return j;
}

// ---------------------------------------------------------------------------
// Recommendation

struct CellScore {
  std::string cell_id;
  double score = 0.0;
};

// P(NoPreference) for each cell at the given physiology; best first, ties by
// cell id.
inline std::vector<CellScore> recommend_cells(const ForestModel& model, const EmbeddingMatrix& emb,
                                              const std::vector<std::string>& cell_ids, double heart_rate,
                                              double near_body_temp, std::size_t top_n) {
  if (top_n == 0) throw ConfigError("top_n must be at least 1");
  std::vector<CellScore> out;
  out.reserve(cell_ids.size());
  std::vector<double> x(emb.dim() + 2);
  for (const auto& id : cell_ids) {
    const auto v = emb.vector(id);
    std::copy(v.begin(), v.end(), x.begin());
    x[emb.dim()] = heart_rate;
    x[emb.dim() + 1] = near_body_temp;
    out.push_back({id, model.predict_proba(x)[static_cast<std::size_t>(ThermalLabel::NoPreference)]});
  }
  std::sort(out.begin(), out.end(), [](const CellScore& a, const CellScore& b) {
    return a.score != b.score ? a.score > b.score : a.cell_id < b.cell_id;
  });
  if (out.size() > top_n) out.resize(top_n);
  return out;
}

}  // namespace cellgraph
