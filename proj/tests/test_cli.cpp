#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "cellgraph.hpp"
#include "helpers.hpp"

using namespace cellgraph;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(CELLGRAPH_CLI) + " " + args + " >" + (log.string() + ".out") + " 2>" +
                          (log.string() + ".err");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// A 10 x 10 room with a fan, written as a floor plan.
fs::path write_room(const fs::path& dir) {
  SpatialModel m = testing_util::square_model(10, 10);
  m.objects.push_back(testing_util::fan("F1", "S1", {4.5, 4.5}, 1.5));
  const fs::path p = dir / "room.json";
  write_file(p.string(), serialize_floorplan(m));
  return p;
}

// `n` votes at random positions in the room of write_room.
fs::path write_votes(const fs::path& dir, std::size_t n) {
  const SpatialModel m = testing_util::square_model(10, 10);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<FeedbackVote> votes;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 p{u(rng), u(rng)};
    const auto g = m.transform.to_global(p);
    const auto label = distance(p, {4.5, 4.5}) < 1.5 ? ThermalLabel::NoPreference
                       : p.x > 7                     ? ThermalLabel::PreferCooler
                                                     : ThermalLabel::PreferWarmer;
    votes.push_back({"u" + std::to_string(i % 7), 1000.0 + static_cast<double>(i), g.lat, g.lon, 3, label,
                     70.0 + static_cast<double>(i % 5), 30.0 + 0.1 * static_cast<double>(i % 9)});
  }
  const fs::path p = dir / "votes.csv";
  write_file(p.string(), feedback_to_csv(votes));
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "config.json";
  write_file(p.string(), body);
  return p;
}

const char* kSmallEvaluate = R"({
  "seed": 7,
  "scene": "two_fan",
  "simulation": {"users": 10, "days": 3},
  "skipgram": {"epochs": 1},
  "forest": {"n_trees": 10},
  "split": {"n_splits": 3}
})";

}  // namespace

TEST(Cli, ExitCodes) {
  const fs::path dir = testing_util::temp_dir("cli_exit");
  const fs::path room = write_room(dir);
  EXPECT_EQ(run("discretize --model " + q(room) + " --out " + q(dir / "a"), dir / "ok"), 0);
  EXPECT_TRUE(fs::exists(dir / "a" / "cells.csv"));
  EXPECT_EQ(run("discretize --model " + q(dir / "missing.json") + " --out " + q(dir / "b"), dir / "io"), 2);
  write_file((dir / "bad.json").string(), R"({"levels": [], "spaces": [{"id": "S1"}], "objects": []})");
  EXPECT_EQ(run("discretize --model " + q(dir / "bad.json") + " --out " + q(dir / "c"), dir / "bad"), 1);
  EXPECT_EQ(run("no-such-command", dir / "unknown"), 1);
  EXPECT_EQ(run("ingest " + q(testing_util::fixture("malformed.ifc")) + " --out " + q(dir / "d"), dir / "step"), 1);
  EXPECT_NE(read_file((dir / "step.err").string()).find("line 7"), std::string::npos);
}

TEST(Cli, SeedIsRequired) {
  const fs::path dir = testing_util::temp_dir("cli_seed");
  const fs::path cfg = write_config(dir, R"({"scene": "two_fan"})");
  EXPECT_EQ(run("simulate --config " + q(cfg) + " --out " + q(dir / "a"), dir / "noseed"), 1);
  EXPECT_NE(read_file((dir / "noseed.err").string()).find("seed"), std::string::npos);
  EXPECT_EQ(run("simulate --config " + q(cfg) + " --seed 3 --out " + q(dir / "b"), dir / "seeded"), 0);
  for (const char* f : {"model.json", "fixes.csv", "feedback.csv", "onboarding.csv", "sensors.csv", "truth.csv"})
    EXPECT_TRUE(fs::exists(dir / "b" / f)) << f;
  const fs::path unknown = write_config(dir, R"({"seed": 1, "colour": "red"})");
  EXPECT_EQ(run("simulate --config " + q(unknown), dir / "unknown"), 1);
}

TEST(Cli, SimilarityMapAnchorIsOne) {
  const fs::path dir = testing_util::temp_dir("cli_similarity");
  const fs::path room = write_room(dir);
  const std::string common = " --seed 11 --model " + q(room) + " --out " + q(dir / "out");
  ASSERT_EQ(run("build-graph" + common, dir / "graph"), 0);
  ASSERT_EQ(run("embed --seed 11 --graph " + q(dir / "out" / "graph.tsv") + " --out " + q(dir / "out"), dir / "embed"), 0);
  ASSERT_EQ(run("similarity-map --anchor C3010001 --embeddings " + q(dir / "out" / "embeddings.tsv") + common,
                dir / "map"),
            0);
  const auto doc = nlohmann::json::parse(read_file((dir / "out" / "similarity_C3010001.geojson").string()));
  ASSERT_EQ(doc["features"].size(), 100u);
  bool found = false;
  for (const auto& f : doc["features"])
    if (f["properties"]["cell_id"] == "C3010001") {
      EXPECT_NEAR(f["properties"]["similarity"].get<double>(), 1.0, 1e-12);
      found = true;
    }
  EXPECT_TRUE(found);
  EXPECT_EQ(run("similarity-map --anchor C3019999 --embeddings " + q(dir / "out" / "embeddings.tsv") + common,
                dir / "unknown"),
            1);
}

TEST(Cli, CrossValidateThousandRows) {
  const fs::path dir = testing_util::temp_dir("cli_cv");
  const fs::path room = write_room(dir);
  const fs::path votes = write_votes(dir, 1000);
  const fs::path out = dir / "out";
  ASSERT_EQ(run("build-graph --seed 2 --model " + q(room) + " --out " + q(out), dir / "graph"), 0);
  ASSERT_EQ(run("embed --seed 2 --graph " + q(out / "graph.tsv") + " --out " + q(out), dir / "embed"), 0);
  const fs::path cfg = write_config(dir, R"({"seed": 2, "forest": {"n_trees": 10},
    "paths": {"model": "room.json", "feedback": "votes.csv", "embeddings": "out/embeddings.tsv", "out": "out"}})");
  ASSERT_EQ(run("cross-validate --config " + q(cfg), dir / "cv"), 0);
  const auto j = nlohmann::json::parse(read_file((out / "cv.json").string()));
  EXPECT_EQ(j["rows"], 1000);
  EXPECT_EQ(j["splits"], 30);
  EXPECT_EQ(j["test_size"], 30);
  ASSERT_EQ(j["metrics"]["per_split"].size(), 30u);
  for (const auto& s : j["metrics"]["per_split"]) EXPECT_EQ(s["test_size"], 30);
  for (const char* key : {"per_split", "mean_test_accuracy", "confusion_matrix", "feature_importances"})
    EXPECT_TRUE(j["metrics"].contains(key)) << key;

  ASSERT_EQ(run("train --config " + q(cfg), dir / "train"), 0);
  ASSERT_EQ(run("recommend --config " + q(cfg) + " --forest " + q(out / "forest.txt") + " --hr 70 --temp 30 --top 5",
                dir / "rec"),
            0);
  const std::string rec = read_file((out / "recommendations.csv").string());
  EXPECT_EQ(std::count(rec.begin(), rec.end(), '\n'), 6);
}

TEST(Cli, IdempotentAndLeavesInputsAlone) {
  const fs::path dir = testing_util::temp_dir("cli_idem");
  const fs::path room = write_room(dir);
  const fs::path votes = write_votes(dir, 200);
  const std::string room_before = read_file(room.string()), votes_before = read_file(votes.string());
  for (const char* o : {"a", "b"}) {
    const std::string args = " --seed 5 --model " + q(room) + " --out " + q(dir / o);
    ASSERT_EQ(run("build-graph --feedback " + q(votes) + args, dir / (std::string(o) + "g")), 0);
    ASSERT_EQ(run("discretize" + args, dir / (std::string(o) + "d")), 0);
    ASSERT_EQ(run("ingest " + q(room) + " --out " + q(dir / o), dir / (std::string(o) + "i")), 0);
  }
  for (const char* f : {"graph.tsv", "census.csv", "cells.csv", "model.json"})
    EXPECT_EQ(read_file((dir / "a" / f).string()), read_file((dir / "b" / f).string())) << f;
  EXPECT_EQ(read_file((dir / "a" / "model.json").string()), room_before);
  EXPECT_EQ(read_file(room.string()), room_before);
  EXPECT_EQ(read_file(votes.string()), votes_before);
}

TEST(Cli, LocateSnapsCleanedFixes) {
  const fs::path dir = testing_util::temp_dir("cli_locate");
  const fs::path room = write_room(dir);
  const SpatialModel m = testing_util::square_model(10, 10);
  std::vector<LocationFix> fixes;
  for (int s = 0; s < 600; ++s) {
    const auto g = m.transform.to_global({2.5, 7.5});
    fixes.push_back({"u1", g.lat, g.lon, 12.0, 3, 1000.0 + s, 1.0});
  }
  write_file((dir / "fixes.csv").string(), fixes_to_csv(fixes));
  ASSERT_EQ(run("locate --model " + q(room) + " --fixes " + q(dir / "fixes.csv") + " --out " + q(dir), dir / "loc"), 0);
  const CsvTable t = CsvTable::parse(read_file((dir / "located.csv").string()));
  ASSERT_EQ(t.size(), 10u);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t.row(i)[t.column("cell_id")], "C3010073");
}

TEST(Cli, EvaluateIsDeterministic) {
  const fs::path dir = testing_util::temp_dir("cli_evaluate");
  const fs::path cfg = write_config(dir, kSmallEvaluate);
  ASSERT_EQ(run("evaluate --config " + q(cfg) + " --out " + q(dir / "a"), dir / "a"), 0);
  ASSERT_EQ(run("evaluate --config " + q(cfg) + " --out " + q(dir / "b"), dir / "b"), 0);
  for (const char* f : {"report.json", "report.txt", "embeddings.tsv", "census.csv"})
    EXPECT_EQ(read_file((dir / "a" / f).string()), read_file((dir / "b" / f).string())) << f;
  std::size_t maps = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) maps += e.path().extension() == ".geojson";
  EXPECT_EQ(maps, 5u);
}
