#include <gtest/gtest.h>

#include "cellgraph.hpp"
#include "helpers.hpp"

using namespace cellgraph;

namespace {

std::string step_file(const std::string& data) {
  return "ISO-10303-21;\nHEADER;\nFILE_SCHEMA(('IFC4'));\nENDSEC;\nDATA;\n" + data + "ENDSEC;\nEND-ISO-10303-21;\n";
}

}  // namespace

// ---------------------------------------------------------------------------
// STEP / IFC subset

TEST(Step, StudioFixtureCounts) {
  const IfcParseResult r = parse_ifc_subset(read_file(testing_util::fixture("studio.ifc")));
  ASSERT_EQ(r.model.levels.size(), 1u);
  ASSERT_EQ(r.model.spaces.size(), 1u);
  ASSERT_EQ(r.model.objects.size(), 1u);
  EXPECT_EQ(r.model.levels[0].number, 3);
  EXPECT_DOUBLE_EQ(r.model.levels[0].elevation, 12.0);
  EXPECT_EQ(r.model.spaces[0].name, "Studio 301");
  EXPECT_EQ(r.model.spaces[0].level_id, r.model.levels[0].id);
  const SpatialObject& door = r.model.objects[0];
  EXPECT_EQ(door.kind, ObjectKind::Door);
  EXPECT_EQ(door.space_id, r.model.spaces[0].id);
  EXPECT_DOUBLE_EQ(door.position.x, 5.0);
  EXPECT_DOUBLE_EQ(door.position.y, 1.5);
  const BoundingBox box = bounds(r.model.spaces[0].footprint);
  EXPECT_DOUBLE_EQ(box.min.x, 2.0);
  EXPECT_DOUBLE_EQ(box.min.y, 1.0);
  EXPECT_DOUBLE_EQ(box.max.x, 8.0);
  EXPECT_DOUBLE_EQ(box.max.y, 7.0);
  EXPECT_DOUBLE_EQ(area(r.model.spaces[0].footprint), 36.0);
  EXPECT_NO_THROW(validate(r.model));
}

TEST(Step, SkippedWarningsCountSkippedLines) {
  const IfcParseResult r = parse_ifc_subset(read_file(testing_util::fixture("studio.ifc")));
  // IFCPROJECT, IFCSITE, IFCBUILDING, IFCSHAPEREPRESENTATION, IFCPRODUCTDEFINITIONSHAPE
  EXPECT_EQ(r.skipped_count(), 5u);
  std::vector<std::size_t> lines;
  for (const auto& w : r.warnings)
    if (w.skipped) lines.push_back(w.line);
  EXPECT_EQ(lines, (std::vector<std::size_t>{8, 9, 10, 23, 24}));
}

TEST(Step, SolidsOnlyGivesEmptyModelAndOneWarningEach) {
  const std::string text = step_file(
      "#1=IFCEXTRUDEDAREASOLID(#2,#3,#4,3.);\n"
      "#2=IFCEXTRUDEDAREASOLID($,$,$,2.5);\n"
      "#3=IFCEXTRUDEDAREASOLID($,$,$,1.);\n"
      "#4=IFCEXTRUDEDAREASOLID($,$,$,1.);\n");
  const IfcParseResult r = parse_ifc_subset(text);
  EXPECT_TRUE(r.model.levels.empty());
  EXPECT_TRUE(r.model.spaces.empty());
  EXPECT_TRUE(r.model.objects.empty());
  EXPECT_EQ(r.skipped_count(), 4u);
  for (const auto& w : r.warnings) EXPECT_NE(w.message.find("skipped"), std::string::npos) << w.message;
}

TEST(Step, UnterminatedInstanceIsPositioned) {
  try {
    parse_ifc_subset(read_file(testing_util::fixture("malformed.ifc")));
    FAIL() << "expected StepSyntaxError";
  } catch (const StepSyntaxError& e) {
    EXPECT_EQ(e.line(), 7u);
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos);
  }
}

TEST(Step, OtherSyntaxErrorsArePositioned) {
  try {
    parse_ifc_subset(step_file("#1=IFCCARTESIANPOINT((0.,0.));\n#2 IFCCARTESIANPOINT((1.,0.));\n"));
    FAIL() << "expected StepSyntaxError";
  } catch (const StepSyntaxError& e) {
    EXPECT_EQ(e.line(), 7u);
  }
  EXPECT_THROW(parse_ifc_subset("DATA;\n#1=IFCCARTESIANPOINT((0.,0.));\nENDSEC;\n"), StepSyntaxError);
}

TEST(Step, UnresolvedReference) {
  const std::string text = step_file(
      "#10=IFCCARTESIANPOINT((0.,0.,0.));\n"
      "#11=IFCAXIS2PLACEMENT3D(#10,$,$);\n"
      "#12=IFCLOCALPLACEMENT($,#99);\n");
  EXPECT_THROW(parse_ifc_subset(text), UnresolvedRef);
}

TEST(Step, StringsWithSemicolonsAndMultilineInstances) {
  const std::string text = step_file(
      "#10=IFCCARTESIANPOINT((0.,0.,4.));\n#11=IFCAXIS2PLACEMENT3D(#10,$,$);\n#12=IFCLOCALPLACEMENT($,#11);\n"
      "#13=IFCBUILDINGSTOREY('g',$,'Level; 1',$,$,#12,$,$,.ELEMENT.,\n4.);\n");
  const IfcParseResult r = parse_ifc_subset(text);
  ASSERT_EQ(r.model.levels.size(), 1u);
  EXPECT_EQ(r.model.levels[0].name, "Level; 1");
}

// ---------------------------------------------------------------------------
// CSV formats

TEST(Csv, FixesRoundTrip) {
  const std::vector<LocationFix> fixes = {{"u1", 1.2966, 103.77, 12.0, 3, 1633910400, 0.8},
                                          {"u2", 1.29661, 103.7701, 12.0, 3, 1633910460, 4.9}};
  const auto back = parse_fixes_csv(fixes_to_csv(fixes));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].user_id, "u2");
  EXPECT_DOUBLE_EQ(back[1].lat, 1.29661);
  EXPECT_DOUBLE_EQ(back[1].accuracy, 4.9);
  EXPECT_EQ(back[0].floor, 3);
}

TEST(Csv, FeedbackLabelsAndPositionedErrors) {
  const std::string good =
      "user_id,timestamp,lat,lon,floor,label,heart_rate,near_body_temp\n"
      "u1,100,1.29,103.77,3,prefer_cooler,72,31.5\n"
      "u1,200,1.29,103.77,3,no_preference,70,30\n"
      "u2,300,1.29,103.77,3,prefer_warmer,65,29\n";
  const auto votes = parse_feedback_csv(good);
  ASSERT_EQ(votes.size(), 3u);
  EXPECT_EQ(votes[0].label, ThermalLabel::PreferCooler);
  EXPECT_EQ(votes[2].label, ThermalLabel::PreferWarmer);
  EXPECT_EQ(parse_feedback_csv(feedback_to_csv(votes)).size(), 3u);

  const std::string bad_label = good + "u3,400,1.29,103.77,3,toasty,70,30\n";
  try {
    parse_feedback_csv(bad_label, "votes.csv");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("votes.csv line 5"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_feedback_csv(good + "u3,400,1.29,103.77,3,no_preference,300,30\n"), SchemaError);
  EXPECT_THROW(parse_feedback_csv(good + "u3,400,1.29,103.77,3,no_preference,70,50\n"), SchemaError);
  EXPECT_THROW(parse_feedback_csv("user_id,timestamp\nu1,1\n"), SchemaError);
}

TEST(Csv, QuotedFields) {
  const CsvTable t = CsvTable::parse("a,b\n\"x,1\",\"say \"\"hi\"\"\"\n");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.row(0)[0], "x,1");
  EXPECT_EQ(t.row(0)[1], "say \"hi\"");
}

// ---------------------------------------------------------------------------
// Graph, embedding and forest files

TEST(Files, AdjacencyListRoundTrip) {
  const SpatialModel m = parse_floorplan(read_file(testing_util::fixture("floorplan.json")));
  const AttributedGraph g = build_graph(m, discretize(m, 1.0));
  const std::string text = export_adjacency_list(g);
  const auto records = parse_adjacency_list(text);
  ASSERT_EQ(records.size(), g.edge_count());
  std::string again;
  for (const auto& r : records) again += r.src + "\t" + std::string(to_string(r.relation)) + "\t" + r.dst + "\n";
  EXPECT_EQ(again, text);
  EXPECT_THROW(parse_adjacency_list("a\tNEAR\tb\n"), SchemaError);
  EXPECT_THROW(parse_adjacency_list("a\tADJACENT\n"), SchemaError);
}

TEST(Files, EmbeddingTsvRoundTrip) {
  EmbeddingMatrix e({"a", "b", "c"}, 4);
  for (std::size_t i = 0; i < e.data().size(); ++i) e.data()[i] = 0.1 * static_cast<double>(i) - 0.37;
  e.data()[5] = 1.0 / 3.0;
  const EmbeddingMatrix back = parse_embeddings_tsv(export_embeddings_tsv(e));
  EXPECT_EQ(back, e);
  EXPECT_THROW(parse_embeddings_tsv("a\t0.1\t0.2\nb\t0.3\n"), DimensionMismatch);
  EXPECT_THROW(parse_embeddings_tsv("a\tx\n"), SchemaError);
}

TEST(Files, ForestRoundTrip) {
  Matrix X(40, 2);
  std::vector<int> y;
  for (std::size_t i = 0; i < 40; ++i) {
    X.at(i, 0) = static_cast<double>(i % 7) / 3.0;
    X.at(i, 1) = static_cast<double>(i % 5) * 0.1;
    y.push_back((i % 7) > 3);
  }
  ForestParams p;
  p.n_trees = 9;
  const ForestModel m = train_forest(X, y, 2, p);
  const ForestModel back = load_forest(save_forest(m));
  EXPECT_EQ(save_forest(back), save_forest(m));
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(back.votes(X.row(i)), m.votes(X.row(i)));
  EXPECT_THROW(load_forest("forest 2 2 1\ntree 1\n0 0.5 7 8 0 0 1\nimportances 0 0\n"), SchemaError);
  EXPECT_THROW(load_forest("woods"), SchemaError);
}
