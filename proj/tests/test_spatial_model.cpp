#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cellgraph.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cellgraph;
using testing_util::fan;
using testing_util::square_model;
using testing_util::window;

namespace {

constexpr const char* kMinimal = R"({
  "levels": [{"id": "L1", "name": "Ground", "number": 1, "elevation": 0}],
  "spaces": [{"id": "S1", "name": "Hall", "level_id": "L1",
              "footprint": [[0,0],[10,0],[10,10],[0,10]], "ventilation_mode": "NV"}],
  "objects": [{"id": "F1", "kind": "CeilingFan", "space_id": "S1", "position": [5,5,3], "aoi": {"radius": 1.5}}],
  "transform": {"origin_lat": 1.2966, "origin_lon": 103.7707, "rotation_deg": 0}
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  if (at != std::string::npos) s.replace(at, from.size(), to);
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Geometry

TEST(Geometry, PolygonContainmentIsBoundaryInclusive) {
  const Polygon sq{{0, 0}, {4, 0}, {4, 4}, {0, 4}};
  EXPECT_TRUE(contains(sq, {2, 2}));
  EXPECT_TRUE(contains(sq, {0, 2}));
  EXPECT_TRUE(contains(sq, {4, 4}));
  EXPECT_FALSE(contains(sq, {4.001, 2}));
  EXPECT_DOUBLE_EQ(area(sq), 16.0);
}

TEST(Geometry, LShapeMatchesRayCastingOracle) {
  const Polygon l{{0, 0}, {6, 0}, {6, 3}, {3, 3}, {3, 6}, {0, 6}};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 7.0);
  for (int i = 0; i < 5000; ++i) {
    const Point2 p{u(rng), u(rng)};
    EXPECT_EQ(contains(l, p), oracle::in_polygon({l.begin(), l.end()}, p)) << p.x << "," << p.y;
  }
}

// ---------------------------------------------------------------------------
// Floor-plan JSON

TEST(Floorplan, MinimalDocumentHasOneOfEach) {
  const SpatialModel m = parse_floorplan(kMinimal);
  EXPECT_EQ(m.levels.size(), 1u);
  EXPECT_EQ(m.spaces.size(), 1u);
  ASSERT_EQ(m.objects.size(), 1u);
  EXPECT_EQ(m.objects[0].kind, ObjectKind::CeilingFan);
  EXPECT_DOUBLE_EQ(*m.objects[0].aoi->radius, 1.5);
  EXPECT_EQ(m.spaces[0].ventilation_mode, VentilationMode::NV);
}

TEST(Floorplan, MissingLevelIsDanglingRef) {
  const std::string doc = replace(kMinimal, R"("level_id": "L1")", R"("level_id": "L9")");
  EXPECT_THROW(parse_floorplan(doc), DanglingRef);
}

TEST(Floorplan, MissingSpaceIsDanglingRef) {
  const std::string doc = replace(kMinimal, R"("space_id": "S1")", R"("space_id": "S7")");
  EXPECT_THROW(parse_floorplan(doc), DanglingRef);
}

TEST(Floorplan, MissingFieldIsSchemaError) {
  const std::string doc = replace(kMinimal, R"("name": "Hall", )", "");
  EXPECT_NO_THROW(parse_floorplan(doc));
  const std::string no_footprint = replace(kMinimal, R"("footprint": [[0,0],[10,0],[10,10],[0,10]], )", "");
  EXPECT_THROW(parse_floorplan(no_footprint), SchemaError);
  EXPECT_THROW(parse_floorplan("{not json"), SchemaError);
}

TEST(Floorplan, DegeneratePolygonIsGeometryError) {
  const std::string collinear = replace(kMinimal, "[[0,0],[10,0],[10,10],[0,10]]", "[[0,0],[5,0],[10,0]]");
  EXPECT_THROW(parse_floorplan(collinear), GeometryError);
  const std::string bowtie = replace(kMinimal, "[[0,0],[10,0],[10,10],[0,10]]", "[[0,0],[10,10],[10,0],[0,10]]");
  EXPECT_THROW(parse_floorplan(bowtie), GeometryError);
}

TEST(Floorplan, UnknownFieldsWarnAndAreIgnored) {
  const std::string doc = replace(kMinimal, R"("name": "Hall", )", R"("name": "Hall", "colour": "blue", )");
  std::vector<std::string> warnings;
  const SpatialModel m = parse_floorplan(doc, &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("colour"), std::string::npos);
  EXPECT_EQ(m, parse_floorplan(kMinimal));
}

TEST(Floorplan, FixtureParses) {
  const SpatialModel m = parse_floorplan(read_file(testing_util::fixture("floorplan.json")));
  EXPECT_EQ(m.levels.size(), 1u);
  EXPECT_EQ(m.spaces.size(), 2u);
  EXPECT_EQ(m.objects.size(), 5u);
  EXPECT_EQ(*m.spaces[1].setpoint_c, 26.0);
}

TEST(Floorplan, RoundTripIsIdentity) {
  const SpatialModel fixture = parse_floorplan(read_file(testing_util::fixture("floorplan.json")));
  EXPECT_EQ(parse_floorplan(serialize_floorplan(fixture)), fixture);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SpatialModel m = testing_util::random_model(seed, 1 + seed % 5, seed % 7);
    m.transform = CoordinateTransform(1.0 + 0.1 * static_cast<double>(seed), 100.0 + 1.0 / static_cast<double>(seed),
                                      3.7 * static_cast<double>(seed));
    m.spaces[0].setpoint_c = 25.5 + 0.1 * static_cast<double>(seed);
    EXPECT_EQ(parse_floorplan(serialize_floorplan(m)), m) << "seed " << seed;
  }
  const Scene scene = generate_scene(default_scene_config());
  EXPECT_EQ(parse_floorplan(serialize_floorplan(scene.model)), scene.model);
}

TEST(Floorplan, HarnessSceneEchoesCaseStudyComposition) {
  const Scene scene = generate_scene(default_scene_config());
  const SpatialModel m = parse_floorplan(serialize_floorplan(scene.model));
  std::size_t fans = 0, ac = 0;
  for (const auto& o : m.objects) {
    fans += o.kind == ObjectKind::CeilingFan;
    ac += o.kind == ObjectKind::AirCond;
  }
  EXPECT_EQ(m.spaces.size(), 5u);
  EXPECT_EQ(fans, 9u);
  EXPECT_EQ(ac, 15u);
}

// ---------------------------------------------------------------------------
// Coordinate transform

TEST(Transform, OriginIsFixedPoint) {
  const CoordinateTransform t(1.2966, 103.7764, 23.0);
  const auto g = local_to_global({0, 0}, t);
  EXPECT_DOUBLE_EQ(g.lat, 1.2966);
  EXPECT_DOUBLE_EQ(g.lon, 103.7764);
}

TEST(Transform, EastwardShiftMatchesGeodesic) {
  for (double lat : {0.0, 1.2966, 35.0, 51.5}) {
    const CoordinateTransform t(lat, 10.0, 0.0);
    const double delta = 0.05;  // degrees of arc along the equator
    const auto g = local_to_global({111'320.0 * delta, 0.0}, t);
    EXPECT_NEAR(g.lat, lat, 1e-12);
    const double expected_shift = delta / std::cos(lat * std::numbers::pi / 180.0);
    EXPECT_NEAR((g.lon - 10.0) / expected_shift, 1.0, 5e-3) << "lat " << lat;
    // Haversine on a 6371 km sphere.
    const double r = 6'371'000.0, p1 = lat * std::numbers::pi / 180.0, dl = (g.lon - 10.0) * std::numbers::pi / 180.0;
    const double h = std::cos(p1) * std::cos(p1) * std::sin(dl / 2) * std::sin(dl / 2);
    const double d = 2 * r * std::asin(std::sqrt(h));
    EXPECT_NEAR(d / (111'320.0 * delta), 1.0, 5e-3) << "lat " << lat;
  }
}

TEST(Transform, RoundTripProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double rot : {0.0, 17.5, -90.0, 200.0}) {
    const CoordinateTransform t(1.2966, 103.7764, rot);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Point2 p{1000.0 * u(rng), 1000.0 * u(rng)};
      if (norm(p) >= 1000.0) continue;
      worst = std::max(worst, distance(global_to_local(local_to_global(p, t), t), p));
    }
    EXPECT_LT(worst, 1e-6) << "rotation " << rot;
  }
}

TEST(Transform, RotationTurnsLocalAxis) {
  const CoordinateTransform t(0.0, 0.0, 90.0);
  const auto g = t.to_global({100.0, 0.0});  // local x points north
  EXPECT_GT(g.lat, 0.0);
  EXPECT_NEAR(g.lon, 0.0, 1e-12);
}

TEST(Transform, OutOfRange) {
  const CoordinateTransform t(1.0, 100.0, 0.0);
  EXPECT_THROW(t.to_global({10'000.0, 0.0}), OutOfRange);
  EXPECT_NO_THROW(t.to_global({9'999.0, 0.0}));
  EXPECT_THROW(t.to_local({1.2, 100.0}), OutOfRange);
}

// ---------------------------------------------------------------------------
// Areas of influence

TEST(Aoi, FanIsDiskOfItsRadius) {
  const auto r = aoi_region(fan("F", "S1", {3, 3}, 0.9));
  ASSERT_TRUE(r);
  ASSERT_EQ(r->shape(), AoiRegion::Shape::Disk);
  const auto& d = std::get<DiskRegion>(r->geometry());
  EXPECT_EQ(d.center, (Point2{3, 3}));
  EXPECT_DOUBLE_EQ(d.radius, 0.9);
  EXPECT_TRUE(r->contains({3.9, 3}));
  EXPECT_FALSE(r->contains({3.91, 3}));
}

TEST(Aoi, WindowBandDefaultsToSevenFeet) {
  const auto r = aoi_region(window("W", "S1", {0, 0}, {4, 0}));
  ASSERT_TRUE(r);
  ASSERT_EQ(r->shape(), AoiRegion::Shape::Band);
  EXPECT_DOUBLE_EQ(std::get<BandRegion>(r->geometry()).depth, 2.13);
  EXPECT_DOUBLE_EQ(kDefaultWindowDepth, 2.13);
  EXPECT_TRUE(r->contains({2, 2.13}));
  EXPECT_FALSE(r->contains({2, 2.14}));
  EXPECT_FALSE(r->contains({2, -0.1}));  // outside, right of the segment
}

TEST(Aoi, DiffuserSectorDefaults) {
  SpatialObject d{"D", ObjectKind::VavDiffuser, "S1", {0, 0, 2.8}, AoiParams{}};
  const auto r = aoi_region(d);
  ASSERT_TRUE(r);
  ASSERT_EQ(r->shape(), AoiRegion::Shape::Sector);
  const auto& s = std::get<SectorRegion>(r->geometry());
  EXPECT_DOUBLE_EQ(s.throw_m, 2.0);
  EXPECT_DOUBLE_EQ(s.spread_deg, 90.0);
  EXPECT_TRUE(r->contains({1.5, 1.0}));
  EXPECT_FALSE(r->contains({-1.0, 0.0}));
}

TEST(Aoi, KindsWithoutRuleHaveNone) {
  for (ObjectKind k : {ObjectKind::Chair, ObjectKind::Door, ObjectKind::AirCond, ObjectKind::Desk}) {
    SpatialObject o{"X", k, "S1", {1, 1, 0}, std::nullopt};
    EXPECT_FALSE(aoi_region(o)) << to_string(k);
  }
}

TEST(Aoi, MissingParams) {
  SpatialObject f{"F", ObjectKind::CeilingFan, "S1", {1, 1, 3}, std::nullopt};
  EXPECT_THROW(aoi_region(f), MissingAoiParams);
  f.aoi = AoiParams{};
  EXPECT_THROW(aoi_region(f), MissingAoiParams);
  SpatialObject w{"W", ObjectKind::Window, "S1", {1, 1, 1}, AoiParams{}};
  EXPECT_THROW(aoi_region(w), MissingAoiParams);
}

TEST(Aoi, MembershipIsMonotoneInSize) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-4.0, 4.0), s(0.2, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const double r1 = s(rng), r2 = r1 + s(rng);
    const Point2 p{u(rng), u(rng)};
    const bool fan_small = aoi_region(fan("F", "S", {0, 0}, r1))->contains(p);
    const bool fan_large = aoi_region(fan("F", "S", {0, 0}, r2))->contains(p);
    EXPECT_TRUE(!fan_small || fan_large);
    const bool win_small = aoi_region(window("W", "S", {-2, 0}, {2, 0}, r1))->contains(p);
    const bool win_large = aoi_region(window("W", "S", {-2, 0}, {2, 0}, r2))->contains(p);
    EXPECT_TRUE(!win_small || win_large);
    const bool vav_small = aoi_region(testing_util::diffuser("D", "S", {0, 0}, 30, r1, 60))->contains(p);
    const bool vav_large = aoi_region(testing_util::diffuser("D", "S", {0, 0}, 30, r2, 60))->contains(p);
    EXPECT_TRUE(!vav_small || vav_large);
  }
}

TEST(Aoi, MembershipMatchesIndependentOracle) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5.0, 5.0), s(0.3, 4.0), a(0.0, 360.0);
  for (int i = 0; i < 200; ++i) {
    const std::vector<SpatialObject> objs = {fan("F", "S", {u(rng), u(rng)}, s(rng)),
                                             window("W", "S", {u(rng), u(rng)}, {u(rng), u(rng)}, s(rng)),
                                             testing_util::diffuser("D", "S", {u(rng), u(rng)}, a(rng), s(rng), a(rng) / 2)};
    for (int j = 0; j < 50; ++j) {
      const Point2 p{u(rng), u(rng)};
      for (const auto& o : objs) EXPECT_EQ(aoi_region(o)->contains(p), oracle::in_aoi(o, p)) << o.id;
    }
  }
}

// ---------------------------------------------------------------------------
// Validation

TEST(Validate, DuplicateIdsAndDanglingRefs) {
  SpatialModel m = square_model(5, 5);
  EXPECT_NO_THROW(validate(m));
  m.objects.push_back(fan("S1", "S1", {1, 1}, 1.0));
  EXPECT_THROW(validate(m), SchemaError);
  m.objects.back().id = "F1";
  m.objects.back().space_id = "S9";
  EXPECT_THROW(validate(m), DanglingRef);
}
