#include <gtest/gtest.h>

#include <cmath>

#include "ecdrive/codec.hpp"

namespace {

using namespace ecdrive;
using namespace ecdrive::codec;
using sim::Action;

sim::Scene worked_scene() {
  sim::ScenarioConfig c;
  c.lane_count = 4;
  c.ego_speed = 25.0;
  c.ego_position = 361.18;
  c.vehicle_count = 0;
  c.vehicles.push_back({496, 1, 372.81, 21.2, 0.2});
  return sim::spawn_scenario(c, 0);
}

sim::VehicleState vehicle(int id, int lane, double position, double speed) {
  sim::VehicleState v;
  v.id = id;
  v.lane = lane;
  v.position = position;
  v.speed = speed;
  return v;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

TEST(Describe, WorkedSceneValues) {
  const std::string t = describe(worked_scene()).text;
  EXPECT_TRUE(contains(t, "rightmost lane of a four-lane road at a speed of 25.0 m/s")) << t;
  EXPECT_TRUE(contains(t, "with an acceleration of 0.0 m/s²"));
  EXPECT_TRUE(contains(t, "lane position is 361.18 m"));
  EXPECT_TRUE(contains(t, "Vehicle 496"));
  EXPECT_TRUE(contains(t, "is in the left lane, ahead by 372.81 m"));
  EXPECT_TRUE(contains(t, "21.2 m/s"));
  EXPECT_TRUE(contains(t, "0.2 m/s²"));
}

TEST(Describe, EgoSentenceOnly) {
  sim::Scene s = worked_scene();
  s.others.clear();
  const std::string t = describe(s).text;
  EXPECT_EQ(t,
            "The ego vehicle is traveling in the rightmost lane of a four-lane "
            "road at a speed of 25.0 m/s, with an acceleration of 0.0 m/s², "
            "and its lane position is 361.18 m.");
}

TEST(Describe, OrderedByDistance) {
  sim::Scene s = worked_scene();
  s.others.clear();
  s.others.push_back(vehicle(7, 0, s.ego.position + 50, 20));
  s.others.push_back(vehicle(8, 0, s.ego.position + 5, 20));
  const std::string t = describe(s).text;
  ASSERT_TRUE(contains(t, "Vehicle 7") && contains(t, "Vehicle 8"));
  EXPECT_LT(t.find("Vehicle 8"), t.find("Vehicle 7"));
}

TEST(Describe, LanePhrases) {
  sim::Scene s = worked_scene();
  s.others.clear();
  s.ego.lane = 1;
  s.others.push_back(vehicle(1, 3, 300, 20));
  s.others.push_back(vehicle(2, 0, 500, 20));
  s.others.push_back(vehicle(3, 1, 700, 20));
  const std::string t = describe(s).text;
  EXPECT_TRUE(contains(t, "traveling in the second lane of a four-lane road")) << t;
  EXPECT_TRUE(contains(t, "Vehicle 1 is in the second left lane, behind by 300.00 m"));
  EXPECT_TRUE(contains(t, "Vehicle 2 is in the right lane, ahead by 500.00 m"));
  EXPECT_TRUE(contains(t, "Vehicle 3 is in the same lane"));
  s.ego.lane = 3;
  EXPECT_TRUE(contains(describe(s).text, "leftmost lane"));
}

TEST(Featurize, LayoutOnWorkedScene) {
  const FeatureVector x = featurize(worked_scene());
  EXPECT_EQ(x.size(), 15u);
  EXPECT_DOUBLE_EQ(x[feature::kSpeed], 25.0);
  EXPECT_DOUBLE_EQ(x[feature::kAccel], 0.0);
  EXPECT_DOUBLE_EQ(x[feature::kLane], 0.0);
  EXPECT_DOUBLE_EQ(x[feature::kFront + feature::kGap], 200.0);
  EXPECT_DOUBLE_EQ(x[feature::kFront + feature::kPresent], 0.0);
  EXPECT_NEAR(x[feature::kFrontLeft + feature::kGap], 11.63, 1e-9);
  EXPECT_NEAR(x[feature::kFrontLeft + feature::kRelSpeed], -3.8, 1e-9);
  EXPECT_DOUBLE_EQ(x[feature::kFrontLeft + feature::kPresent], 1.0);
  EXPECT_DOUBLE_EQ(x[feature::kFrontRight + feature::kGap], 200.0);
}

TEST(Featurize, LaneNormalizedAndGapClamped) {
  sim::Scene s = worked_scene();
  s.ego.lane = 2;
  s.others = {vehicle(1, 2, s.ego.position + 450, 20)};
  const FeatureVector x = featurize(s);
  EXPECT_DOUBLE_EQ(x[feature::kLane], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(x[feature::kFront + feature::kGap], 200.0);
  EXPECT_DOUBLE_EQ(x[feature::kFront + feature::kPresent], 1.0);
}

TEST(Featurize, PureWithoutNoise) {
  const sim::Scene s = worked_scene();
  Rng a(1), b(2);
  EXPECT_EQ(featurize(s, a), featurize(s));
  EXPECT_EQ(featurize(s, b), featurize(s));
  EXPECT_EQ(a, Rng(1));  // nothing drawn
}

TEST(Featurize, SensorNoiseVariance) {
  sim::Scene s = worked_scene();
  s.noise_sigma = 2.0;
  Rng rng(42);
  constexpr int kN = 10000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < kN; ++i) {
    const double v = featurize(s, rng)[feature::kSpeed];
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / kN;
  const double var = (sum2 - kN * mean * mean) / (kN - 1);
  EXPECT_NEAR(var, 4.0, 0.2);
  EXPECT_NEAR(mean, 25.0, 0.1);
}

// Fuzz: random scenes with heavy noise still satisfy the type invariants.
TEST(Featurize, BoundsFuzz) {
  sim::ScenarioConfig c;
  c.vehicle_count = 14;
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    sim::Scene s = sim::spawn_scenario(c, seed);
    s.noise_sigma = 50.0 * (seed % 3);
    if (seed % 2) s.obstacles.push_back({s.ego.lane, s.ego.position + 3, 4, "x"});
    const FeatureVector x = featurize(s, rng);
    for (double v : x) EXPECT_TRUE(std::isfinite(v));
    for (std::size_t base : {feature::kFront, feature::kRear,
                             feature::kFrontLeft, feature::kFrontRight}) {
      EXPECT_GE(x[base + feature::kGap], 0.0);
      EXPECT_LE(x[base + feature::kGap], 200.0);
      const double flag = x[base + feature::kPresent];
      EXPECT_TRUE(flag == 0.0 || flag == 1.0);
    }
    EXPECT_GE(x[feature::kLane], 0.0);
    EXPECT_LE(x[feature::kLane], 1.0);
  }
}

TEST(ParseDecision, Lexicon) {
  const std::pair<const char*, Action> cases[] = {
      {"I will accelerate.", Action::kAccelerate},
      {"Decision: decelerate", Action::kDecelerate},
      {"We should slow down now", Action::kDecelerate},
      {"Brake!", Action::kDecelerate},
      {"Keep current speed.", Action::kKeep},
      {"maintain speed", Action::kKeep},
      {"Change lane to the left", Action::kLaneChangeLeft},
      {"change lanes to the left", Action::kLaneChangeLeft},
      {"a left lane change", Action::kLaneChangeLeft},
      {"CHANGE LANE TO THE RIGHT", Action::kLaneChangeRight},
      {"change lanes to the right", Action::kLaneChangeRight},
      {"right lane change", Action::kLaneChangeRight},
  };
  for (const auto& [text, action] : cases) {
    EXPECT_EQ(parse_decision(text), action) << text;
  }
}

TEST(ParseDecision, LastOccurrenceWins) {
  EXPECT_EQ(parse_decision("Accelerating is unsafe, so keep speed. Final "
                           "decision: change lane to the left."),
            Action::kLaneChangeLeft);
  EXPECT_EQ(parse_decision("Option: change lane to the right. Decision: "
                           "decelerate"),
            Action::kDecelerate);
}

TEST(ParseDecision, RejectsDecisionFreeText) {
  EXPECT_THROW(parse_decision("The road ahead is clear."), NoDecisionFound);
  EXPECT_THROW(parse_decision(""), NoDecisionFound);
}

}  // namespace
