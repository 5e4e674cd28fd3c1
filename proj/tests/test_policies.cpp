#include <gtest/gtest.h>

#include <cmath>

#include "ecdrive/policies.hpp"

namespace {

using namespace ecdrive;
using namespace ecdrive::policy;
using sim::Action;
using sim::Scene;

Scene road(int lanes, int ego_lane, double speed) {
  Scene s;
  s.lane_count = lanes;
  s.ego.lane = ego_lane;
  s.ego.speed = speed;
  s.ego.position = 1000.0;
  return s;
}

void add_vehicle(Scene& s, int id, int lane, double gap, double speed) {
  sim::VehicleState v;
  v.id = id;
  v.lane = lane;
  v.position = s.ego.position + gap;
  v.speed = speed;
  v.target_speed = speed;
  v.cruise_speed = speed;
  s.others.push_back(v);
}

void add_obstacle(Scene& s, int lane, double gap, double extent = 4.0) {
  s.obstacles.push_back({lane, s.ego.position + gap, extent, "debris"});
}

TEST(Edge, EmptyRoadAccelerates) {
  const Decision d = edge_decide(road(3, 1, 25));
  EXPECT_EQ(d.action, Action::kAccelerate);
  EXPECT_EQ(d.source, Source::kEdge);
  ASSERT_EQ(d.rationale.size(), 1u);
  EXPECT_EQ(d.rationale[0].rfind("Check accelerate", 0), 0u);
  EXPECT_GE(d.confidence, 0.97);
  EXPECT_DOUBLE_EQ(d.confidence, 195.0 / 200.0);
}

TEST(Edge, WorkedSceneAccelerates) {
  Scene s = road(4, 0, 25.0);
  s.ego.position = 361.18;
  add_vehicle(s, 496, 1, 372.81 - 361.18, 21.2);
  EXPECT_EQ(edge_decide(s).action, Action::kAccelerate);
}

// Front gap 6 m closing at 5 m/s, both neighbor lanes blocked ahead.
TEST(Edge, HandTracedDeceleration) {
  Scene s = road(3, 1, 20.0);
  add_vehicle(s, 1, 1, 6.0, 15.0);
  add_vehicle(s, 2, 2, 2.0, 20.0);
  add_vehicle(s, 3, 0, 10.0, 20.0);
  const Decision d = edge_decide(s);
  // Accelerate: gap after = 6 + 15 - (20 + 1) = 0 at 22 m/s.
  // Keep: headway 6 / 20 = 0.30 s.  Lane changes need 5 + 1.5 * 20 = 35 m.
  const std::vector<std::string> expected{
      "Check accelerate: front gap 6.00 m, headway after accelerating 0.00 s "
      "(need 1.50 s) -> unsafe.",
      "Check keep speed: front gap 6.00 m, current headway 0.30 s (need "
      "1.50 s) -> unsafe.",
      "Check lane change left: target front gap 2.00 m (need 35.00 m), target "
      "rear gap clear (need 5.00 m) -> unsafe.",
      "Check lane change right: target front gap 10.00 m (need 35.00 m), "
      "target rear gap clear (need 5.00 m) -> unsafe.",
      "Decelerate: no safe alternative, braking with front gap 6.00 m.",
  };
  EXPECT_EQ(d.action, Action::kDecelerate);
  EXPECT_EQ(d.rationale, expected);
  // Margin 6 - 5 = 1 m, kappa 5 m.
  EXPECT_DOUBLE_EQ(d.confidence, 1.0 / 6.0);
  EXPECT_LT(d.confidence, 0.5);
}

TEST(Edge, LaneChangeLeftWhenOnlyLeftIsOpen) {
  Scene s = road(3, 1, 20.0);
  add_vehicle(s, 1, 1, 15.0, 14.0);
  add_vehicle(s, 3, 0, 12.0, 20.0);
  const Decision d = edge_decide(s);
  EXPECT_EQ(d.action, Action::kLaneChangeLeft);
  EXPECT_EQ(d.rationale.size(), 3u);
  EXPECT_DOUBLE_EQ(d.confidence, squash_confidence(195.0, 5.0));
}

TEST(Edge, BlindToObstacles) {
  Scene s = road(3, 0, 25.0);
  add_obstacle(s, 0, 20.0);
  EXPECT_EQ(edge_decide(s).action, Action::kAccelerate);
}

TEST(Rollout, EmptyRoadKeep) {
  const RolloutResult r = rollout_cost(road(3, 0, 25), Action::kKeep, 3);
  EXPECT_DOUBLE_EQ(r.cost, 5.0);
  EXPECT_FALSE(r.collision_predicted);
}

TEST(Rollout, LaneChangePenalty) {
  const Scene s = road(3, 1, 25);
  EXPECT_DOUBLE_EQ(rollout_cost(s, Action::kLaneChangeLeft, 3).cost -
                       rollout_cost(s, Action::kKeep, 3).cost,
                   2.0);
  EXPECT_DOUBLE_EQ(rollout_cost(s, Action::kLaneChangeRight, 3).cost, 7.0);
}

TEST(Rollout, ObstacleTenMetersAhead) {
  Scene s = road(3, 0, 25);
  add_obstacle(s, 0, 10.0);
  const RolloutResult r = rollout_cost(s, Action::kKeep, 3);
  EXPECT_TRUE(r.collision_predicted);
  EXPECT_GE(r.cost, 1000.0);
}

TEST(Rollout, IllegalAndBadHorizon) {
  const Scene s = road(3, 0, 25);
  EXPECT_TRUE(std::isinf(rollout_cost(s, Action::kLaneChangeRight, 3).cost));
  EXPECT_THROW(rollout_cost(s, Action::kKeep, 0), std::invalid_argument);
}

TEST(Rollout, HeadwayTerm) {
  Scene s = road(3, 0, 20);
  add_vehicle(s, 1, 0, 50.0, 20.0);
  // Gap stays 50 m at 20 m/s: headway 2.5 s, no penalty.
  EXPECT_DOUBLE_EQ(rollout_cost(s, Action::kKeep, 3).cost, 10.0);
  s.others[0].position = s.ego.position + 24.0;
  // Headway 1.2 s: 50 * (1.5 - 1.2) / 1.5 = 10.
  EXPECT_NEAR(rollout_cost(s, Action::kKeep, 3).cost, 20.0, 1e-12);
}

TEST(Cloud, EmptyRoadAccelerates) {
  const Decision d = cloud_decide(road(3, 0, 25));
  EXPECT_EQ(d.action, Action::kAccelerate);
  EXPECT_EQ(d.source, Source::kCloud);
  // Accelerate 3, Keep 5: margin 2, kappa 10.
  EXPECT_DOUBLE_EQ(d.confidence, 2.0 / 12.0);
  EXPECT_EQ(d.rationale.back().rfind("planned: Accelerate", 0), 0u);
}

TEST(Cloud, CorrectsEdgeOnObstacle) {
  Scene s = road(3, 0, 25);
  add_obstacle(s, 0, 20.0);
  const Decision cloud = cloud_decide(s);
  const Decision edge = edge_decide(s);
  EXPECT_EQ(cloud.action, Action::kLaneChangeLeft);
  EXPECT_TRUE(edge.action == Action::kAccelerate || edge.action == Action::kKeep);
  EXPECT_EQ(cloud.rationale.front().rfind("perceived: obstacle", 0), 0u);
  bool has_prediction = false;
  for (const auto& line : cloud.rationale) {
    has_prediction |= line.rfind("predicted: ", 0) == 0;
  }
  EXPECT_TRUE(has_prediction);
}

// Substep-sampled first contact for an ego starting `gap` meters behind the
// obstacle center at v0 with constant acceleration a (no clamp reached).
double contact_speed(double v0, double a, double gap, double extent) {
  const double reach = gap - (2.5 + extent / 2);
  for (int k = 0; k <= 20; ++k) {
    const double t = k / 20.0;
    if (v0 * t + 0.5 * a * t * t > reach) return v0 + a * t;
  }
  return -1;
}

TEST(Cloud, AllCollideChoosesDeceleration) {
  Scene s = road(3, 1, 25);
  for (int lane = 0; lane < 3; ++lane) add_obstacle(s, lane, 8.0);
  const double keep_impact = contact_speed(25, 0, 8, 4);
  const double acc_impact = contact_speed(25, 2, 8, 4);
  const double dec_impact = contact_speed(25, -3, 8, 4);
  ASSERT_GT(dec_impact, 0);
  // Expected costs: collision * (1 + impact / v_max) + (30 - mean speed)
  // (+2 for a lane change). No front gap remains after passing the obstacle.
  const std::pair<Action, double> expected[] = {
      {Action::kKeep, 1000 * (1 + keep_impact / 30) + 5},
      {Action::kAccelerate, 1000 * (1 + acc_impact / 30) + 3},
      {Action::kLaneChangeLeft, 1000 * (1 + keep_impact / 30) + 7},
      {Action::kLaneChangeRight, 1000 * (1 + keep_impact / 30) + 7},
      {Action::kDecelerate, 1000 * (1 + dec_impact / 30) + 8},
  };
  Action best = Action::kKeep;
  double best_cost = INFINITY;
  for (const auto& [action, cost] : expected) {
    const RolloutResult r = rollout_cost(s, action, 3);
    EXPECT_TRUE(r.collision_predicted);
    EXPECT_NEAR(r.cost, cost, 1e-9) << sim::to_string(action);
    if (cost < best_cost) {
      best_cost = cost;
      best = action;
    }
  }
  EXPECT_EQ(best, Action::kDecelerate);
  EXPECT_EQ(cloud_decide(s).action, Action::kDecelerate);
}

TEST(Cloud, TieBreakOrder) {
  // At the speed limit Keep and Accelerate roll out identically.
  const Decision d = cloud_decide(road(3, 0, 30));
  EXPECT_EQ(d.action, Action::kKeep);
  EXPECT_EQ(d.confidence, 0.0);
}

std::vector<Scene> random_scenes(std::uint64_t seeds, bool obstacles) {
  sim::ScenarioConfig c;
  c.vehicle_count = 10;
  std::vector<Scene> out;
  Rng rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    Scene s = sim::spawn_scenario(c, seed);
    s.ego.speed = 30.0 * u(rng);
    if (obstacles) {
      const int lane = static_cast<int>(u(rng) * s.lane_count);
      s.obstacles.push_back({lane, s.ego.position + 5 + 80 * u(rng),
                             1 + 5 * u(rng), "debris"});
    }
    out.push_back(std::move(s));
  }
  return out;
}

TEST(Property, EdgeNeverPicksAFailedCheck) {
  for (const Scene& s : random_scenes(400, false)) {
    const Decision d = edge_decide(s);
    RuleCheck check;
    switch (d.action) {
      case Action::kAccelerate: check = check_accelerate(s); break;
      case Action::kKeep: check = check_keep(s); break;
      case Action::kLaneChangeLeft:
      case Action::kLaneChangeRight: check = check_lane_change(s, d.action); break;
      case Action::kDecelerate: check = check_decelerate(s); break;
    }
    EXPECT_TRUE(check.safe);
    EXPECT_GE(d.confidence, 0.0);
    EXPECT_LE(d.confidence, 1.0);
    EXPECT_FALSE(d.rationale.empty());
  }
}

TEST(Property, CloudArgminInvariantToConstantShift) {
  for (const Scene& s : random_scenes(200, true)) {
    PolicyParams shifted;
    shifted.cost.speed_reference = 30.0 + 17.0;
    EXPECT_EQ(cloud_decide(s).action, cloud_decide(s, shifted).action);
  }
}

TEST(Property, CloudAvoidsPredictedCollisionWhenPossible) {
  int exercised = 0;
  for (const Scene& s : random_scenes(400, true)) {
    bool any_free = false;
    bool any_collision = false;
    for (Action a : kPlannerOrder) {
      const RolloutResult r = rollout_cost(s, a, 3);
      if (std::isinf(r.cost)) continue;
      any_free |= !r.collision_predicted;
      any_collision |= r.collision_predicted;
    }
    const Decision d = cloud_decide(s);
    if (any_free) {
      EXPECT_FALSE(rollout_cost(s, d.action, 3).collision_predicted);
      exercised += any_collision;
    }
  }
  EXPECT_GT(exercised, 20);
}

TEST(Property, PoliciesArePure) {
  for (const Scene& s : random_scenes(50, true)) {
    EXPECT_EQ(edge_decide(s), edge_decide(s));
    EXPECT_EQ(cloud_decide(s), cloud_decide(s));
  }
}

// Scene generator for the soundness property: no follower closes on the ego
// within the horizon at constant speed. Rear-end threats are outside the
// ego's control and the two models disagree on how followers react.
bool follower_closes(const Scene& s, int horizon) {
  for (const auto& v : s.others) {
    const double behind = s.ego.position - v.position;
    if (behind <= 0) continue;
    const double closing = std::max(0.0, v.speed - s.ego.speed + 2.0);
    if (behind - sim::kVehicleLength <= closing * horizon) return true;
  }
  return false;
}

bool world_collides(const Scene& s, Action first, int horizon) {
  Scene cur = s;
  for (int k = 0; k < horizon; ++k) {
    const Scene next = sim::step(cur, k == 0 ? first : Action::kKeep, 1.0);
    if (sim::swept_collision(cur, next)) return true;
    cur = next;
  }
  return false;
}

// On obstacle-free scenes, whenever the edge choice (then Keep) runs through
// the world without contact, the cloud's model predicts no contact either.
TEST(Property, EdgeIsSoundApproximationOfCloud) {
  int checked = 0;
  for (const Scene& s : random_scenes(1000, false)) {
    if (follower_closes(s, 3)) continue;
    const Decision d = edge_decide(s);
    if (world_collides(s, d.action, 3)) continue;
    ++checked;
    EXPECT_FALSE(rollout_cost(s, d.action, 3).collision_predicted)
        << sim::to_string(d.action) << " ego " << s.ego.speed;
  }
  EXPECT_GT(checked, 200);
}

}  // namespace
