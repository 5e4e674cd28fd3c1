#pragma once

// Local decision policies.
//
// The edge policy is a sequential rule chain over the vehicles around the ego
// (it has no notion of static obstacles). The cloud policy perceives the full
// scene, predicts every entity with a constant-acceleration rollout and picks
// the cheapest legal action.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecdrive/sim.hpp"

namespace ecdrive::policy {

using sim::Action;
using sim::Scene;

enum class Source { kEdge, kCloud, kRemote };

std::string_view to_string(Source source);
std::optional<Source> source_from_string(std::string_view name);

struct Decision {
  Action action = Action::kKeep;
  std::vector<std::string> rationale;
  double confidence = 0.0;
  Source source = Source::kEdge;

  bool operator==(const Decision&) const = default;
};

struct SafetyParams {
  double time_headway = 1.5;  // T_h, seconds
  double min_gap = 5.0;       // g_min, meters
  double edge_kappa = 5.0;    // meters
  double cloud_kappa = 10.0;  // cost units

  bool operator==(const SafetyParams&) const = default;
};

struct CostWeights {
  double collision = 1000.0;
  double speed = 1.0;
  double lane_change = 2.0;
  double headway = 50.0;
  int horizon = 3;
  // Speed the tracking term measures against; defaults to dynamics.v_max.
  std::optional<double> speed_reference;
  // Entities within this distance get a "perceived:" rationale line.
  double perception_range = 150.0;

  bool operator==(const CostWeights&) const = default;
};

struct PolicyParams {
  SafetyParams safety;
  CostWeights cost;
  sim::Dynamics dynamics;

  bool operator==(const PolicyParams&) const = default;
};

/// Margin squash used for both policies: margin / (margin + kappa), with the
/// margin floored at zero.
double squash_confidence(double margin, double kappa);

// ---------------------------------------------------------------------------
// Edge

/// Outcome of one rule of the edge chain.
struct RuleCheck {
  bool safe = false;
  double margin = 0.0;  // meters by which the binding gap constraint holds
  std::string note;     // rationale line
};

RuleCheck check_accelerate(const Scene& scene, const PolicyParams& params = {});
RuleCheck check_keep(const Scene& scene, const PolicyParams& params = {});
RuleCheck check_lane_change(const Scene& scene, Action direction,
                            const PolicyParams& params = {});
RuleCheck check_decelerate(const Scene& scene, const PolicyParams& params = {});

/// Rule chain: accelerate, keep, change left, change right, decelerate. The
/// first safe rule wins; every evaluated rule adds one rationale line.
Decision edge_decide(const Scene& scene, const PolicyParams& params = {});

// ---------------------------------------------------------------------------
// Cloud

struct RolloutResult {
  Action action = Action::kKeep;
  double cost = 0.0;
  double predicted_min_gap = sim::kAbsentGap;
  bool collision_predicted = false;
  // Closing speed at the first predicted contact (0 without collision).
  double impact_speed = 0.0;
  double mean_speed = 0.0;
  double min_headway = 0.0;

  bool operator==(const RolloutResult&) const = default;
};

/// Simulates `horizon` steps with the ego executing `action` and then Keep,
/// others and obstacles under constant acceleration. Cost:
///   collision * [collision] * (1 + impact_speed / v_max)
///   + speed * (speed_reference - mean ego speed)
///   + lane_change * [lane change]
///   + headway * max(0, T_h - min headway) / T_h
/// An illegal action yields an infinite cost. Throws std::invalid_argument
/// when horizon < 1.
RolloutResult rollout_cost(const Scene& scene, Action action, int horizon,
                           const PolicyParams& params = {});

/// Fixed tie-break order of the planner.
inline constexpr Action kPlannerOrder[] = {
    Action::kKeep, Action::kAccelerate, Action::kLaneChangeLeft,
    Action::kLaneChangeRight, Action::kDecelerate};

/// Perceive, predict, plan. Returns the argmin-cost legal action.
Decision cloud_decide(const Scene& scene, const PolicyParams& params = {});

}  // namespace ecdrive::policy
