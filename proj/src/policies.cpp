#include "ecdrive/policies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ecdrive::policy {

using sim::kAbsentGap;
using sim::Neighbor;

std::string_view to_string(Source source) {
  switch (source) {
    case Source::kEdge:
      return "Edge";
    case Source::kCloud:
      return "Cloud";
    case Source::kRemote:
      return "Remote";
  }
  return "Edge";
}

std::optional<Source> source_from_string(std::string_view name) {
  for (Source s : {Source::kEdge, Source::kCloud, Source::kRemote}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

double squash_confidence(double margin, double kappa) {
  if (!(margin > 0)) return 0.0;
  if (std::isinf(margin)) return 1.0;
  return margin / (margin + kappa);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(const char* pattern, double a) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a + 0.0);
  return buf;
}

std::string verdict(bool safe) { return safe ? "safe" : "unsafe"; }

std::string gap_text(const Neighbor& n) {
  return n.present ? fmt("%.2f m", n.gap) : std::string("clear");
}

double headway(double gap, double speed) {
  return speed > 0 ? gap / speed : kInf;
}

// Margin credited to a constraint against a missing neighbor: the absent-slot
// sentinel minus the clearance it would have to respect.
double absent_margin(const PolicyParams& p) {
  return kAbsentGap - p.safety.min_gap;
}

}  // namespace

RuleCheck check_accelerate(const Scene& scene, const PolicyParams& p) {
  const auto& ego = scene.ego;
  const Neighbor front = sim::lane_neighbors(scene, ego.lane).front;
  if (!front.present) {
    return {true, absent_margin(p),
            "Check accelerate: no vehicle ahead in the current lane -> safe."};
  }
  const auto& d = p.dynamics;
  const sim::Motion m = sim::integrate(ego.speed, d.accelerate, d.dt, d.v_max);
  const double front_speed = std::max(0.0, ego.speed + front.rel_speed);
  const double gap_after = front.gap + front_speed * d.dt - m.displacement;
  const double required = p.safety.time_headway * m.speed;
  const bool safe = gap_after >= required && front.gap >= p.safety.min_gap;
  const double margin =
      std::min(gap_after - required, front.gap - p.safety.min_gap);
  std::string note = "Check accelerate: front gap " + fmt("%.2f m", front.gap) +
                     ", headway after accelerating " +
                     fmt("%.2f s", headway(gap_after, m.speed)) + " (need " +
                     fmt("%.2f s", p.safety.time_headway) + ") -> " +
                     verdict(safe) + ".";
  return {safe, margin, std::move(note)};
}

RuleCheck check_keep(const Scene& scene, const PolicyParams& p) {
  const auto& ego = scene.ego;
  const Neighbor front = sim::lane_neighbors(scene, ego.lane).front;
  if (!front.present) {
    return {true, absent_margin(p),
            "Check keep speed: no vehicle ahead in the current lane -> safe."};
  }
  const double required = p.safety.time_headway * ego.speed;
  const bool safe = front.gap >= required && front.gap >= p.safety.min_gap;
  const double margin =
      std::min(front.gap - required, front.gap - p.safety.min_gap);
  std::string note = "Check keep speed: front gap " + fmt("%.2f m", front.gap) +
                     ", current headway " +
                     fmt("%.2f s", headway(front.gap, ego.speed)) + " (need " +
                     fmt("%.2f s", p.safety.time_headway) + ") -> " +
                     verdict(safe) + ".";
  return {safe, margin, std::move(note)};
}

RuleCheck check_lane_change(const Scene& scene, Action direction,
                            const PolicyParams& p) {
  const bool left = direction == Action::kLaneChangeLeft;
  const std::string name =
      left ? "Check lane change left: " : "Check lane change right: ";
  const auto& ego = scene.ego;
  if (!sim::is_legal(direction, ego.lane, scene.lane_count)) {
    return {false, 0.0,
            name + "no lane on the " + (left ? "left" : "right") +
                " -> unavailable."};
  }
  const int target = ego.lane + (left ? 1 : -1);
  const sim::LaneNeighbors n = sim::lane_neighbors(scene, target);
  const double front_required =
      p.safety.min_gap + p.safety.time_headway * ego.speed;
  const double rear_required = p.safety.min_gap;
  const double front_margin =
      n.front.present ? n.front.gap - front_required : absent_margin(p);
  const double rear_margin =
      n.rear.present ? n.rear.gap - rear_required : absent_margin(p);
  const bool safe = front_margin >= 0 && rear_margin >= 0;
  std::string note = name + "target front gap " + gap_text(n.front) +
                     " (need " + fmt("%.2f m", front_required) +
                     "), target rear gap " + gap_text(n.rear) + " (need " +
                     fmt("%.2f m", rear_required) + ") -> " + verdict(safe) +
                     ".";
  return {safe, std::min(front_margin, rear_margin), std::move(note)};
}

RuleCheck check_decelerate(const Scene& scene, const PolicyParams& p) {
  const Neighbor front = sim::lane_neighbors(scene, scene.ego.lane).front;
  if (!front.present) {
    return {true, absent_margin(p),
            "Decelerate: no safe alternative, braking."};
  }
  return {true, std::max(0.0, front.gap - p.safety.min_gap),
          "Decelerate: no safe alternative, braking with front gap " +
              fmt("%.2f m", front.gap) + "."};
}

Decision edge_decide(const Scene& scene, const PolicyParams& params) {
  Decision decision;
  decision.source = Source::kEdge;
  auto accept = [&](Action action, const RuleCheck& check) {
    decision.action = action;
    decision.confidence =
        squash_confidence(check.margin, params.safety.edge_kappa);
  };

  const RuleCheck acc = check_accelerate(scene, params);
  decision.rationale.push_back(acc.note);
  if (acc.safe) {
    accept(Action::kAccelerate, acc);
    return decision;
  }
  const RuleCheck keep = check_keep(scene, params);
  decision.rationale.push_back(keep.note);
  if (keep.safe) {
    accept(Action::kKeep, keep);
    return decision;
  }
  for (Action dir : {Action::kLaneChangeLeft, Action::kLaneChangeRight}) {
    const RuleCheck lc = check_lane_change(scene, dir, params);
    decision.rationale.push_back(lc.note);
    if (lc.safe) {
      accept(dir, lc);
      return decision;
    }
  }
  const RuleCheck dec = check_decelerate(scene, params);
  decision.rationale.push_back(dec.note);
  accept(Action::kDecelerate, dec);
  return decision;
}

// ---------------------------------------------------------------------------

namespace {

struct Entity {
  bool is_obstacle;
  double position;
  double speed;
  double accel;
  double half_length;  // half of the entity's own longitudinal length
};

std::vector<Entity> lane_entities(const Scene& scene, int lane) {
  std::vector<Entity> out;
  for (const auto& v : scene.others) {
    if (v.lane == lane) {
      out.push_back({false, v.position, v.speed, v.accel,
                     0.5 * sim::kVehicleLength});
    }
  }
  for (const auto& o : scene.obstacles) {
    if (o.lane == lane) out.push_back({true, o.position, 0.0, 0.0, 0.5 * o.extent});
  }
  return out;
}

struct EntityState {
  double position;
  double speed;
};

EntityState predict_entity(const Entity& e, double t, double v_max) {
  if (e.is_obstacle) return {e.position, 0.0};
  const sim::Motion m = sim::integrate(e.speed, e.accel, t, v_max);
  return {e.position + m.displacement, m.speed};
}

}  // namespace

RolloutResult rollout_cost(const Scene& scene, Action action, int horizon,
                           const PolicyParams& params) {
  if (horizon < 1) {
    throw std::invalid_argument("rollout_cost: horizon must be >= 1");
  }
  RolloutResult result;
  result.action = action;
  const auto& ego0 = scene.ego;
  if (!sim::is_legal(action, ego0.lane, scene.lane_count)) {
    result.cost = kInf;
    result.predicted_min_gap = 0.0;
    return result;
  }

  const auto& d = params.dynamics;
  const auto& w = params.cost;
  const auto& s = params.safety;
  int lane = ego0.lane;
  if (action == Action::kLaneChangeLeft) ++lane;
  if (action == Action::kLaneChangeRight) --lane;
  const std::vector<Entity> entities = lane_entities(scene, lane);

  constexpr int kSubsteps = 20;
  const double half_ego = 0.5 * sim::kVehicleLength;
  double ego_pos = ego0.position;
  double ego_speed = ego0.speed;
  double speed_sum = 0.0;
  double min_gap = kAbsentGap;
  double min_headway = kInf;

  for (int k = 0; k < horizon; ++k) {
    const double accel = k == 0 ? sim::action_accel(action, d) : 0.0;
    const double t0 = k * d.dt;
    for (int sub = 0; sub <= kSubsteps && !result.collision_predicted; ++sub) {
      const double tau = d.dt * sub / kSubsteps;
      const sim::Motion em = sim::integrate(ego_speed, accel, tau, d.v_max);
      const double ep = ego_pos + em.displacement;
      for (const auto& e : entities) {
        const EntityState es = predict_entity(e, t0 + tau, d.v_max);
        if (std::abs(ep - es.position) < half_ego + e.half_length) {
          result.collision_predicted = true;
          result.impact_speed = std::abs(em.speed - es.speed);
          break;
        }
      }
    }
    const sim::Motion step = sim::integrate(ego_speed, accel, d.dt, d.v_max);
    ego_pos += step.displacement;
    ego_speed = step.speed;
    speed_sum += ego_speed;

    const double t1 = (k + 1) * d.dt;
    double front_gap = kInf;
    for (const auto& e : entities) {
      const double gap = predict_entity(e, t1, d.v_max).position - ego_pos;
      if (gap >= 0) front_gap = std::min(front_gap, gap);
    }
    if (std::isfinite(front_gap)) {
      min_gap = std::min(min_gap, front_gap);
      min_headway = std::min(min_headway, headway(front_gap, ego_speed));
    }
  }

  result.mean_speed = speed_sum / horizon;
  result.predicted_min_gap = min_gap;
  result.min_headway = min_headway;
  const double reference = w.speed_reference.value_or(d.v_max);
  const bool lane_change =
      action == Action::kLaneChangeLeft || action == Action::kLaneChangeRight;
  double cost = w.speed * (reference - result.mean_speed);
  if (lane_change) cost += w.lane_change;
  if (std::isfinite(min_headway)) {
    cost += w.headway * std::max(0.0, s.time_headway - min_headway) /
            s.time_headway;
  }
  if (result.collision_predicted) {
    cost += w.collision * (1.0 + result.impact_speed / d.v_max);
  }
  result.cost = cost;
  return result;
}

Decision cloud_decide(const Scene& scene, const PolicyParams& params) {
  Decision decision;
  decision.source = Source::kCloud;
  const auto& ego = scene.ego;

  // Perception: the full scene, obstacles included.
  for (const auto& o : scene.obstacles) {
    decision.rationale.push_back(
        "perceived: obstacle '" + o.kind + "' in lane " +
        std::to_string(o.lane) + " at " +
        fmt("%+.2f m", o.position - ego.position) + ", length " +
        fmt("%.1f m", o.extent));
  }
  for (const auto& v : scene.others) {
    const double rel = v.position - ego.position;
    if (std::abs(rel) > params.cost.perception_range) continue;
    decision.rationale.push_back(
        "perceived: vehicle " + std::to_string(v.id) + " in lane " +
        std::to_string(v.lane) + " at " + fmt("%+.2f m", rel) + ", speed " +
        fmt("%.1f m/s", v.speed) + ", accel " + fmt("%.1f m/s²", v.accel));
  }

  // Prediction and planning.
  const RolloutResult* best = nullptr;
  const RolloutResult* second = nullptr;
  std::vector<RolloutResult> results;
  results.reserve(std::size(kPlannerOrder));
  for (Action a : kPlannerOrder) {
    results.push_back(rollout_cost(scene, a, params.cost.horizon, params));
  }
  for (const auto& r : results) {
    if (!std::isfinite(r.cost)) continue;
    decision.rationale.push_back(
        "predicted: " + std::string(sim::to_string(r.action)) + " cost " +
        fmt("%.3f", r.cost) + ", min gap " +
        fmt("%.2f m", r.predicted_min_gap) +
        (r.collision_predicted ? ", collision" : ", no collision"));
    if (!best || r.cost < best->cost) {
      second = best;
      best = &r;
    } else if (!second || r.cost < second->cost) {
      second = &r;
    }
  }

  decision.action = best->action;
  const double margin = second ? second->cost - best->cost : kInf;
  decision.confidence = squash_confidence(margin, params.safety.cloud_kappa);
  decision.rationale.push_back(
      "planned: " + std::string(sim::to_string(best->action)) +
      (second ? ", ahead of " + std::string(sim::to_string(second->action)) +
                    " by " + fmt("%.3f", margin)
              : std::string()));
  return decision;
}

}  // namespace ecdrive::policy
