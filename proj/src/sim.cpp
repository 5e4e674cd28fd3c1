#include "ecdrive/sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace ecdrive::sim {

std::string_view to_string(Action action) {
  switch (action) {
    case Action::kAccelerate:
      return "Accelerate";
    case Action::kDecelerate:
      return "Decelerate";
    case Action::kKeep:
      return "Keep";
    case Action::kLaneChangeLeft:
      return "LaneChangeLeft";
    case Action::kLaneChangeRight:
      return "LaneChangeRight";
  }
  return "Keep";
}

std::optional<Action> action_from_string(std::string_view name) {
  for (Action a : kAllActions) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

std::string_view to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::kNewObstacle:
      return "NewObstacle";
    case DriftKind::kTrafficPatternShift:
      return "TrafficPatternShift";
    case DriftKind::kSensorNoise:
      return "SensorNoise";
  }
  return "NewObstacle";
}

std::optional<DriftKind> drift_kind_from_string(std::string_view name) {
  for (DriftKind k : {DriftKind::kNewObstacle, DriftKind::kTrafficPatternShift,
                      DriftKind::kSensorNoise}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ScenarioError(message);
}

bool finite(double v) { return std::isfinite(v); }

bool gap_ok(const std::vector<VehicleState>& placed, const VehicleState& ego,
            int lane, double position, double min_gap) {
  if (ego.lane == lane && std::abs(ego.position - position) < min_gap) {
    return false;
  }
  for (const auto& v : placed) {
    if (v.lane == lane && std::abs(v.position - position) < min_gap) {
      return false;
    }
  }
  return true;
}

const VehicleState* find_vehicle(const Scene& scene, int id) {
  if (scene.ego.id == id) return &scene.ego;
  for (const auto& v : scene.others) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

}  // namespace

void validate(const ScenarioConfig& c) {
  const auto& d = c.dynamics;
  require(d.dt > 0 && finite(d.dt), "dynamics.dt: must be > 0");
  require(d.v_max > 0 && finite(d.v_max), "dynamics.v_max: must be > 0");
  require(d.accelerate >= 0, "dynamics.accelerate: must be >= 0");
  require(d.decelerate <= 0, "dynamics.decelerate: must be <= 0");
  require(d.reversion >= 0, "dynamics.reversion: must be >= 0");
  require(d.follow_max_decel < 0, "dynamics.follow_max_decel: must be < 0");
  require(d.follow_comfort_decel > 0,
          "dynamics.follow_comfort_decel: must be > 0");
  require(c.lane_count >= 1, "scenario.lane_count: must be >= 1");
  require(c.ego_lane >= 0 && c.ego_lane < c.lane_count,
          "scenario.ego_lane: must be in [0, lane_count)");
  require(c.ego_speed >= 0 && c.ego_speed <= d.v_max,
          "scenario.ego_speed: must be in [0, v_max]");
  require(finite(c.ego_position), "scenario.ego_position: must be finite");
  require(finite(c.ego_accel), "scenario.ego_accel: must be finite");
  require(c.vehicle_count >= 0, "scenario.vehicle_count: must be >= 0");
  require(c.speed_min >= 0, "scenario.speed_min: must be >= 0");
  require(c.speed_min <= c.speed_max,
          "scenario.speed_max: speed range is empty (speed_min > speed_max)");
  require(c.speed_max <= d.v_max, "scenario.speed_max: must be <= v_max");
  require(c.spawn_behind >= 0 && c.spawn_ahead >= 0,
          "scenario.spawn_ahead/spawn_behind: must be >= 0");
  require(c.spawn_behind + c.spawn_ahead > 0 || c.vehicle_count == 0,
          "scenario.spawn_ahead: spawn window is empty");
  require(c.min_spawn_gap >= 0, "scenario.min_spawn_gap: must be >= 0");
  require(c.noise_sigma >= 0, "scenario.noise_sigma: must be >= 0");
  require(c.recycle_behind > 0 && c.recycle_ahead > 0,
          "scenario.recycle_ahead/recycle_behind: must be > 0");
  std::set<int> ids{kEgoId};
  for (const auto& v : c.vehicles) {
    require(ids.insert(v.id).second,
            "scenario.vehicles: duplicate or ego-reserved id " +
                std::to_string(v.id));
    require(v.lane >= 0 && v.lane < c.lane_count,
            "scenario.vehicles: lane out of range for id " +
                std::to_string(v.id));
    require(v.speed >= 0 && v.speed <= d.v_max,
            "scenario.vehicles: speed out of range for id " +
                std::to_string(v.id));
    require(finite(v.position) && finite(v.accel),
            "scenario.vehicles: non-finite state for id " +
                std::to_string(v.id));
  }
}

Scene spawn_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  validate(config);
  Scene scene;
  scene.lane_count = config.lane_count;
  scene.noise_sigma = config.noise_sigma;
  scene.ego = VehicleState{kEgoId,           config.ego_lane,
                           config.ego_position, config.ego_speed,
                           config.ego_accel,    config.ego_speed,
                           config.ego_speed};
  int next_id = 1;
  for (const auto& spec : config.vehicles) {
    scene.others.push_back(VehicleState{spec.id, spec.lane, spec.position,
                                        spec.speed, spec.accel, spec.speed,
                                        spec.speed});
    next_id = std::max(next_id, spec.id + 1);
  }

  Rng rng(derive_seed(seed, Stream::kSpawn));
  std::uniform_int_distribution<int> lane_dist(0, config.lane_count - 1);
  std::uniform_real_distribution<double> pos_dist(-config.spawn_behind,
                                                  config.spawn_ahead);
  std::uniform_real_distribution<double> speed_dist(config.speed_min,
                                                    config.speed_max);
  constexpr int kMaxAttempts = 200;
  for (int i = 0; i < config.vehicle_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const int lane = lane_dist(rng);
      const double position = config.ego_position + pos_dist(rng);
      const double speed = speed_dist(rng);
      if (!gap_ok(scene.others, scene.ego, lane, position,
                  config.min_spawn_gap)) {
        continue;
      }
      scene.others.push_back(
          VehicleState{next_id++, lane, position, speed, 0.0, speed, speed});
      placed = true;
    }
    if (!placed) {
      throw ScenarioError(
          "scenario.vehicle_count: cannot place vehicles with the required "
          "min_spawn_gap inside the spawn window");
    }
  }
  scene.next_id = next_id;
  return scene;
}

bool is_legal(Action action, int lane, int lane_count) {
  if (action == Action::kLaneChangeLeft) return lane + 1 < lane_count;
  if (action == Action::kLaneChangeRight) return lane > 0;
  return true;
}

double action_accel(Action action, const Dynamics& dynamics) {
  switch (action) {
    case Action::kAccelerate:
      return dynamics.accelerate;
    case Action::kDecelerate:
      return dynamics.decelerate;
    default:
      return 0.0;
  }
}

Motion integrate(double speed, double accel, double dt, double v_max) {
  if (accel > 0 && speed < v_max) {
    const double t_hit = (v_max - speed) / accel;
    if (t_hit < dt) {
      return {speed * t_hit + 0.5 * accel * t_hit * t_hit +
                  v_max * (dt - t_hit),
              v_max};
    }
  } else if (accel > 0) {
    return {speed * dt, speed};
  } else if (accel < 0) {
    const double t_stop = speed / -accel;
    if (t_stop < dt) {
      return {speed * t_stop + 0.5 * accel * t_stop * t_stop, 0.0};
    }
  }
  return {speed * dt + 0.5 * accel * dt * dt, speed + accel * dt};
}

namespace {

// Acceleration of a non-ego vehicle given the (post lane change) scene.
double others_accel(const Scene& scene, const VehicleState& v,
                    const Dynamics& d) {
  double a = std::clamp((v.target_speed - v.speed) / d.dt, -d.reversion,
                        d.reversion);
  const VehicleState* leader = nullptr;
  auto consider = [&](const VehicleState& u) {
    if (u.id == v.id || u.lane != v.lane || u.position < v.position) return;
    if (u.position == v.position && u.id < v.id) return;
    if (!leader || u.position < leader->position) leader = &u;
  };
  consider(scene.ego);
  for (const auto& u : scene.others) consider(u);
  if (leader) {
    const double clearance =
        std::max(leader->position - v.position - kVehicleLength, 0.1);
    const double a_max = std::max(d.reversion, 0.1);
    const double desired =
        d.follow_min_clearance +
        std::max(0.0, v.speed * d.follow_time_gap +
                          v.speed * (v.speed - leader->speed) /
                              (2.0 * std::sqrt(a_max * d.follow_comfort_decel)));
    const double ratio = desired / clearance;
    a = std::min(a, a_max * (1.0 - ratio * ratio));
  }
  return std::max(a, d.follow_max_decel);
}

// Moves a vehicle one step. Where the speed clamp binds, the recorded accel
// is the one actually realized over the step, not the commanded one.
void advance(VehicleState& v, double accel, double dt, double v_max) {
  const Motion m = integrate(v.speed, accel, dt, v_max);
  v.accel = m.speed == v.speed + accel * dt ? accel : (m.speed - v.speed) / dt;
  v.position += m.displacement;
  v.speed = m.speed;
}

}  // namespace

Scene step(const Scene& scene, Action action, double dt,
           const Dynamics& dynamics) {
  if (!(dt > 0)) throw std::invalid_argument("step: dt must be > 0");
  if (!is_legal(action, scene.ego.lane, scene.lane_count)) {
    throw IllegalAction("step: " + std::string(to_string(action)) +
                        " is illegal from lane " +
                        std::to_string(scene.ego.lane));
  }
  Dynamics d = dynamics;
  d.dt = dt;

  Scene next = scene;
  if (action == Action::kLaneChangeLeft) ++next.ego.lane;
  if (action == Action::kLaneChangeRight) --next.ego.lane;
  next.ego.accel = action_accel(action, d);

  // Accelerations are decided on the pre-motion state, after the ego's lane
  // change, then everything moves simultaneously.
  std::vector<double> accels;
  accels.reserve(next.others.size());
  for (const auto& v : next.others) accels.push_back(others_accel(next, v, d));

  advance(next.ego, next.ego.accel, dt, d.v_max);
  for (std::size_t i = 0; i < next.others.size(); ++i) {
    advance(next.others[i], accels[i], dt, d.v_max);
  }
  next.time += dt;
  return next;
}

namespace {

bool overlaps_vehicle(double ego_pos, double other_pos) {
  return std::abs(ego_pos - other_pos) < kVehicleLength;
}

bool overlaps_obstacle(double ego_pos, const Obstacle& o) {
  return std::abs(ego_pos - o.position) < 0.5 * (kVehicleLength + o.extent);
}

}  // namespace

bool check_collision(const Scene& scene) {
  const auto& ego = scene.ego;
  for (const auto& v : scene.others) {
    if (v.lane == ego.lane && overlaps_vehicle(ego.position, v.position)) {
      return true;
    }
  }
  for (const auto& o : scene.obstacles) {
    if (o.lane == ego.lane && overlaps_obstacle(ego.position, o)) return true;
  }
  return false;
}

bool swept_collision(const Scene& before, const Scene& after,
                     const Dynamics& dynamics, int substeps) {
  const double dt = after.time - before.time;
  if (!(dt > 0) || substeps < 1) return check_collision(after);
  const int lane = after.ego.lane;

  struct Track {
    double position, speed, accel;
  };
  std::vector<Track> tracks;
  for (const auto& v : after.others) {
    if (v.lane != lane) continue;
    const VehicleState* prev = find_vehicle(before, v.id);
    if (!prev) continue;
    tracks.push_back({prev->position, prev->speed, v.accel});
  }
  std::vector<const Obstacle*> obstacles;
  for (const auto& o : after.obstacles) {
    if (o.lane == lane) obstacles.push_back(&o);
  }

  for (int k = 0; k <= substeps; ++k) {
    const double tau = dt * k / substeps;
    const double ego_pos =
        before.ego.position +
        integrate(before.ego.speed, after.ego.accel, tau, dynamics.v_max)
            .displacement;
    for (const auto& t : tracks) {
      const double pos =
          t.position +
          integrate(t.speed, t.accel, tau, dynamics.v_max).displacement;
      if (overlaps_vehicle(ego_pos, pos)) return true;
    }
    for (const auto* o : obstacles) {
      if (overlaps_obstacle(ego_pos, *o)) return true;
    }
  }
  return check_collision(after);
}

Scene recycle_traffic(const Scene& scene, const ScenarioConfig& config,
                      Rng& rng) {
  if (!config.recycle) return scene;
  Scene next = scene;
  const double ego_pos = next.ego.position;
  std::uniform_int_distribution<int> lane_dist(0, next.lane_count - 1);
  std::uniform_real_distribution<double> ahead_dist(0.6 * config.recycle_ahead,
                                                    config.recycle_ahead);
  std::uniform_real_distribution<double> behind_dist(
      0.6 * config.recycle_behind, config.recycle_behind);
  std::uniform_real_distribution<double> speed_dist(config.speed_min,
                                                    config.speed_max);
  constexpr int kMaxAttempts = 20;
  for (std::size_t i = 0; i < next.others.size(); ++i) {
    const VehicleState& v = next.others[i];
    const bool fell_behind = v.position < ego_pos - config.recycle_behind;
    const bool ran_ahead = v.position > ego_pos + config.recycle_ahead;
    if (!fell_behind && !ran_ahead) continue;
    std::vector<VehicleState> rest;
    for (std::size_t j = 0; j < next.others.size(); ++j) {
      if (j != i) rest.push_back(next.others[j]);
    }
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      const int lane = lane_dist(rng);
      const double position = fell_behind ? ego_pos + ahead_dist(rng)
                                          : ego_pos - behind_dist(rng);
      const double speed = speed_dist(rng);
      if (!gap_ok(rest, next.ego, lane, position, config.min_spawn_gap)) {
        continue;
      }
      next.others[i] = VehicleState{next.next_id++, lane,  position, speed,
                                    0.0,            speed, speed};
      break;
    }
  }
  return next;
}

// ---------------------------------------------------------------------------

void validate(const DriftInjection& inj, int lane_count) {
  const std::string kind(to_string(inj.kind));
  require(inj.start_step >= 0, kind + ".start_step: must be >= 0");
  require(inj.start_step < inj.end_step,
          kind + ".end_step: start_step must be < end_step");
  switch (inj.kind) {
    case DriftKind::kNewObstacle:
      require(inj.lane >= -1 && inj.lane < lane_count,
              kind + ".lane: must be -1 (ego lane) or in [0, lane_count)");
      require(inj.ahead_m > 0 && inj.ahead_m <= 5000,
              kind + ".ahead_m: must be in (0, 5000]");
      require(inj.extent_m > 0 && inj.extent_m <= 100,
              kind + ".extent_m: must be in (0, 100]");
      break;
    case DriftKind::kTrafficPatternShift:
      require(inj.speed_offset >= -30 && inj.speed_offset <= 30,
              kind + ".speed_offset: must be in [-30, 30]");
      break;
    case DriftKind::kSensorNoise:
      require(inj.sigma >= 0 && inj.sigma <= 50,
              kind + ".sigma: must be in [0, 50]");
      break;
  }
}

std::string obstacle_tag(const DriftInjection& injection) {
  return "injected:" + std::to_string(injection.start_step) + "-" +
         std::to_string(injection.end_step);
}

Scene inject_drift(const Scene& scene, const DriftInjection& injection,
                   int step_index) {
  if (!injection.active(step_index)) return scene;
  Scene next = scene;
  switch (injection.kind) {
    case DriftKind::kNewObstacle: {
      const std::string tag = obstacle_tag(injection);
      const bool present =
          std::any_of(next.obstacles.begin(), next.obstacles.end(),
                      [&](const Obstacle& o) { return o.kind == tag; });
      if (!present) {
        const int lane = injection.lane < 0 ? next.ego.lane : injection.lane;
        next.obstacles.push_back(Obstacle{
            lane, next.ego.position + injection.ahead_m, injection.extent_m,
            tag});
      }
      break;
    }
    case DriftKind::kTrafficPatternShift:
      for (auto& v : next.others) {
        v.target_speed = v.cruise_speed + injection.speed_offset;
      }
      break;
    case DriftKind::kSensorNoise:
      next.noise_sigma = injection.sigma;
      break;
  }
  return next;
}

Scene clear_transients(const Scene& scene,
                       const std::vector<DriftInjection>& injections,
                       int step_index, double baseline_noise) {
  Scene next = scene;
  next.noise_sigma = baseline_noise;
  for (auto& v : next.others) v.target_speed = v.cruise_speed;
  for (const auto& inj : injections) {
    if (inj.kind != DriftKind::kNewObstacle || step_index < inj.end_step) {
      continue;
    }
    const std::string tag = obstacle_tag(inj);
    std::erase_if(next.obstacles,
                  [&](const Obstacle& o) { return o.kind == tag; });
  }
  return next;
}

// ---------------------------------------------------------------------------

namespace {

void offer(Neighbor& slot, double gap, double rel_speed, double accel) {
  if (!slot.present || gap < slot.gap) {
    slot = Neighbor{true, gap, rel_speed, accel};
  }
}

}  // namespace

LaneNeighbors lane_neighbors(const Scene& scene, int lane,
                             Perception perception) {
  LaneNeighbors out;
  const auto& ego = scene.ego;
  for (const auto& v : scene.others) {
    if (v.lane != lane) continue;
    const double delta = v.position - ego.position;
    if (delta >= 0) {
      offer(out.front, delta, v.speed - ego.speed, v.accel);
    } else {
      offer(out.rear, -delta, v.speed - ego.speed, v.accel);
    }
  }
  if (perception == Perception::kWithObstacles) {
    for (const auto& o : scene.obstacles) {
      if (o.lane != lane) continue;
      const double delta = o.position - ego.position;
      if (delta >= 0) offer(out.front, delta, -ego.speed, 0.0);
    }
  }
  return out;
}

NeighborSet nearest_neighbors(const Scene& scene, Perception perception) {
  NeighborSet out;
  const int lane = scene.ego.lane;
  const LaneNeighbors same = lane_neighbors(scene, lane, perception);
  out.front = same.front;
  out.rear = same.rear;
  if (lane + 1 < scene.lane_count) {
    out.front_left =
        lane_neighbors(scene, lane + 1, Perception::kVehiclesOnly).front;
  }
  if (lane > 0) {
    out.front_right =
        lane_neighbors(scene, lane - 1, Perception::kVehiclesOnly).front;
  }
  return out;
}

}  // namespace ecdrive::sim
