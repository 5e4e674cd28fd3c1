#pragma once

// Seeded kinematic highway simulator.
//
// The road is an infinite straight multi-lane segment. Lane 0 is the
// rightmost lane; lane indices grow to the left. Positions are longitudinal
// stations in meters. A Scene is a plain value: every operation returns a new
// Scene and never mutates its input.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ecdrive/rng.hpp"

namespace ecdrive::sim {

inline constexpr double kVehicleLength = 5.0;
inline constexpr int kEgoId = 0;

struct Dynamics {
  double dt = 1.0;
  double v_max = 30.0;
  double accelerate = 2.0;   // m/s^2 applied by Action::kAccelerate
  double decelerate = -3.0;  // m/s^2 applied by Action::kDecelerate
  double reversion = 1.0;    // |accel| bound when others relax to target speed
  // Car-following of non-ego vehicles (kept behind their leader, ego included).
  double follow_time_gap = 1.0;
  double follow_min_clearance = 2.0;
  double follow_comfort_decel = 2.0;
  double follow_max_decel = -8.0;

  bool operator==(const Dynamics&) const = default;
};

enum class Action {
  kAccelerate,
  kDecelerate,
  kKeep,
  kLaneChangeLeft,
  kLaneChangeRight,
};

inline constexpr Action kAllActions[] = {
    Action::kAccelerate, Action::kDecelerate, Action::kKeep,
    Action::kLaneChangeLeft, Action::kLaneChangeRight};

std::string_view to_string(Action action);
std::optional<Action> action_from_string(std::string_view name);

struct VehicleState {
  int id = 0;
  int lane = 0;
  double position = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  // Speed the vehicle relaxes toward, and the undisturbed value it returns to
  // when no traffic-pattern shift is active. Unused for the ego vehicle.
  double target_speed = 0.0;
  double cruise_speed = 0.0;

  bool operator==(const VehicleState&) const = default;
};

struct Obstacle {
  int lane = 0;
  double position = 0.0;  // center of the obstacle
  double extent = 1.0;    // longitudinal length in meters
  std::string kind;

  bool operator==(const Obstacle&) const = default;
};

struct Scene {
  double time = 0.0;
  int lane_count = 1;
  VehicleState ego;
  std::vector<VehicleState> others;
  std::vector<Obstacle> obstacles;
  double noise_sigma = 0.0;
  int next_id = 1;

  bool operator==(const Scene&) const = default;
};

// Explicitly placed vehicle in a scenario.
struct VehicleSpec {
  int id = 0;
  int lane = 0;
  double position = 0.0;
  double speed = 0.0;
  double accel = 0.0;

  bool operator==(const VehicleSpec&) const = default;
};

struct ScenarioConfig {
  std::string name = "highway";
  int lane_count = 4;
  int ego_lane = 0;
  double ego_speed = 25.0;
  double ego_position = 0.0;
  double ego_accel = 0.0;
  // Randomly placed vehicles, in addition to the explicit `vehicles`.
  int vehicle_count = 6;
  double speed_min = 20.0;
  double speed_max = 28.0;
  double spawn_behind = 100.0;
  double spawn_ahead = 200.0;
  double min_spawn_gap = 10.0;
  // Baseline observation noise (m/s) when no SensorNoise drift is active.
  double noise_sigma = 0.0;
  // Vehicles that leave [ego - recycle_behind, ego + recycle_ahead] are
  // respawned on the opposite side, keeping traffic density stationary.
  bool recycle = true;
  double recycle_behind = 150.0;
  double recycle_ahead = 250.0;
  std::vector<VehicleSpec> vehicles;
  Dynamics dynamics;

  bool operator==(const ScenarioConfig&) const = default;
};

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IllegalAction : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Throws ScenarioError naming the offending field.
void validate(const ScenarioConfig& config);

Scene spawn_scenario(const ScenarioConfig& config, std::uint64_t seed);

bool is_legal(Action action, int lane, int lane_count);
double action_accel(Action action, const Dynamics& dynamics);

// Exact integration of constant acceleration with the speed clamped to
// [0, v_max]. Returns the displacement and the final speed.
struct Motion {
  double displacement;
  double speed;
};
Motion integrate(double speed, double accel, double dt, double v_max);

// Advances the world by dt. Lane changes complete instantly at the start of
// the step and preserve speed. Throws IllegalAction for a lane change off the
// road.
Scene step(const Scene& scene, Action action, double dt,
           const Dynamics& dynamics = {});

// Instantaneous overlap test between ego and same-lane vehicles/obstacles.
bool check_collision(const Scene& scene);

// Overlap test over the whole transition `before` -> `after` (as produced by
// step), sampled along the exact trajectories so fast passes are not missed.
bool swept_collision(const Scene& before, const Scene& after,
                     const Dynamics& dynamics = {}, int substeps = 20);

// Respawns vehicles that drifted out of the traffic window around the ego.
Scene recycle_traffic(const Scene& scene, const ScenarioConfig& config,
                      Rng& rng);

// ---------------------------------------------------------------------------
// Drift injections

enum class DriftKind { kNewObstacle, kTrafficPatternShift, kSensorNoise };

std::string_view to_string(DriftKind kind);
std::optional<DriftKind> drift_kind_from_string(std::string_view name);

struct DriftInjection {
  DriftKind kind = DriftKind::kNewObstacle;
  int start_step = 0;
  int end_step = 1;
  // NewObstacle: lane (-1 = ego lane at appearance), distance ahead of the ego
  // when it first appears, and its length.
  int lane = -1;
  double ahead_m = 150.0;
  double extent_m = 4.0;
  // TrafficPatternShift: offset added to every non-ego target speed.
  double speed_offset = 0.0;
  // SensorNoise: observation noise sigma.
  double sigma = 0.0;

  bool operator==(const DriftInjection&) const = default;

  bool active(int step_index) const {
    return step_index >= start_step && step_index < end_step;
  }
};

// Documented parameter ranges:
//   start_step >= 0, start_step < end_step
//   lane in [-1, lane_count), ahead_m in (0, 5000], extent_m in (0, 100]
//   speed_offset in [-30, 30], sigma in [0, 50]
void validate(const DriftInjection& injection, int lane_count);

// Tag stored in Obstacle::kind for obstacles created by `injection`.
std::string obstacle_tag(const DriftInjection& injection);

// Identity outside [start_step, end_step). Inside: NewObstacle places its
// obstacle once (idempotent); TrafficPatternShift sets each other vehicle's
// target speed to cruise + offset; SensorNoise sets scene.noise_sigma.
Scene inject_drift(const Scene& scene, const DriftInjection& injection,
                   int step_index);

// Restores the level-type drift state (noise, target speeds) to baseline so
// that injections can be re-applied each step, and removes obstacles whose
// injection window has ended.
Scene clear_transients(const Scene& scene,
                       const std::vector<DriftInjection>& injections,
                       int step_index, double baseline_noise);

// ---------------------------------------------------------------------------
// Neighbors

inline constexpr double kAbsentGap = 200.0;

struct Neighbor {
  bool present = false;
  double gap = kAbsentGap;  // position-to-position, >= 0
  double rel_speed = 0.0;   // neighbor speed - ego speed
  double accel = 0.0;

  bool operator==(const Neighbor&) const = default;
};

struct NeighborSet {
  Neighbor front;
  Neighbor rear;
  Neighbor front_left;
  Neighbor front_right;

  bool operator==(const NeighborSet&) const = default;
};

enum class Perception {
  kVehiclesOnly,   // what the edge policy sees
  kWithObstacles,  // obstacles compete for the front-same-lane slot
};

// Four canonical slots around the ego. Entities at the ego's exact position
// count as ahead.
NeighborSet nearest_neighbors(const Scene& scene,
                              Perception perception = Perception::kVehiclesOnly);

struct LaneNeighbors {
  Neighbor front;
  Neighbor rear;
};

// Nearest vehicles ahead of and behind the ego in an arbitrary lane.
LaneNeighbors lane_neighbors(const Scene& scene, int lane,
                             Perception perception = Perception::kVehiclesOnly);

}  // namespace ecdrive::sim
