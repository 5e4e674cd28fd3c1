#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ecdrive/rng.hpp"
#include "ecdrive/sim.hpp"

namespace ecdrive::codec {

inline constexpr std::size_t kFeatureDim = 15;

// Layout:
//   [0] ego speed  [1] ego accel  [2] ego lane / (lane_count - 1)
//   then for front, rear, front-left, front-right:
//   gap in [0, 200] (absent -> 200), relative speed (absent -> 0), present 0/1
using FeatureVector = std::array<double, kFeatureDim>;

namespace feature {
inline constexpr std::size_t kSpeed = 0;
inline constexpr std::size_t kAccel = 1;
inline constexpr std::size_t kLane = 2;
inline constexpr std::size_t kFront = 3;
inline constexpr std::size_t kRear = 6;
inline constexpr std::size_t kFrontLeft = 9;
inline constexpr std::size_t kFrontRight = 12;
// Offsets within a neighbor slot.
inline constexpr std::size_t kGap = 0;
inline constexpr std::size_t kRelSpeed = 1;
inline constexpr std::size_t kPresent = 2;
}  // namespace feature

struct SceneText {
  std::string text;
};

// Renders the fixed prompt template: one ego sentence followed by one sentence
// per other vehicle, ordered by ascending distance to the ego.
SceneText describe(const sim::Scene& scene);

// Numeric summary of the scene. Obstacles appear in the front-same-lane slot
// (they are part of the sensed data even though the edge policy does not
// reason about them). Observed speeds and present-slot gaps/relative speeds
// carry N(0, noise_sigma) noise drawn from `rng`; nothing is drawn when
// noise_sigma is 0.
FeatureVector featurize(const sim::Scene& scene, Rng& rng);

// Noise-free featurization.
FeatureVector featurize(const sim::Scene& scene);

class NoDecisionFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Case-insensitive scan for the last decision phrase in a free-text model
// reply. Lexicon:
//   accelerate                                   -> Accelerate
//   decelerate | slow down | brake               -> Decelerate
//   keep | maintain                              -> Keep
//   change lane(s) to the left | left lane change   -> LaneChangeLeft
//   change lane(s) to the right | right lane change -> LaneChangeRight
// Throws NoDecisionFound when nothing matches.
sim::Action parse_decision(std::string_view response_text);

}  // namespace ecdrive::codec
