#include "ecdrive/codec.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <utility>
#include <vector>

namespace ecdrive::codec {

using sim::Action;
using sim::Scene;

namespace {

std::string format(const char* fmt, double value) {
  char buf[64];
  // +0.0 folds negative zero so "-0.0" never reaches a prompt.
  std::snprintf(buf, sizeof(buf), fmt, value + 0.0);
  return buf;
}

std::string count_word(int n) {
  static constexpr const char* kWords[] = {
      "zero", "one", "two",   "three", "four",  "five",
      "six",  "seven", "eight", "nine",  "ten"};
  if (n >= 0 && n <= 10) return kWords[n];
  return std::to_string(n);
}

std::string ordinal_word(int n) {
  static constexpr const char* kWords[] = {
      "zeroth", "first",   "second", "third", "fourth", "fifth",
      "sixth",  "seventh", "eighth", "ninth", "tenth"};
  if (n >= 0 && n <= 10) return kWords[n];
  const int mod100 = n % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    switch (n % 10) {
      case 1: suffix = "st"; break;
      case 2: suffix = "nd"; break;
      case 3: suffix = "rd"; break;
      default: break;
    }
  }
  return std::to_string(n) + suffix;
}

std::string ego_lane_phrase(int lane, int lane_count) {
  if (lane == 0) return "rightmost";
  if (lane == lane_count - 1) return "leftmost";
  return ordinal_word(lane + 1);
}

std::string relative_lane_phrase(int offset) {
  if (offset == 0) return "same";
  const std::string side = offset > 0 ? "left" : "right";
  const int n = std::abs(offset);
  if (n == 1) return side;
  return ordinal_word(n) + " " + side;
}

}  // namespace

SceneText describe(const Scene& scene) {
  const auto& ego = scene.ego;
  std::string text = "The ego vehicle is traveling in the " +
                     ego_lane_phrase(ego.lane, scene.lane_count) +
                     " lane of a " + count_word(scene.lane_count) +
                     "-lane road at a speed of " + format("%.1f", ego.speed) +
                     " m/s, with an acceleration of " +
                     format("%.1f", ego.accel) +
                     " m/s², and its lane position is " +
                     format("%.2f", ego.position) + " m.";

  std::vector<const sim::VehicleState*> order;
  for (const auto& v : scene.others) order.push_back(&v);
  std::stable_sort(order.begin(), order.end(), [&](auto* a, auto* b) {
    return std::abs(a->position - ego.position) <
           std::abs(b->position - ego.position);
  });
  for (const auto* v : order) {
    const bool ahead = v->position >= ego.position;
    text += " Vehicle " + std::to_string(v->id) + " is in the " +
            relative_lane_phrase(v->lane - ego.lane) + " lane, " +
            (ahead ? "ahead" : "behind") + " by " +
            format("%.2f", v->position) + " m, traveling at a speed of " +
            format("%.1f", v->speed) + " m/s, with an acceleration of " +
            format("%.1f", v->accel) + " m/s².";
  }
  return SceneText{std::move(text)};
}

namespace {

void write_slot(FeatureVector& out, std::size_t base, const sim::Neighbor& n) {
  if (n.present) {
    out[base + feature::kGap] = std::clamp(n.gap, 0.0, sim::kAbsentGap);
    out[base + feature::kRelSpeed] = n.rel_speed;
    out[base + feature::kPresent] = 1.0;
  } else {
    out[base + feature::kGap] = sim::kAbsentGap;
    out[base + feature::kRelSpeed] = 0.0;
    out[base + feature::kPresent] = 0.0;
  }
}

FeatureVector exact_features(const Scene& scene) {
  FeatureVector out{};
  out[feature::kSpeed] = scene.ego.speed;
  out[feature::kAccel] = scene.ego.accel;
  out[feature::kLane] =
      scene.lane_count > 1
          ? static_cast<double>(scene.ego.lane) / (scene.lane_count - 1)
          : 0.0;
  const auto n = sim::nearest_neighbors(scene, sim::Perception::kWithObstacles);
  write_slot(out, feature::kFront, n.front);
  write_slot(out, feature::kRear, n.rear);
  write_slot(out, feature::kFrontLeft, n.front_left);
  write_slot(out, feature::kFrontRight, n.front_right);
  return out;
}

}  // namespace

FeatureVector featurize(const Scene& scene) { return exact_features(scene); }

FeatureVector featurize(const Scene& scene, Rng& rng) {
  FeatureVector out = exact_features(scene);
  if (!(scene.noise_sigma > 0)) return out;
  std::normal_distribution<double> noise(0.0, scene.noise_sigma);
  out[feature::kSpeed] += noise(rng);
  for (std::size_t base : {feature::kFront, feature::kRear,
                           feature::kFrontLeft, feature::kFrontRight}) {
    if (out[base + feature::kPresent] == 0.0) continue;
    out[base + feature::kGap] = std::clamp(
        out[base + feature::kGap] + noise(rng), 0.0, sim::kAbsentGap);
    out[base + feature::kRelSpeed] += noise(rng);
  }
  return out;
}

Action parse_decision(std::string_view response_text) {
  static const std::vector<std::pair<std::string_view, Action>> kLexicon = {
      {"accelerate", Action::kAccelerate},
      {"decelerate", Action::kDecelerate},
      {"slow down", Action::kDecelerate},
      {"brake", Action::kDecelerate},
      {"keep", Action::kKeep},
      {"maintain", Action::kKeep},
      {"change lane to the left", Action::kLaneChangeLeft},
      {"change lanes to the left", Action::kLaneChangeLeft},
      {"left lane change", Action::kLaneChangeLeft},
      {"change lane to the right", Action::kLaneChangeRight},
      {"change lanes to the right", Action::kLaneChangeRight},
      {"right lane change", Action::kLaneChangeRight},
  };

  std::string lowered(response_text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return std::tolower(c); });

  std::size_t best_pos = std::string::npos;
  std::size_t best_len = 0;
  Action best = Action::kKeep;
  for (const auto& [phrase, action] : kLexicon) {
    const std::size_t pos = lowered.rfind(phrase);
    if (pos == std::string::npos) continue;
    // Later start wins; at the same start the longer phrase wins.
    if (best_pos == std::string::npos || pos > best_pos ||
        (pos == best_pos && phrase.size() > best_len)) {
      best_pos = pos;
      best_len = phrase.size();
      best = action;
    }
  }
  if (best_pos == std::string::npos) {
    throw NoDecisionFound("no decision phrase found in model response");
  }
  return best;
}

}  // namespace ecdrive::codec
