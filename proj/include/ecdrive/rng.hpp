#pragma once

#include <cstdint>
#include <random>

namespace ecdrive {

// All randomness in the system flows through this engine so that a
// (config, seed) pair fully determines an episode.
using Rng = std::mt19937_64;

// Named sub-streams of an episode seed.
enum class Stream : std::uint64_t {
  kSpawn = 1,
  kTraffic = 2,
  kObservation = 3,
  kDetector = 4,
  kBurnIn = 5,
};

// SplitMix64 finalizer over (seed, salt); used to derive independent seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

}  // namespace ecdrive
