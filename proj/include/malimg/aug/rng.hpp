#pragma once

#include <cstdint>
#include <random>

namespace malimg::aug {

// Documented seed-split function: derives independent RNG streams from one
// run seed via two SplitMix64 rounds over (seed, stream). Identical
// (seed, stream) pairs always produce the identical stream.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline uint64_t split_seed(uint64_t seed, uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream));
}

inline std::mt19937_64 make_rng(uint64_t seed, uint64_t stream) {
  return std::mt19937_64(split_seed(seed, stream));
}

// Stable stream ids for the harness.
enum Stream : uint64_t {
  kInitStream = 1,
  kShuffleStream = 2,
  kTaStream = 3,
  kMixupStream = 4,
  kSynthStream = 5,
};

}  // namespace malimg::aug
