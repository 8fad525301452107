#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "rulsif/types.hpp"

namespace rulsif {

// Splittable seeding: every trial/permutation/fold derives its own stream
// from (master seed, stream index), so parallel schedules cannot change
// results.

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(master + 0x9E3779B97F4A7C15ull * (stream + 1));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

inline std::vector<Index> shuffled_indices(Index count, std::mt19937_64& engine) {
  std::vector<Index> idx(static_cast<std::size_t>(count));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), engine);
  return idx;
}

}  // namespace rulsif
