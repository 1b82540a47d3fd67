#pragma once

#include <cstdint>
#include <random>

namespace iwz {

using Rng = std::mt19937_64;

/// Stream tags keep the generators of different consumers apart under one
/// master seed.
enum class StreamTag : std::uint32_t {
  SolverInit = 1,
  Gaussian = 2,
  BoundTrial = 3,
  CodecTrial = 4,
};

/// Independent generator for sub-stream `index` of `tag` under `seed`.
inline Rng substream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace iwz
