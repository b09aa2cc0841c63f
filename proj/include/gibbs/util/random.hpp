#pragma once

#include <cstdint>

#include "gibbs/core/contracts.hpp"

namespace gibbs::util {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for (master seed, stream index, phase). Streams for
/// different particles or phases never share state, so the result of a
/// parallel loop does not depend on scheduling.
inline Rng stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t phase) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(phase + 0x2545f4914f6cdd1dULL));
  return Rng(h);
}

}  // namespace gibbs::util
