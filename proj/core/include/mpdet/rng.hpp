#pragma once

#include <cstdint>
#include <random>

namespace mpdet {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; good avalanche, used for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent RNG stream from a base seed and up to three
/// stream indices (e.g. sweep point, trial). Streams are per-task and
/// never shared across threads.
inline Rng make_stream(std::uint64_t seed, std::uint64_t a = 0,
                       std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ mix64(a + 0x1000));
  s = mix64(s ^ mix64(b + 0x2000));
  s = mix64(s ^ mix64(c + 0x3000));
  return Rng(s);
}

}  // namespace mpdet
