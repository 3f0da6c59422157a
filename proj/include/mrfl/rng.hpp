#pragma once

#include <cstdint>
#include <random>

namespace mrfl {

// All randomness flows from one 64-bit seed. Each pipeline stage draws from
// its own stream, and parallel work (trials, chains) gets a counter on top of
// that, so stages can be re-run independently and still reproduce.
enum class Stream : std::uint64_t {
  kSample = 1,
  kGibbs = 2,
  kErase = 3,
  kGenerate = 4,
  kGame = 5,
  kQuery = 6,
  kTrial = 7,
};

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                    std::uint64_t counter = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))) +
                    counter);
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t counter = 0) {
  return Rng(derive_seed(seed, stream, counter));
}

// Uniform double in [0, 1) from the top 53 bits. Used instead of
// std::uniform_real_distribution, whose output is library-specific.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const auto i = static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

}  // namespace mrfl
