#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace fedrep {

/// The one generator type used everywhere. All randomness in the library is
/// drawn from instances of this engine seeded through derive_seed().
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent sub-seed from a parent seed and a counter path,
/// e.g. derive_seed(master, kTrainStream, round, client).
template <typename... Counters>
constexpr std::uint64_t derive_seed(std::uint64_t parent, Counters... counters) noexcept {
  std::uint64_t s = mix64(parent);
  ((s = mix64(s ^ mix64(static_cast<std::uint64_t>(counters) + 0x632be59bd9b4e019ULL))), ...);
  return s;
}

/// Uniform integer in [0, bound). bound must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  // Rejection keeps the draw unbiased and independent of the standard
  // library's distribution implementation.
  const std::uint64_t limit = Rng::max() - (Rng::max() % bound);
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % bound;
}

/// Uniform real in [0, 1) with 53 bits of precision.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// In-place Fisher–Yates shuffle.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

// Stream tags for derive_seed so unrelated consumers never share a sequence.
enum class Stream : std::uint64_t {
  kData = 1,
  kSplit = 2,
  kPartition = 3,
  kInit = 4,
  kTrain = 5,
  kAttackers = 6,
  kPoison = 7,
};

}  // namespace fedrep
