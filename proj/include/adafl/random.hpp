#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace adafl {

using Rng = std::mt19937_64;

/// Builds an independent generator from a base seed plus stream tags
/// (round, client id, purpose). Identical inputs give identical streams.
inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * tags.size());
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto t : tags) push(t);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Stream tags used across the library so streams never collide.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSelection = 2;
inline constexpr std::uint64_t kLocal = 3;
inline constexpr std::uint64_t kData = 4;
inline constexpr std::uint64_t kPartition = 5;
}  // namespace stream

}  // namespace adafl
