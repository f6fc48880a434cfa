#pragma once

#include <cstdint>
#include <random>

namespace dpfda {

// splitmix64 finalizer; good avalanche for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t x) {
  return mix64(h ^ (x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

/// Deterministic stream family rooted at a run seed. Substreams are keyed by
/// integer tags, so independently consumed generators never share state.
struct RngStream {
  std::uint64_t seed = 0;

  RngStream substream(std::uint64_t tag) const {
    return RngStream{hash_combine(seed, tag)};
  }
  RngStream substream(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return substream(tag_a).substream(tag_b);
  }
  RngStream substream(std::uint64_t tag_a, std::uint64_t tag_b,
                      std::uint64_t tag_c) const {
    return substream(tag_a).substream(tag_b).substream(tag_c);
  }

  std::mt19937_64 engine() const { return std::mt19937_64(mix64(seed)); }
};

}  // namespace dpfda
