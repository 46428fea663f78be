#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "prefkit/hash.hpp"

namespace prefkit {

// Counter-based deterministic RNG (splitmix64). A stream is fully determined
// by its key, so independent streams can be derived per record — e.g. keyed
// by (seed, post_id) — and consumed in any scheduling order with identical
// results across runs and platforms.
class Rng {
 public:
  explicit Rng(uint64_t key) : key_(key) {}

  // Stream derived from a global seed plus a string key.
  static Rng keyed(uint64_t seed, std::string_view key) {
    return Rng(hash_combine(mix64(seed), fnv1a64(key)));
  }

  uint64_t next_u64() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ull); }

  // Unbiased integer in [0, n). Rejection sampling on the top band.
  uint64_t next_below(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t u = next_u64();
      if (u >= threshold) return u % n;
    }
  }

  // Uniform double in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (no cached spare, keeps the stream
  // position a pure function of the draw count).
  double next_gaussian() {
    double u1 = 0.0;
    while (u1 == 0.0) u1 = next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace prefkit
