#pragma once

// Counter-based random streams.
//
// Every random number is a pure function of (seed, purpose, index, counter):
//
//   key(seed, purpose) = mix(seed ^ mix(fnv1a(purpose)))
//   sub(key, index)    = mix(key ^ mix(index + 0x632BE59BD9B4E019))
//   word(key, counter) = mix(key + (counter + 1) * 0x9E3779B97F4A7C15)
//
// where mix is the SplitMix64 finalizer. Doubles take the top 53 bits.
// Results do not depend on thread count or evaluation order.

#include <cstdint>
#include <string_view>

namespace impulse {

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

class RandomStream {
 public:
  constexpr RandomStream(std::uint64_t seed, std::string_view purpose)
      : key_(mix64(seed ^ mix64(fnv1a(purpose)))) {}

  /// Independent stream for item `index` (sample, restart, pair, ...).
  constexpr RandomStream substream(std::uint64_t index) const {
    return RandomStream(mix64(key_ ^ mix64(index + 0x632BE59BD9B4E019ULL)), Raw{});
  }

  constexpr std::uint64_t next_u64() { return mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform in [0, 1).
  constexpr double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

 private:
  struct Raw {};
  constexpr RandomStream(std::uint64_t key, Raw) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace impulse
