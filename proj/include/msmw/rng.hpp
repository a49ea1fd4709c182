#pragma once

// Counter-based randomness: every draw is a pure function of
// (seed, stream, counter, lane), so runs replay bit-exactly and seeds can be
// processed in any order or in parallel.

#include <cstdint>

namespace msmw {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named streams keep learner sampling and environment draws independent.
enum class Stream : std::uint64_t {
  ArmSampling = 1,
  Environment = 2,
  Trace = 3,
};

class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, Stream stream) noexcept
      : key_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL))) {}

  constexpr std::uint64_t bits(std::uint64_t counter, std::uint64_t lane = 0) const noexcept {
    return splitmix64(key_ ^ splitmix64(counter * 0x9e3779b97f4a7c15ULL + splitmix64(lane)));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter, std::uint64_t lane = 0) const noexcept {
    return static_cast<double>(bits(counter, lane) >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
};

}  // namespace msmw
