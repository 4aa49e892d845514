#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "foggy/error.hpp"

namespace foggy {

/// Deterministic random source. Identical (seed, stream) pairs produce
/// identical draw sequences: the engine is the standard-mandated
/// mt19937_64 and all distributions are derived here by hand rather than
/// through std:: distribution objects, whose output is not pinned by the
/// standard.
class SeededRng {
 public:
  SeededRng() : SeededRng(0, 0) {}

  SeededRng(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw Error("uniform_int: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r < threshold);
    return r % n;
  }

  /// Box-Muller without pair caching; consumes two engine draws per call.
  double normal(double mu, double sigma) {
    const double u1 =
        static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mu + sigma * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Normal draw rejected until it lands in [lo, hi].
  double normal_truncated(double mu, double sigma, double lo, double hi) {
    if (lo > hi) throw Error("normal_truncated: empty interval");
    if (sigma <= 0.0) return std::min(std::max(mu, lo), hi);
    for (;;) {
      const double z = normal(mu, sigma);
      if (z >= lo && z <= hi) return z;
    }
  }

  /// Deterministic in-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Stream-id layout used across the project so that independent work items
/// never share a draw sequence: high 16 bits name the purpose, low 48 bits
/// index the item.
constexpr std::uint64_t stream_id(std::uint64_t purpose, std::uint64_t index) {
  return (purpose << 48) | (index & 0xFFFFFFFFFFFFull);
}

namespace streams {
constexpr std::uint64_t kModel = 1;
constexpr std::uint64_t kDataset = 2;
constexpr std::uint64_t kAttack = 3;
constexpr std::uint64_t kTargets = 4;
constexpr std::uint64_t kAssignment = 5;
constexpr std::uint64_t kScenario = 6;
}  // namespace streams

}  // namespace foggy
