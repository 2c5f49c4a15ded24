#pragma once

#include <cstdint>

namespace ddea {

// Named RNG streams. A master seed is split into independent streams via
// derive_seed(master, stream, counter), so results do not depend on the
// order or parallelism in which consumers draw.
enum class Stream : std::uint64_t {
  kGraphGen = 1,
  kInit = 2,
  kSelection = 3,
  kOperator = 4,
  kMutationGate = 5,
  kMutation = 6,
  kTieBreak = 7,
  kPadding = 8,
  kNoise = 9,
  kTraining = 10,
  kBench = 11,
};

namespace detail {
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based seed derivation: seed -> independent per-(stream, counter) seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                           std::uint64_t counter = 0) {
  std::uint64_t h = detail::mix64(master + detail::kGolden);
  h = detail::mix64(h ^ (static_cast<std::uint64_t>(stream) * detail::kGolden));
  h = detail::mix64(h ^ (counter * 0xd1b54a32d192ed03ULL));
  return h;
}

/// Small deterministic generator (splitmix64). Satisfies
/// UniformRandomBitGenerator; identical output on every platform.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Rng(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }

  constexpr result_type operator()() {
    std::uint64_t z = (state_ += detail::kGolden);
    return detail::mix64(z);
  }

  /// Uniform double in [0, 1) using the top 53 bits.
  constexpr double unit() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) {
    // rejection sampling to avoid modulo bias
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x = (*this)();
    while (x >= limit) x = (*this)();
    return x % bound;
  }

  constexpr bool coin(double p) { return unit() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace ddea
