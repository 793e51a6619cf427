#pragma once

#include <cstdint>
#include <initializer_list>

namespace rctperm::rng {

// SplitMix64 finalizer. Fast, full-avalanche, and identical on every
// platform, which is what the determinism contract needs.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Combine an arbitrary tuple of keys into one 64-bit value.
inline std::uint64_t mix(std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = 0x8F1BBCDC4D9C424BULL;
    for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
    return h;
}

inline double to_unit_interval(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0, 1)
}

// Counter-based uniform draw keyed by (seed, id, t, stream). Independent of
// iteration order and thread count by construction.
inline double counter_uniform(std::uint64_t seed, std::uint64_t id,
                              std::uint64_t t, std::uint64_t stream) {
    return to_unit_interval(mix({seed, id, t, stream}));
}

// Stream tags, one per consumer of randomness.
inline constexpr std::uint64_t kStreamTransition = 1;
inline constexpr std::uint64_t kStreamAssignment = 2;
inline constexpr std::uint64_t kStreamCohort = 3;
inline constexpr std::uint64_t kStreamPropensity = 4;
inline constexpr std::uint64_t kStreamControlIndex = 5;
inline constexpr std::uint64_t kStreamTrialChild = 6;
inline constexpr std::uint64_t kStreamBootstrap = 7;
inline constexpr std::uint64_t kStreamPartitionDiag = 8;

// Sequential generator on top of the same mixer, for shuffles and cohort
// sampling where a stream of draws is more natural than a counter.
class Sequence {
  public:
    explicit Sequence(std::uint64_t seed) : state_(splitmix64(seed)) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Unbiased draw in [0, n) via rejection.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~0ULL - ~0ULL % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    double next_unit() { return to_unit_interval(next_u64()); }

    double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  private:
    std::uint64_t state_;
};

}  // namespace rctperm::rng
