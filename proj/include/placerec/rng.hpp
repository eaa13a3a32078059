#pragma once

#include <cmath>
#include <cstdint>

namespace placerec {

/// Stream ids keyed together with the user seed, so every consumer of
/// randomness draws from its own independent sequence.
namespace streams {
inline constexpr std::uint64_t net_init = 1;
inline constexpr std::uint64_t world = 2;
inline constexpr std::uint64_t trajectory = 3;
inline constexpr std::uint64_t lidar = 4;
inline constexpr std::uint64_t radar = 5;
inline constexpr std::uint64_t triplets = 6;
inline constexpr std::uint64_t modality_net = 7;
}  // namespace streams

/// Counter-based deterministic RNG (splitmix64 stream).
///
/// Every random draw in the project goes through this generator so that
/// results are bit-reproducible across platforms and independent of any
/// library's distribution internals. Streams can be keyed hierarchically
/// (e.g. by seed, pose index and sensor id) so renders and samplers are
/// order-independent.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Derive an independent stream from (seed, key parts).
    template <typename... Keys>
    static Rng keyed(std::uint64_t seed, Keys... keys) {
        std::uint64_t h = mix(seed ^ 0x6a09e667f3bcc909ULL);
        ((h = mix(h ^ static_cast<std::uint64_t>(keys))), ...);
        return Rng(h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Modulo bias is below 2^-53 for the sizes used here.
        return next_u64() % n;
    }

    /// Standard normal via Box-Muller; consumes exactly two draws.
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 == 0.0)
            u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform01() < p; }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace placerec
