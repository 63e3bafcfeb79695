#pragma once

#include <cstdint>
#include <random>

// Portable draws on top of std::mt19937_64. The standard distributions are
// implementation-defined, which would break byte-identical outputs across
// toolchains, so the few draws we need are written out here.
namespace lte::rng {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent stream for item `index` of a run seeded with `seed`.
inline Engine stream(std::uint64_t seed, std::uint64_t index) {
    return Engine(splitmix64(seed ^ splitmix64(index + 1)));
}

/// Uniform in [0, 1) with 53 random bits.
inline double unit(Engine& e) { return static_cast<double>(e() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n) by rejection; n must be positive.
inline std::uint64_t below(Engine& e, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = e();
    } while (x >= limit);
    return x % n;
}

/// Uniform in [0, 1) derived from a hash rather than an engine.
inline double unit_from_hash(std::uint64_t h) { return static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53; }

} // namespace lte::rng
