#pragma once

#include <cstdint>
#include <random>

namespace vra {

// All randomness in the library flows through a seeded mt19937_64. The raw
// engine output is standardized, so derived draws reproduce across platforms
// as long as we avoid the implementation-defined std distributions.

/// Uniform double in [0, 1) built from the top 53 bits of one engine draw.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) via rejection sampling (bound >= 1).
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

/// splitmix64 finalizer; mixes a counter into an independent-looking stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace vra
