#pragma once

#include <cstdint>
#include <random>

namespace nbeatsx {

using Rng = std::mt19937_64;

/// Uniform draw in [0, 1) from the top 53 bits of one engine output.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double standard_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

/// Child seed for a named sub-stream, so components seeded from one root
/// seed do not share random streams.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t offset) {
    std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (offset + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace nbeatsx
