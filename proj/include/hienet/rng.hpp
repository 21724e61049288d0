#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace hienet {

// All sampling goes through these helpers instead of <random> distributions so
// that streams are reproducible across standard library implementations.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view key) {
    return splitmix64(seed ^ splitmix64(fnv1a64(key)));
}

using Rng = std::mt19937_64;

// Uniform in [0, 1) with 53 bits of resolution.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

// Box-Muller, one value per call.
inline double normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline double exponential(Rng& rng, double rate) {
    double u = uniform01(rng);
    return -std::log1p(-u) / rate;
}

}  // namespace hienet
