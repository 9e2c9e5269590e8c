#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace anoheal {

using Rng = std::mt19937_64;

// Samplers are spelled out instead of using <random> distributions so that
// streams are identical across standard library implementations.

inline double uniform_double(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_double(rng);
}

// Inclusive integer range, rejection-sampled to avoid modulo bias.
inline int uniform_int(Rng& rng, int lo, int hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return lo + static_cast<int>(x % span);
}

// Box-Muller without the cached second value; two engine draws per sample.
inline double normal(Rng& rng) {
    double u1;
    do {
        u1 = uniform_double(rng);
    } while (u1 <= 0.0);
    const double u2 = uniform_double(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// splitmix64 over (seed, index) for decorrelated per-item streams.
inline uint64_t split_seed(uint64_t seed, uint64_t index) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace anoheal
