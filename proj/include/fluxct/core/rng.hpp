#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace fluxct {

// Counter-based generator: every draw is a pure function of (seed, key,
// counter), so parallel consumers can sample any element without sharing
// state and results do not depend on evaluation order.
namespace rng {

// splitmix64 finalizer (Stafford mix13 constants).
constexpr std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash(std::uint64_t seed, std::uint64_t key,
                             std::uint64_t counter = 0) {
    return mix(mix(mix(seed) ^ key) ^ counter);
}

// Uniform in (0,1); never returns 0 or 1 exactly.
inline double uniform(std::uint64_t seed, std::uint64_t key,
                      std::uint64_t counter = 0) {
    return (static_cast<double>(hash(seed, key, counter) >> 11) + 0.5) *
           0x1.0p-53;
}

// Standard normal via Box-Muller; consumes counters (2c, 2c+1).
inline double normal(std::uint64_t seed, std::uint64_t key,
                     std::uint64_t counter = 0) {
    const double u1 = uniform(seed, key, 2 * counter);
    const double u2 = uniform(seed, key, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

// Uniform integer in [0, n), n > 0.
inline std::uint64_t below(std::uint64_t seed, std::uint64_t key,
                           std::uint64_t counter, std::uint64_t n) {
    // 64-bit multiply-shift; bias is negligible for the n used here.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(hash(seed, key, counter)) * n) >> 64);
}

} // namespace rng

// Derives an independent sub-seed from a master seed and a component name.
// Adding new components never perturbs existing streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (const char ch : name) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return rng::hash(master, h);
}

// Deterministic Fisher-Yates shuffle of indices [0, n).
template <typename Vec>
void seeded_shuffle(Vec& v, std::uint64_t seed, std::uint64_t key = 0) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::uint64_t j = rng::below(seed, key, i, i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace fluxct
