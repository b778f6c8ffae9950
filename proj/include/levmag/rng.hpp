#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include "levmag/constants.hpp"

// Counter-based random source. Every value is a pure function of
// (seed, stream, counter), so sweeps and Monte-Carlo draws can be evaluated
// in any order or on any number of threads and still reproduce bit-identical
// results for a fixed seed.
namespace levmag::rng {

namespace detail {

inline constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 output function applied to an absolute stream position.
inline std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

} // namespace detail

/// 64-bit value at position `counter` of the stream identified by `key`.
inline std::uint64_t value(std::uint64_t key, std::uint64_t counter) {
    return detail::mix(key + (counter + 1) * detail::golden);
}

/// Derive an independent stream key from (seed, stream id).
inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return detail::mix(detail::mix(seed) ^ (stream * 0xD6E8FEB86659FD93ull + 0xA5A5A5A5A5A5A5A5ull));
}

/// Uniform double in (0, 1).
inline double uniform(std::uint64_t key, std::uint64_t counter) {
    return (static_cast<double>(value(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard-normal pair via Box-Muller from counters (2i, 2i+1).
inline std::pair<double, double> normal_pair(std::uint64_t key, std::uint64_t i) {
    const double u1 = uniform(key, 2 * i);
    const double u2 = uniform(key, 2 * i + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * constants::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

/// Single standard normal at index i (uses the first of the i-th pair).
inline double normal(std::uint64_t key, std::uint64_t i) {
    return normal_pair(key, i).first;
}

} // namespace levmag::rng
