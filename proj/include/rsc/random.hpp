#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace rsc {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for (seed, i, j). Streams depend only on the indices,
// never on which thread draws from them.
inline Rng make_stream(std::uint64_t seed, std::uint64_t i = 0, std::uint64_t j = 0) {
    return Rng(mix64(mix64(mix64(seed) ^ i) + 0x632be59bd9b4e019ULL * (j + 1)));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Inverse-CDF draw from non-negative weights summing to ~1.
inline std::size_t sample_index(std::span<const double> cumulative, Rng& rng) {
    const double u = uniform01(rng) * cumulative.back();
    std::size_t lo = 0, hi = cumulative.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cumulative[mid] > u)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

} // namespace rsc
