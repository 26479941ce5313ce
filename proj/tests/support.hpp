#pragma once

// Hand-rolled generators for property tests.

#include "rsc/random.hpp"

#include <cmath>
#include <cstdint>

namespace rsc::testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(make_stream(seed, 0xfeed)) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(rng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin() { return uniform01(rng_) < 0.5; }
    Rng& rng() { return rng_; }

private:
    Rng rng_;
};

// Runs `body(gen, case_index)` for `cases` generated cases.
template <class Body>
void for_all(int cases, std::uint64_t seed, Body&& body) {
    for (int i = 0; i < cases; ++i) {
        Gen gen(mix64(seed + static_cast<std::uint64_t>(i)));
        body(gen, i);
    }
}

} // namespace rsc::testing
