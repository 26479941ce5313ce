#pragma once

// Hyperfine-state detection by cavity transmission, modeled at the level of
// photon-count statistics: a transmitting cavity (F=3 atom or no atom) gives
// Poisson(N_e) counts per window, a strongly coupled F=4 atom blocks the
// probe and gives Poisson(N_b).

#include "rsc/parallel.hpp"
#include "rsc/random.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rsc {

struct DetectionConfig {
    double window = 100e-6;       // T_d, s
    double expected_counts = 30;  // N_e, detected counts per window through an empty cavity
    double blocked_mean = 0.5;    // N_b
    double flip_rate_4to3 = 0.0;  // 1/s, depumping while probed
    double flip_rate_3to4 = 0.0;  // 1/s
    double lower_threshold = 0.25;
    double upper_threshold = 0.75;

    void validate() const;
    bool has_flips() const { return flip_rate_4to3 > 0.0 || flip_rate_3to4 > 0.0; }
};

enum class Classification { F4Present, F4Absent, Inconclusive };

// What sits in the cavity during a probe window.
enum class ProbeTarget { F3, F4, Empty };

std::string to_string(Classification c);

// Counts in one window; at most one state flip at an exponential time.
int simulate_probe_window(ProbeTarget target, const DetectionConfig& config, Rng& rng);

// N < lower N_e -> F4 present, N > upper N_e -> F4 absent, else inconclusive.
// Thresholds are fractional and never rounded.
Classification classify(int counts, const DetectionConfig& config);

/// P(classification | true state) for a true F=3 or F=4 atom.
struct ConfusionMatrix {
    // [classification][true state], true state 0 = F3, 1 = F4.
    std::array<std::array<double, 2>, 3> p{};
    std::array<std::array<double, 2>, 3> error{}; // zero for the exact method

    double operator()(Classification c, ProbeTarget truth) const;

    // P(correct | conclusive), worst case over the two true states.
    double confidence() const;
    // P(inconclusive), worst case over the two true states.
    double inconclusive_fraction() const;
};

double poisson_pmf(int k, double mean);
// P(N <= k).
double poisson_cdf(int k, double mean);

// Sums Poisson masses over the integer count regions. Requires no flips.
ConfusionMatrix confusion_matrix_exact(const DetectionConfig& config);

ConfusionMatrix confusion_matrix_monte_carlo(const DetectionConfig& config, std::size_t trials_per_state,
                                             std::uint64_t seed, ExecutionPolicy policy = ExecutionPolicy::Parallel);

enum class AtomPresence { F3, F4, None };

struct PresenceResult {
    Classification hyperfine;
    bool present;
};

// Window one probes alone; window two adds the Omega_3 repumper so that any
// atom blocks the probe.
PresenceResult presence_check(AtomPresence atom, const DetectionConfig& config, Rng& rng);

struct HistogramRow {
    int count;
    double p_given_f3;
    double p_given_f4;
};

// Count histogram per true state, estimated from `windows` simulated windows each.
std::vector<HistogramRow> count_histogram(const DetectionConfig& config, std::size_t windows, std::uint64_t seed,
                                          ExecutionPolicy policy = ExecutionPolicy::Parallel);

} // namespace rsc
