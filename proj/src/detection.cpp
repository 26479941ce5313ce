#include "rsc/detection.hpp"

#include "rsc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace rsc {

void DetectionConfig::validate() const {
    if (!(window > 0.0)) throw DomainError("detection window must be positive");
    if (!(lower_threshold > 0.0 && lower_threshold < upper_threshold && upper_threshold < 1.0))
        throw DomainError("thresholds must satisfy 0 < lower < upper < 1");
    if (!(blocked_mean >= 0.0 && expected_counts > blocked_mean))
        throw DomainError("need N_e > N_b >= 0");
    if (!(flip_rate_4to3 >= 0.0) || !(flip_rate_3to4 >= 0.0)) throw DomainError("flip rates must be non-negative");
}

std::string to_string(Classification c) {
    switch (c) {
    case Classification::F4Present: return "F4_PRESENT";
    case Classification::F4Absent: return "F4_ABSENT";
    case Classification::Inconclusive: return "INCONCLUSIVE";
    }
    return "?";
}

namespace {

int draw_poisson(double mean, Rng& rng) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<int>(mean)(rng);
}

// Largest count still classified F4 present, smallest classified F4 absent.
int last_present_count(const DetectionConfig& c) {
    return static_cast<int>(std::ceil(c.lower_threshold * c.expected_counts)) - 1;
}
int first_absent_count(const DetectionConfig& c) {
    return static_cast<int>(std::floor(c.upper_threshold * c.expected_counts)) + 1;
}

double poisson_upper_tail(int k_min, double mean) {
    // Summed upward from k_min so that tiny tails keep full precision.
    if (k_min <= 0) return 1.0;
    if (mean == 0.0) return 0.0;
    double sum = 0.0;
    for (int k = k_min;; ++k) {
        const double term = poisson_pmf(k, mean);
        sum += term;
        if (k > mean && term < sum * 1e-18) break;
        if (k > k_min + 100000) break;
    }
    return sum;
}

} // namespace

double poisson_pmf(int k, double mean) {
    if (k < 0) return 0.0;
    if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(k * std::log(mean) - mean - std::lgamma(k + 1.0));
}

double poisson_cdf(int k, double mean) {
    double sum = 0.0;
    for (int j = 0; j <= k; ++j) sum += poisson_pmf(j, mean);
    return std::min(sum, 1.0);
}

int simulate_probe_window(ProbeTarget target, const DetectionConfig& config, Rng& rng) {
    const double transmit = config.expected_counts;
    const double blocked = config.blocked_mean;
    if (target == ProbeTarget::Empty) return draw_poisson(transmit, rng);

    const bool starts_blocked = target == ProbeTarget::F4;
    const double flip_rate = starts_blocked ? config.flip_rate_4to3 : config.flip_rate_3to4;
    const double first = starts_blocked ? blocked : transmit;
    const double second = starts_blocked ? transmit : blocked;
    if (flip_rate <= 0.0) return draw_poisson(first, rng);

    const double t_flip = std::exponential_distribution<double>(flip_rate)(rng);
    if (t_flip >= config.window) return draw_poisson(first, rng);
    const double frac = t_flip / config.window;
    return draw_poisson(first * frac + second * (1.0 - frac), rng);
}

Classification classify(int counts, const DetectionConfig& config) {
    const double n = static_cast<double>(counts);
    if (n < config.lower_threshold * config.expected_counts) return Classification::F4Present;
    if (n > config.upper_threshold * config.expected_counts) return Classification::F4Absent;
    return Classification::Inconclusive;
}

double ConfusionMatrix::operator()(Classification c, ProbeTarget truth) const {
    if (truth == ProbeTarget::Empty) throw DomainError("confusion matrix covers atoms in F=3 or F=4 only");
    return p[static_cast<std::size_t>(c)][truth == ProbeTarget::F3 ? 0 : 1];
}

double ConfusionMatrix::confidence() const {
    const auto present = static_cast<std::size_t>(Classification::F4Present);
    const auto absent = static_cast<std::size_t>(Classification::F4Absent);
    const double f3 = p[absent][0] / (p[absent][0] + p[present][0]);
    const double f4 = p[present][1] / (p[absent][1] + p[present][1]);
    return std::min(f3, f4);
}

double ConfusionMatrix::inconclusive_fraction() const {
    const auto inc = static_cast<std::size_t>(Classification::Inconclusive);
    return std::max(p[inc][0], p[inc][1]);
}

ConfusionMatrix confusion_matrix_exact(const DetectionConfig& config) {
    config.validate();
    if (config.has_flips())
        throw DomainError("exact confusion matrix requires zero flip rates; use the Monte Carlo method");
    const int k_present = last_present_count(config);
    const int k_absent = first_absent_count(config);

    ConfusionMatrix m;
    const std::array<double, 2> means{config.expected_counts, config.blocked_mean};
    for (std::size_t s = 0; s < 2; ++s) {
        const double present = poisson_cdf(k_present, means[s]);
        const double absent = poisson_upper_tail(k_absent, means[s]);
        double middle = 0.0;
        for (int k = k_present + 1; k < k_absent; ++k) middle += poisson_pmf(k, means[s]);
        m.p[static_cast<std::size_t>(Classification::F4Present)][s] = present;
        m.p[static_cast<std::size_t>(Classification::F4Absent)][s] = absent;
        m.p[static_cast<std::size_t>(Classification::Inconclusive)][s] = middle;
    }
    return m;
}

ConfusionMatrix confusion_matrix_monte_carlo(const DetectionConfig& config, std::size_t trials_per_state,
                                             std::uint64_t seed, ExecutionPolicy policy) {
    config.validate();
    if (trials_per_state == 0) throw DomainError("need at least one trial");
    constexpr std::size_t chunk = 4096;
    const std::size_t chunks = (trials_per_state + chunk - 1) / chunk;
    // Tallies per (true state, chunk, classification).
    std::vector<std::array<std::size_t, 3>> tallies(2 * chunks, {0, 0, 0});
    for_each_task(2 * chunks, policy, [&](std::size_t task) {
        const std::size_t state = task / chunks;
        const std::size_t c = task % chunks;
        Rng rng = make_stream(seed, state, c);
        const ProbeTarget target = state == 0 ? ProbeTarget::F3 : ProbeTarget::F4;
        const std::size_t end = std::min(trials_per_state, (c + 1) * chunk);
        for (std::size_t k = c * chunk; k < end; ++k)
            ++tallies[task][static_cast<std::size_t>(classify(simulate_probe_window(target, config, rng), config))];
    });

    ConfusionMatrix m;
    const double n = static_cast<double>(trials_per_state);
    for (std::size_t state = 0; state < 2; ++state) {
        for (std::size_t cls = 0; cls < 3; ++cls) {
            std::size_t hits = 0;
            for (std::size_t c = 0; c < chunks; ++c) hits += tallies[state * chunks + c][cls];
            const double p = static_cast<double>(hits) / n;
            m.p[cls][state] = p;
            m.error[cls][state] = std::sqrt(p * (1.0 - p) / n);
        }
    }
    return m;
}

PresenceResult presence_check(AtomPresence atom, const DetectionConfig& config, Rng& rng) {
    const ProbeTarget first =
        atom == AtomPresence::F3 ? ProbeTarget::F3 : atom == AtomPresence::F4 ? ProbeTarget::F4 : ProbeTarget::Empty;
    const Classification hyperfine = classify(simulate_probe_window(first, config, rng), config);

    // With the repumper on the atom is held in F=4 for the whole window.
    DetectionConfig repumped = config;
    repumped.flip_rate_4to3 = 0.0;
    repumped.flip_rate_3to4 = 0.0;
    const ProbeTarget second = atom == AtomPresence::None ? ProbeTarget::Empty : ProbeTarget::F4;
    const bool present = classify(simulate_probe_window(second, repumped, rng), repumped) == Classification::F4Present;
    return {hyperfine, present};
}

std::vector<HistogramRow> count_histogram(const DetectionConfig& config, std::size_t windows, std::uint64_t seed,
                                          ExecutionPolicy policy) {
    config.validate();
    if (windows == 0) throw DomainError("need at least one window");
    constexpr std::size_t chunk = 4096;
    const std::size_t chunks = (windows + chunk - 1) / chunk;
    std::vector<std::vector<std::size_t>> counts(2 * chunks);
    for_each_task(2 * chunks, policy, [&](std::size_t task) {
        const std::size_t state = task / chunks;
        const std::size_t c = task % chunks;
        Rng rng = make_stream(seed, state, c);
        const ProbeTarget target = state == 0 ? ProbeTarget::F3 : ProbeTarget::F4;
        auto& h = counts[task];
        const std::size_t end = std::min(windows, (c + 1) * chunk);
        for (std::size_t k = c * chunk; k < end; ++k) {
            const auto n = static_cast<std::size_t>(simulate_probe_window(target, config, rng));
            if (n >= h.size()) h.resize(n + 1, 0);
            ++h[n];
        }
    });

    std::size_t max_count = 0;
    for (const auto& h : counts) max_count = std::max(max_count, h.size());
    std::vector<HistogramRow> rows(max_count);
    const double norm = static_cast<double>(windows);
    for (std::size_t n = 0; n < max_count; ++n) {
        std::array<std::size_t, 2> hits{0, 0};
        for (std::size_t task = 0; task < counts.size(); ++task)
            if (n < counts[task].size()) hits[task / chunks] += counts[task][n];
        rows[n] = {static_cast<int>(n), static_cast<double>(hits[0]) / norm, static_cast<double>(hits[1]) / norm};
    }
    return rows;
}

} // namespace rsc
