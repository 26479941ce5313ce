#include "rsc/cooling.hpp"

#include "rsc/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace rsc {

double default_recoil_lamb_dicke() {
    const TrapConfig trap;
    return lamb_dicke(constants::cesium_d2_wavelength, ground_state_size(trap.atom_mass, trap.axial_frequency));
}

void CoolingConfig::validate() const {
    if (!(repump_intensity >= 0.0)) throw DomainError("repump intensity must be non-negative");
    if (n_max < 1) throw DomainError("n_max must be at least 1");
    if (!(duration >= 0.0)) throw DomainError("cooling duration must be non-negative");
    if (!(emission_geometry >= 0.0 && emission_geometry <= 1.0))
        throw DomainError("emission geometry factor must lie in [0, 1]");
    if (!(pump_linewidth > 0.0)) throw DomainError("pump linewidth must be positive");
    if (!(recoil_lamb_dicke >= 0.0)) throw DomainError("recoil Lamb-Dicke parameter must be non-negative");
    if (!(initial_nbar >= 0.0)) throw DomainError("initial nbar must be non-negative");
    if (!(carrier_scale >= 0.0) || !(sideband_scale >= 0.0)) throw DomainError("channel scales must be non-negative");
}

double CoolingConfig::repump_rate() const {
    const double s = repump_intensity;
    const double x = 2.0 * repump_detuning / pump_linewidth;
    return 0.5 * pump_linewidth * s / (1.0 + s + x * x);
}

double raman_channel_rate(double rabi, double detuning, double coherence_width) {
    if (rabi == 0.0) return 0.0;
    return rabi * rabi * coherence_width / (coherence_width * coherence_width + 4.0 * detuning * detuning);
}

RateMatrix::RateMatrix(int n_max) : n_max_(n_max) {
    if (n_max < 0) throw DomainError("n_max must be non-negative");
    exit_.assign(dimension(), 0.0);
}

void RateMatrix::add(std::size_t from, std::size_t to, double rate) {
    if (finalized_) throw std::logic_error("RateMatrix already finalized");
    if (from == to || rate == 0.0) return;
    if (!(rate > 0.0)) throw NumericalError("negative transition rate");
    entries_.push_back({static_cast<std::uint32_t>(from), static_cast<std::uint32_t>(to), rate});
}

void RateMatrix::finalize() {
    // Merge duplicates and group by source.
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> merged;
    for (const auto& e : entries_) merged[{e.from, e.to}] += e.rate;
    entries_.clear();
    for (const auto& [key, rate] : merged) entries_.push_back({key.first, key.second, rate});
    offsets_.assign(dimension() + 1, 0);
    for (const auto& e : entries_) ++offsets_[e.from + 1];
    for (std::size_t i = 0; i < dimension(); ++i) offsets_[i + 1] += offsets_[i];
    std::fill(exit_.begin(), exit_.end(), 0.0);
    for (const auto& e : entries_) exit_[e.from] += e.rate;
    finalized_ = true;
}

std::span<const RateMatrix::Entry> RateMatrix::outgoing(std::size_t from) const {
    return {entries_.data() + offsets_[from], offsets_[from + 1] - offsets_[from]};
}

double RateMatrix::rate(std::size_t from, std::size_t to) const {
    for (const auto& e : outgoing(from))
        if (e.to == to) return e.rate;
    return 0.0;
}

double RateMatrix::max_exit_rate() const { return *std::max_element(exit_.begin(), exit_.end()); }

double RateMatrix::column_sum(std::size_t from) const {
    double sum = -exit_[from];
    for (const auto& e : outgoing(from)) sum += e.rate;
    return sum;
}

void RateMatrix::apply(std::span<const double> p, std::span<double> out) const {
    const std::size_t dim = dimension();
    for (std::size_t i = 0; i < dim; ++i) out[i] = -exit_[i] * p[i];
    for (const auto& e : entries_) out[e.to] += e.rate * p[e.from];
}

std::vector<double> RateMatrix::dense() const {
    const std::size_t dim = dimension();
    std::vector<double> g(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) g[i * dim + i] = -exit_[i];
    for (const auto& e : entries_) g[e.to * dim + e.from] += e.rate;
    return g;
}

RateMatrix build_rate_matrix(const TrapConfig& trap, const CoolingConfig& cooling) {
    trap.validate();
    cooling.validate();

    const int n_max = cooling.n_max;
    const double eta = trap_lamb_dicke(trap);
    const double gamma_p = cooling.repump_rate();
    const double delta = cooling.raman_detuning;
    const double omega_a = trap.axial_frequency;
    const double carrier = cooling.carrier_scale * carrier_rabi(trap.base_rabi, trap.spatial_phase);

    RateMatrix g(n_max);
    bool driven = false;

    auto add_channel = [&](int n3, int n4, double rabi, double detuning) {
        if (rabi == 0.0) return;
        driven = true;
        if (gamma_p == 0.0) return;
        const double r = raman_channel_rate(rabi, detuning, gamma_p);
        g.add(g.index(Manifold::F3, n3), g.index(Manifold::F4, n4), r);
        if (cooling.stimulated_return) g.add(g.index(Manifold::F4, n4), g.index(Manifold::F3, n3), r);
    };

    for (int n = 0; n <= n_max; ++n) {
        add_channel(n, n, carrier, delta);
        if (n > 0) {
            const double lower = cooling.sideband_scale *
                sideband_rabi(trap.base_rabi, trap.spatial_phase, eta, n, SidebandDirection::Lower);
            add_channel(n, n - 1, lower, delta + omega_a);
        }
        if (cooling.include_raise_sideband && n < n_max) {
            const double raise = cooling.sideband_scale *
                sideband_rabi(trap.base_rabi, trap.spatial_phase, eta, n, SidebandDirection::Raise);
            add_channel(n, n + 1, raise, delta - omega_a);
        }
    }
    if (driven && gamma_p == 0.0)
        throw DomainError("Raman drive without repumping: no closed cooling cycle (gamma_p = 0)");

    // Repump with spontaneous-emission recoil. n-changing branches are
    // suppressed by xi eta_s^2; the top rung cannot heat out of the ladder.
    const double recoil = cooling.emission_geometry * cooling.recoil_lamb_dicke * cooling.recoil_lamb_dicke;
    for (int n = 0; n <= n_max; ++n) {
        const double up = n < n_max ? recoil * (n + 1) : 0.0;
        const double down = recoil * n;
        if (up + down > 1.0)
            throw DomainError("recoil branching exceeds unity at n=" + std::to_string(n) +
                              "; ladder outside the Lamb-Dicke regime");
        const std::size_t from = g.index(Manifold::F4, n);
        g.add(from, g.index(Manifold::F3, n), gamma_p * (1.0 - up - down));
        if (n < n_max) g.add(from, g.index(Manifold::F3, n + 1), gamma_p * up);
        if (n > 0) g.add(from, g.index(Manifold::F3, n - 1), gamma_p * down);
    }
    g.finalize();
    return g;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                 b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

} // namespace

MotionalDistribution evolve(const MotionalDistribution& initial, const RateMatrix& generator, double dt,
                            const EvolveOptions& options, EvolveStats* stats) {
    if (!(dt >= 0.0)) throw DomainError("evolution time must be non-negative");
    if (initial.n_max() != generator.n_max()) throw DomainError("distribution and generator ladders differ");
    if (!initial.is_normalized(1e-9)) throw DomainError("initial distribution is not normalized");

    MotionalDistribution result = initial;
    if (dt == 0.0) return result;

    const std::size_t dim = generator.dimension();
    std::vector<double> y = initial.values();
    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), tmp(dim), ynew(dim);

    const double stiffness = generator.max_exit_rate();
    double h = stiffness > 0.0 ? std::min(dt, 1.0 / stiffness) : dt;
    double t = 0.0;
    EvolveStats local;

    generator.apply(y, k1);
    while (t < dt) {
        if (t + h > dt) h = dt - t;
        if (h < options.min_step) {
            std::ostringstream msg;
            msg << "step size underflow at t=" << t << " s of " << dt << " s (h=" << h
                << ", stiffness=" << stiffness << " 1/s, accepted=" << local.accepted
                << ", rejected=" << local.rejected << ")";
            throw NumericalError(msg.str());
        }
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        generator.apply(tmp, k2);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        generator.apply(tmp, k3);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        generator.apply(tmp, k4);
        for (std::size_t i = 0; i < dim; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        generator.apply(tmp, k5);
        for (std::size_t i = 0; i < dim; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        generator.apply(tmp, k6);
        for (std::size_t i = 0; i < dim; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        generator.apply(ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double scale =
                options.absolute_tolerance + options.relative_tolerance * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(e) / scale);
        }

        if (err <= 1.0) {
            t += h;
            y.swap(ynew);
            k1.swap(k7);
            ++local.accepted;
        } else {
            ++local.rejected;
        }
        const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= factor;
    }

    result.values() = std::move(y);
    result.renormalize(1e-9);
    if (stats) *stats = local;
    return result;
}

std::vector<std::vector<std::size_t>> closed_classes(const RateMatrix& generator) {
    // Tarjan's strongly connected components.
    const std::size_t dim = generator.dimension();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(dim, unvisited), low(dim, 0), component(dim, unvisited);
    std::vector<bool> on_stack(dim, false);
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> components;
    std::size_t counter = 0;

    std::function<void(std::size_t)> connect = [&](std::size_t v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (const auto& e : generator.outgoing(v)) {
            if (index[e.to] == unvisited) {
                connect(e.to);
                low[v] = std::min(low[v], low[e.to]);
            } else if (on_stack[e.to]) {
                low[v] = std::min(low[v], index[e.to]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<std::size_t> members;
            std::size_t w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                component[w] = components.size();
                members.push_back(w);
            } while (w != v);
            std::sort(members.begin(), members.end());
            components.push_back(std::move(members));
        }
    };
    for (std::size_t v = 0; v < dim; ++v)
        if (index[v] == unvisited) connect(v);

    std::vector<std::vector<std::size_t>> closed;
    for (std::size_t c = 0; c < components.size(); ++c) {
        bool leaks = false;
        for (std::size_t v : components[c])
            for (const auto& e : generator.outgoing(v))
                if (component[e.to] != c) leaks = true;
        if (!leaks) closed.push_back(components[c]);
    }
    std::sort(closed.begin(), closed.end());
    return closed;
}

MotionalDistribution steady_state(const TrapConfig& trap, const CoolingConfig& cooling,
                                  const SteadyStateOptions& options) {
    const RateMatrix g = build_rate_matrix(trap, cooling);
    const auto classes = closed_classes(g);
    if (classes.size() != 1) {
        throw NumericalError("non-unique stationary state: generator has " + std::to_string(classes.size()) +
                             " closed classes");
    }
    MotionalDistribution p(cooling.n_max);
    if (classes.front().size() == 1) {
        // Absorbing state.
        p.values()[classes.front().front()] = 1.0;
        return p;
    }

    p = thermal_distribution(cooling.initial_nbar, cooling.n_max);
    double horizon = options.initial_horizon;
    p = evolve(p, g, horizon);
    double previous = p.mean_n();
    while (horizon <= options.max_horizon) {
        p = evolve(p, g, horizon);
        horizon *= 2.0;
        const double current = p.mean_n();
        if (std::abs(current - previous) < options.tolerance) return p;
        previous = current;
    }
    throw NumericalError("stationary state not reached within " + std::to_string(options.max_horizon) + " s");
}

double steady_state_nbar(const TrapConfig& trap, const CoolingConfig& cooling, const SteadyStateOptions& options) {
    return steady_state(trap, cooling, options).mean_n();
}

double sideband_ratio_prediction(const TrapConfig& trap, const CoolingConfig& cooling) {
    const double nbar = steady_state_nbar(trap, cooling);
    return nbar / (nbar + 1.0);
}

MotionalDistribution cooled_distribution(const TrapConfig& trap, const CoolingConfig& cooling) {
    const auto start = thermal_distribution(cooling.initial_nbar, cooling.n_max);
    if (cooling.duration == 0.0) return start;
    return evolve(start, build_rate_matrix(trap, cooling), cooling.duration);
}

ScanAxis parse_scan_axis(const std::string& name) {
    if (name == "delta_r") return ScanAxis::RamanDetuning;
    if (name == "i4") return ScanAxis::RepumpIntensity;
    throw DomainError("unknown scan axis '" + name + "' (expected delta_r or i4)");
}

std::string scan_param_name(ScanAxis axis) {
    return axis == ScanAxis::RamanDetuning ? "delta_r_hz" : "i4_isat";
}

std::vector<ScanRow> cooling_scan(const TrapConfig& trap, const CoolingConfig& cooling, ScanAxis axis,
                                  std::span<const double> values, ExecutionPolicy policy) {
    std::vector<ScanRow> rows(values.size());
    for_each_task(values.size(), policy, [&](std::size_t i) {
        CoolingConfig c = cooling;
        if (axis == ScanAxis::RamanDetuning)
            c.raman_detuning = hz(values[i]);
        else
            c.repump_intensity = values[i];
        const double nbar = steady_state_nbar(trap, c);
        rows[i] = {scan_param_name(axis), values[i], nbar, nbar / (nbar + 1.0)};
    });
    return rows;
}

std::size_t sample_trajectory(const RateMatrix& generator, std::size_t start, double duration, Rng& rng) {
    std::size_t state = start;
    double t = 0.0;
    for (;;) {
        const double q = generator.exit_rate(state);
        if (q == 0.0) return state;
        t += std::exponential_distribution<double>(q)(rng);
        if (t > duration) return state;
        double pick = uniform01(rng) * q;
        const auto out = generator.outgoing(state);
        std::size_t next = out.back().to;
        for (const auto& e : out) {
            if (pick < e.rate) {
                next = e.to;
                break;
            }
            pick -= e.rate;
        }
        state = next;
    }
}

TrajectoryEstimate monte_carlo_cooling(const RateMatrix& generator, const MotionalDistribution& initial,
                                       double duration, std::size_t trajectories, std::uint64_t seed,
                                       ExecutionPolicy policy) {
    if (trajectories < 2) throw DomainError("need at least two trajectories");
    constexpr std::size_t chunk = 256;
    const std::size_t chunks = (trajectories + chunk - 1) / chunk;

    std::vector<double> cumulative(initial.values().size());
    double running = 0.0;
    for (std::size_t i = 0; i < cumulative.size(); ++i) cumulative[i] = running += initial.values()[i];

    struct Tally {
        double sum_n = 0.0, sum_n2 = 0.0, ground = 0.0;
    };
    std::vector<Tally> tallies(chunks);
    const std::size_t ladder = static_cast<std::size_t>(generator.n_max() + 1);

    for_each_task(chunks, policy, [&](std::size_t c) {
        Rng rng = make_stream(seed, c);
        const std::size_t end = std::min(trajectories, (c + 1) * chunk);
        Tally t;
        for (std::size_t k = c * chunk; k < end; ++k) {
            const std::size_t s0 = sample_index(cumulative, rng);
            const std::size_t s = sample_trajectory(generator, s0, duration, rng);
            const double n = static_cast<double>(s % ladder);
            t.sum_n += n;
            t.sum_n2 += n * n;
            t.ground += n == 0.0 ? 1.0 : 0.0;
        }
        tallies[c] = t;
    });

    Tally total;
    for (const auto& t : tallies) {
        total.sum_n += t.sum_n;
        total.sum_n2 += t.sum_n2;
        total.ground += t.ground;
    }
    const double count = static_cast<double>(trajectories);
    const double mean = total.sum_n / count;
    const double var = std::max(0.0, (total.sum_n2 - count * mean * mean) / (count - 1.0));
    const double p0 = total.ground / count;
    return {mean, std::sqrt(var / count), p0, std::sqrt(p0 * (1.0 - p0) / count)};
}

} // namespace rsc
