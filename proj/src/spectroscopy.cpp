#include "rsc/spectroscopy.hpp"

#include "rsc/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace rsc {

TransferModel parse_transfer_model(const std::string& name) {
    if (name == "averaged") return TransferModel::Averaged;
    if (name == "coherent") return TransferModel::Coherent;
    throw DomainError("unknown transfer model '" + name + "' (expected averaged or coherent)");
}

std::string to_string(TransferModel m) { return m == TransferModel::Averaged ? "averaged" : "coherent"; }

PhaseMode parse_phase_mode(const std::string& name) {
    if (name == "random") return PhaseMode::Random;
    if (name == "fixed") return PhaseMode::Fixed;
    throw DomainError("unknown phase mode '" + name + "' (expected random or fixed)");
}

std::string to_string(PhaseMode m) { return m == PhaseMode::Random ? "random" : "fixed"; }

void TrialConfig::validate() const {
    auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!probability(pump_success_per_pair)) throw DomainError("pump success probability outside [0, 1]");
    if (!probability(background)) throw DomainError("background probability outside [0, 1]");
    if (!(cool_duration >= 0.0) || !(raman_duration >= 0.0) || !(pump_pulse_length >= 0.0))
        throw DomainError("durations must be non-negative");
    if (pump_pulse_pairs < 0) throw DomainError("pump pulse pairs must be non-negative");
    if (trials_per_sign < 1) throw DomainError("trials_per_sign must be at least 1");
    if (atoms_per_point < 1) throw DomainError("atoms_per_point must be at least 1");
    if (!(residual_field >= 0.0)) throw DomainError("residual field must be non-negative");
    if (!(survival_lifetime > 0.0)) throw DomainError("survival lifetime must be positive");
    if (injected_nbar && !(*injected_nbar >= 0.0)) throw DomainError("injected nbar must be non-negative");
}

double TrialConfig::trial_duration(const DetectionConfig& detection) const {
    return cool_duration + 2.0 * pump_pulse_pairs * pump_pulse_length + raman_duration + 2.0 * detection.window;
}

SpectrumPoint SpectrumPoint::from_counts(double detuning, int transfers, int valid, int inconclusive) {
    SpectrumPoint p;
    p.detuning = detuning;
    p.transfers = transfers;
    p.valid_trials = valid;
    p.inconclusive = inconclusive;
    if (valid > 0) {
        p.p4 = static_cast<double>(transfers) / valid;
        p.p4_error = std::sqrt(p.p4 * (1.0 - p.p4) / valid);
    }
    return p;
}

AtomState prepare_f3(const AtomState& state, const TrialConfig& config, Rng& rng) {
    state.validate();
    AtomState out = state;
    if (state.manifold == Manifold::F4) {
        const double stay = std::pow(1.0 - config.pump_success_per_pair, config.pump_pulse_pairs);
        out.manifold = bernoulli(rng, stay) ? Manifold::F4 : Manifold::F3;
    }
    const int f = total_f(out.manifold);
    out.zeeman_m = std::uniform_int_distribution<int>(-f, f)(rng);
    return out;
}

namespace {

double line_probability(double rabi, double detuning, const TrialConfig& config) {
    if (rabi == 0.0) return 0.0;
    const double r2 = rabi * rabi;
    const double w2 = r2 + detuning * detuning;
    if (config.transfer_model == TransferModel::Averaged) return 0.5 * r2 / w2;
    const double s = std::sin(0.5 * std::sqrt(w2) * config.raman_duration);
    return r2 / w2 * s * s;
}

} // namespace

double raman_transfer_probability(const AtomState& state, double detuning, const TrapConfig& trap,
                                  const TrialConfig& config) {
    state.validate();
    if (state.manifold != Manifold::F3) throw DomainError("Raman transfer starts from F=3");
    const double eta = trap_lamb_dicke(trap);
    const double omega_a = trap.axial_frequency;
    const double carrier = carrier_rabi(trap.base_rabi, trap.spatial_phase);
    const double lower = sideband_rabi(trap.base_rabi, trap.spatial_phase, eta, state.n, SidebandDirection::Lower);
    const double raise = sideband_rabi(trap.base_rabi, trap.spatial_phase, eta, state.n, SidebandDirection::Raise);

    std::array<int, 3> targets{state.zeeman_m, state.zeeman_m + 2, state.zeeman_m - 2};
    const std::size_t lines = config.include_delta_m2 ? 3 : 1;

    double signal = 0.0;
    for (std::size_t l = 0; l < lines; ++l) {
        const int m4 = targets[l];
        if (std::abs(m4) > 4) continue;
        const double zeeman = hz(zeeman_shift(state.zeeman_m, m4, config.residual_field, config.zeeman));
        const double d = detuning - zeeman;
        signal += line_probability(carrier, d, config);
        signal += line_probability(lower, d + omega_a, config);
        signal += line_probability(raise, d - omega_a, config);
    }
    signal = std::clamp(signal, 0.0, 1.0);
    return signal + config.background * (1.0 - signal);
}

PreparedAtom prepare_atom(const TrapConfig& trap, const CoolingConfig& cooling, const TrialConfig& trial) {
    MotionalDistribution dist(cooling.n_max);
    if (trial.injected_nbar) {
        dist = thermal_distribution(*trial.injected_nbar, cooling.n_max);
    } else {
        CoolingConfig c = cooling;
        c.duration = trial.cool_duration;
        dist = cooled_distribution(trap, c);
    }
    PreparedAtom atom;
    atom.trap = trap;
    const auto marginal = dist.n_marginal();
    atom.cumulative_n.resize(marginal.size());
    atom.cumulative_f4.resize(marginal.size());
    double running = 0.0;
    for (std::size_t n = 0; n < marginal.size(); ++n) {
        atom.cumulative_n[n] = running += marginal[n];
        atom.cumulative_f4[n] = marginal[n] > 0.0 ? dist.at(Manifold::F4, static_cast<int>(n)) / marginal[n] : 0.0;
    }
    return atom;
}

TrialRecord run_trial(double detuning, const PreparedAtom& atom, const TrialConfig& trial,
                      const DetectionConfig& detection, Rng& rng, bool atom_present) {
    if (!atom_present) {
        const PresenceResult r = presence_check(AtomPresence::None, detection, rng);
        return {detuning, 0, 0, Manifold::F3, r.present ? r.hyperfine : Classification::Inconclusive, false};
    }

    AtomState state;
    state.n = static_cast<int>(sample_index(atom.cumulative_n, rng));
    state.manifold = bernoulli(rng, atom.cumulative_f4[state.n]) ? Manifold::F4 : Manifold::F3;
    state = prepare_f3(state, trial, rng);

    Manifold post = Manifold::F4;
    if (state.manifold == Manifold::F3) {
        const double p = raman_transfer_probability(state, detuning, atom.trap, trial);
        post = bernoulli(rng, p) ? Manifold::F4 : Manifold::F3;
    }

    bool survived = true;
    if (std::isfinite(trial.survival_lifetime))
        survived = bernoulli(rng, std::exp(-trial.trial_duration(detection) / trial.survival_lifetime));

    const AtomPresence truth = !survived ? AtomPresence::None
                               : post == Manifold::F4 ? AtomPresence::F4
                                                      : AtomPresence::F3;
    const PresenceResult r = presence_check(truth, detection, rng);
    return {detuning, state.zeeman_m, state.n, post, r.present ? r.hyperfine : Classification::Inconclusive,
            survived};
}

TrialRecord run_trial(double detuning, const TrapConfig& trap, const CoolingConfig& cooling, const TrialConfig& trial,
                      const DetectionConfig& detection, Rng& rng) {
    return run_trial(detuning, prepare_atom(trap, cooling, trial), trial, detection, rng);
}

namespace {

struct SignTally {
    int transfers = 0;
    int valid = 0;
    int rejected = 0;

    void record(const TrialRecord& r) {
        if (r.classification == Classification::Inconclusive) {
            ++rejected;
            return;
        }
        ++valid;
        if (r.classification == Classification::F4Present) ++transfers;
    }
};

struct AtomTally {
    SignTally plus;
    SignTally minus;
};

} // namespace

std::vector<SpectrumPoint> acquire_spectrum(std::span<const double> magnitudes, const SpectroscopyConfig& config,
                                            std::uint64_t seed, ExecutionPolicy policy) {
    if (magnitudes.empty()) throw DomainError("empty detuning list");
    config.trap.validate();
    config.cooling.validate();
    config.trial.validate();
    config.detection.validate();
    for (double m : magnitudes)
        if (!(m >= 0.0)) throw DomainError("detuning magnitudes must be non-negative");

    const std::size_t atoms = static_cast<std::size_t>(config.trial.atoms_per_point);
    std::vector<AtomTally> tallies(magnitudes.size() * atoms);

    for_each_task(tallies.size(), policy, [&](std::size_t task) {
        const std::size_t point = task / atoms;
        const std::size_t atom_index = task % atoms;
        Rng rng = make_stream(seed, point, atom_index);

        TrapConfig trap = config.trap;
        if (config.trial.phase_mode == PhaseMode::Random) trap.spatial_phase = uniform01(rng) * constants::pi / 2.0;
        const PreparedAtom atom = prepare_atom(trap, config.cooling, config.trial);

        const double magnitude = magnitudes[point];
        bool present = true;
        AtomTally& tally = tallies[task];
        for (int k = 0; k < config.trial.trials_per_sign; ++k) {
            for (const double sign : {1.0, -1.0}) {
                const TrialRecord r = run_trial(sign * magnitude, atom, config.trial, config.detection, rng, present);
                present = present && r.atom_survived;
                (sign > 0 ? tally.plus : tally.minus).record(r);
            }
        }
    });

    std::vector<SpectrumPoint> points;
    for (std::size_t point = 0; point < magnitudes.size(); ++point) {
        SignTally plus, minus;
        for (std::size_t a = 0; a < atoms; ++a) {
            const AtomTally& t = tallies[point * atoms + a];
            plus.transfers += t.plus.transfers;
            plus.valid += t.plus.valid;
            plus.rejected += t.plus.rejected;
            minus.transfers += t.minus.transfers;
            minus.valid += t.minus.valid;
            minus.rejected += t.minus.rejected;
        }
        const double magnitude = magnitudes[point];
        if (magnitude == 0.0) {
            points.push_back(SpectrumPoint::from_counts(0.0, plus.transfers + minus.transfers, plus.valid + minus.valid,
                                                        plus.rejected + minus.rejected));
        } else {
            points.push_back(SpectrumPoint::from_counts(magnitude, plus.transfers, plus.valid, plus.rejected));
            points.push_back(SpectrumPoint::from_counts(-magnitude, minus.transfers, minus.valid, minus.rejected));
        }
    }
    std::stable_sort(points.begin(), points.end(),
                     [](const SpectrumPoint& a, const SpectrumPoint& b) { return a.detuning < b.detuning; });
    return points;
}

double expected_p4(double detuning, const SpectroscopyConfig& config, int phase_nodes) {
    std::vector<double> phases;
    if (config.trial.phase_mode == PhaseMode::Fixed) {
        phases.push_back(config.trap.spatial_phase);
    } else {
        for (int i = 0; i < phase_nodes; ++i) phases.push_back((i + 0.5) / phase_nodes * constants::pi / 2.0);
    }
    const double residual_f4 =
        std::pow(1.0 - config.trial.pump_success_per_pair, config.trial.pump_pulse_pairs);

    double total = 0.0;
    for (double alpha : phases) {
        TrapConfig trap = config.trap;
        trap.spatial_phase = alpha;
        const PreparedAtom atom = prepare_atom(trap, config.cooling, config.trial);
        double sum = 0.0;
        double previous = 0.0;
        for (std::size_t n = 0; n < atom.cumulative_n.size(); ++n) {
            const double pn = atom.cumulative_n[n] - previous;
            previous = atom.cumulative_n[n];
            if (pn == 0.0) continue;
            const double f4 = atom.cumulative_f4[n] * residual_f4;
            double transfer = 0.0;
            for (int m = -3; m <= 3; ++m) {
                const AtomState s{Manifold::F3, m, static_cast<int>(n)};
                transfer += raman_transfer_probability(s, detuning, trap, config.trial) / 7.0;
            }
            sum += pn * (f4 + (1.0 - f4) * transfer);
        }
        total += sum;
    }
    return total / static_cast<double>(phases.size());
}

} // namespace rsc
