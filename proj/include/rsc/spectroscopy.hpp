#pragma once

// The trial protocol (cool, pump to F=3, Raman pulse, detect) and Raman
// spectrum acquisition by pooling alternating +|delta_R| / -|delta_R| trials
// over many simulated atoms.

#include "rsc/cooling.hpp"
#include "rsc/detection.hpp"
#include "rsc/parallel.hpp"
#include "rsc/physics.hpp"
#include "rsc/random.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rsc {

enum class TransferModel { Averaged, Coherent };
enum class PhaseMode { Random, Fixed };

TransferModel parse_transfer_model(const std::string& name);
std::string to_string(TransferModel m);
PhaseMode parse_phase_mode(const std::string& name);
std::string to_string(PhaseMode m);

struct TrialConfig {
    double cool_duration = 5e-3; // Delta t_c
    int pump_pulse_pairs = 10;
    double pump_success_per_pair = 0.9;
    double pump_pulse_length = 1e-6; // each Omega_4 and Omega_4' pulse
    double raman_duration = 500e-6;  // Delta t_R
    int trials_per_sign = 299;
    int atoms_per_point = 33;
    double residual_field = 40e-3 * constants::gauss; // T
    double survival_lifetime = std::numeric_limits<double>::infinity();
    TransferModel transfer_model = TransferModel::Averaged;
    double background = 0.024; // p_bg
    PhaseMode phase_mode = PhaseMode::Random;
    // Bypass cooling and draw n from a thermal ladder with this mean.
    std::optional<double> injected_nbar;
    // Delta m = +-2 Raman lines in addition to Delta m = 0.
    bool include_delta_m2 = false;
    ZeemanModel zeeman;

    void validate() const;
    // Wall-clock length of one trial, used for survival.
    double trial_duration(const DetectionConfig& detection) const;
};

struct SpectrumPoint {
    double detuning = 0.0; // rad/s
    int transfers = 0;
    int valid_trials = 0;
    int inconclusive = 0; // excluded trials: inconclusive window or atom not confirmed
    double p4 = 0.0;
    double p4_error = 0.0;

    // p4 = transfers / valid, p4_error = sqrt(p4 (1 - p4) / valid).
    static SpectrumPoint from_counts(double detuning, int transfers, int valid, int inconclusive);
};

struct TrialRecord {
    double detuning;
    int zeeman_m;
    int n;
    Manifold post_pulse;
    Classification classification;
    bool atom_survived;
};

// Optical pumping into F=3: Zeeman sublevel re-randomized, n untouched.
AtomState prepare_f3(const AtomState& state, const TrialConfig& config, Rng& rng);

// Probability that a Raman pulse at detuning delta_R leaves an F=3 atom in
// F=4, with the state-independent background folded in.
double raman_transfer_probability(const AtomState& state, double detuning, const TrapConfig& trap,
                                  const TrialConfig& config);

// Per-atom context: the cooled motional distribution for this well.
struct PreparedAtom {
    TrapConfig trap;              // with this atom's spatial phase
    std::vector<double> cumulative_n; // CDF of n over both manifolds
    std::vector<double> cumulative_f4; // P(F=4 | n) after cooling, per n
};

PreparedAtom prepare_atom(const TrapConfig& trap, const CoolingConfig& cooling, const TrialConfig& trial);

TrialRecord run_trial(double detuning, const PreparedAtom& atom, const TrialConfig& trial,
                      const DetectionConfig& detection, Rng& rng, bool atom_present = true);

TrialRecord run_trial(double detuning, const TrapConfig& trap, const CoolingConfig& cooling, const TrialConfig& trial,
                      const DetectionConfig& detection, Rng& rng);

struct SpectroscopyConfig {
    TrapConfig trap;
    CoolingConfig cooling;
    TrialConfig trial;
    DetectionConfig detection;
};

// One point per signed detuning, sorted ascending; a zero magnitude yields a
// single point pooling both signs. Magnitudes in rad/s.
std::vector<SpectrumPoint> acquire_spectrum(std::span<const double> magnitudes, const SpectroscopyConfig& config,
                                            std::uint64_t seed, ExecutionPolicy policy = ExecutionPolicy::Parallel);

// Noise-free P4(delta) averaged over Zeeman sublevel, n and (for random phase)
// alpha by quadrature; ideal detection. Used for cross-checks and plots.
double expected_p4(double detuning, const SpectroscopyConfig& config, int phase_nodes = 64);

} // namespace rsc
