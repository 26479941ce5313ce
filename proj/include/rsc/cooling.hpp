#pragma once

// Rate-equation model of Raman sideband cooling on the axial ladder of a
// two-manifold (F=3, F=4) atom. The F=4 coherence is adiabatically
// eliminated, so each Raman channel becomes an incoherent rate, and the
// Omega_4 repump returns F=4 to F=3 with spontaneous-emission recoil.

#include "rsc/parallel.hpp"
#include "rsc/physics.hpp"
#include "rsc/random.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rsc {

double default_recoil_lamb_dicke();

struct CoolingConfig {
    double raman_detuning = -hz(525e3); // delta_R, red sideband near -omega_a
    double repump_intensity = 0.5;      // I_4 / I_sat
    double repump_detuning = hz(10e6);  // Omega_4 lattice light, blue of F=4 -> F'=4'
    double pump_linewidth = hz(5.2e6);  // Gamma = 2 gamma
    double recoil_lamb_dicke = default_recoil_lamb_dicke(); // eta_s at 852 nm
    double emission_geometry = 1.0 / 3.0;                   // xi
    int n_max = 40;
    double duration = 5e-3;   // Delta t_c
    double initial_nbar = 2.0;
    bool include_raise_sideband = true;
    // Add the stimulated F=4 -> F=3 return at the same rate as each forward
    // channel; the two-level steady state then carries power broadening.
    bool stimulated_return = true;
    double carrier_scale = 1.0;
    double sideband_scale = 1.0;

    void validate() const;

    // gamma_p = (Gamma/2) s / (1 + s + (2 Delta_4 / Gamma)^2)
    double repump_rate() const;
};

enum class RamanChannel { Carrier, Lower, Raise };

// Incoherent transfer rate of a driven transition whose coherence decays at
// full width `coherence_width`: Omega^2 w / (w^2 + 4 Delta^2).
double raman_channel_rate(double rabi, double detuning, double coherence_width);

/// Sparse generator G over the states (F, n): dp/dt = G p.
class RateMatrix {
public:
    struct Entry {
        std::uint32_t from;
        std::uint32_t to;
        double rate;
    };

    explicit RateMatrix(int n_max);

    int n_max() const { return n_max_; }
    std::size_t dimension() const { return 2 * static_cast<std::size_t>(n_max_ + 1); }
    std::size_t index(Manifold f, int n) const {
        return (f == Manifold::F3 ? 0u : static_cast<std::size_t>(n_max_ + 1)) + static_cast<std::size_t>(n);
    }

    // Accumulates an off-diagonal rate. Zero rates are dropped.
    void add(std::size_t from, std::size_t to, double rate);

    double rate(std::size_t from, std::size_t to) const;
    double exit_rate(std::size_t from) const { return exit_[from]; }
    double max_exit_rate() const;
    // Sum of column `from` of G, i.e. outgoing minus exit rate (0 by construction).
    double column_sum(std::size_t from) const;

    // Entries grouped by source state.
    std::span<const Entry> outgoing(std::size_t from) const;
    void finalize();

    // out = G p
    void apply(std::span<const double> p, std::span<double> out) const;
    // Row-major dense G, element (to, from) at to * dimension() + from.
    std::vector<double> dense() const;

private:
    int n_max_;
    std::vector<Entry> entries_;
    std::vector<std::size_t> offsets_;
    std::vector<double> exit_;
    bool finalized_ = false;
};

RateMatrix build_rate_matrix(const TrapConfig& trap, const CoolingConfig& cooling);

struct EvolveOptions {
    double relative_tolerance = 1e-9;
    double absolute_tolerance = 1e-13;
    double min_step = 1e-15; // s
};

struct EvolveStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

// exp(G dt) p by embedded Dormand-Prince 5(4) stepping.
MotionalDistribution evolve(const MotionalDistribution& initial, const RateMatrix& generator, double dt,
                            const EvolveOptions& options = {}, EvolveStats* stats = nullptr);

// Closed communicating classes of the jump graph; a unique stationary state
// exists iff there is exactly one.
std::vector<std::vector<std::size_t>> closed_classes(const RateMatrix& generator);

struct SteadyStateOptions {
    double tolerance = 1e-5;      // |nbar(2T) - nbar(T)|
    double initial_horizon = 1e-3; // s
    double max_horizon = 30.0;     // s
};

MotionalDistribution steady_state(const TrapConfig& trap, const CoolingConfig& cooling,
                                  const SteadyStateOptions& options = {});
double steady_state_nbar(const TrapConfig& trap, const CoolingConfig& cooling,
                         const SteadyStateOptions& options = {});

// Thermal-ratio prediction r0 = nbar / (nbar + 1) of the stationary state.
double sideband_ratio_prediction(const TrapConfig& trap, const CoolingConfig& cooling);

// Distribution after cooling_config.duration, starting thermal at initial_nbar in F=3.
MotionalDistribution cooled_distribution(const TrapConfig& trap, const CoolingConfig& cooling);

enum class ScanAxis { RamanDetuning, RepumpIntensity };

struct ScanRow {
    std::string param_name;
    double param_value; // Hz for delta_r, I_sat units for i4
    double nbar_inf;
    double r0;
};

ScanAxis parse_scan_axis(const std::string& name);
std::string scan_param_name(ScanAxis axis);

std::vector<ScanRow> cooling_scan(const TrapConfig& trap, const CoolingConfig& cooling, ScanAxis axis,
                                  std::span<const double> values, ExecutionPolicy policy = ExecutionPolicy::Parallel);

// Gillespie sampling of the same jump process; returns the final state index.
std::size_t sample_trajectory(const RateMatrix& generator, std::size_t start, double duration, Rng& rng);

struct TrajectoryEstimate {
    double nbar;
    double nbar_error;  // standard error of the mean
    double ground;      // P(n = 0)
    double ground_error; // binomial standard error
};

TrajectoryEstimate monte_carlo_cooling(const RateMatrix& generator, const MotionalDistribution& initial,
                                       double duration, std::size_t trajectories, std::uint64_t seed,
                                       ExecutionPolicy policy = ExecutionPolicy::Parallel);

} // namespace rsc
