#pragma once

// Closed-form physics of a single atom in a FORT well driven by a cavity
// Raman pair: motional length scales, Lamb-Dicke couplings, carrier and
// sideband Rabi frequencies, thermal ladders, Zeeman line offsets and the
// cavity QED critical numbers.
//
// Unless a name says otherwise, frequencies are angular (rad/s).

#include "rsc/constants.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace rsc {

/// Trap, Raman-beam and atom constants for one FORT well.
struct TrapConfig {
    double axial_frequency = hz(530e3);  // omega_a
    double radial_frequency = hz(4.5e3); // omega_r, housed only
    double fort_wavelength = 935.6e-9;   // m
    double raman_wavelength = 945.6e-9;  // m
    double fort_depth_hz = -41e6;        // U_F / h
    double raman_stark_shift = hz(0.84e6);
    double base_rabi = hz(200e3);        // Omega_0 at alpha = 0
    double spatial_phase = constants::pi / 4.0; // alpha, canonical range [0, pi/2]
    double atom_mass = constants::cesium_mass;
    // Cavity length l0 = 42.2 um sets the mode geometry; no operation uses it.

    void validate() const;
};

struct CavityConfig {
    double coupling = hz(34e6);          // g0 (2 g0 / 2pi = 68 MHz)
    double field_decay = hz(4.1e6);      // kappa
    double atomic_decay = hz(2.6e6);     // gamma (dipole decay, Gamma / 2)
    double fort_mode_linewidth = hz(0.8e9);
    double raman_mode_linewidth = hz(6e9);
    double hyperfine_splitting_hz = 9.19261e9;

    bool strong_coupling() const { return coupling > atomic_decay && coupling > field_decay; }
};

enum class Manifold { F3 = 3, F4 = 4 };

constexpr int total_f(Manifold f) { return static_cast<int>(f); }

struct AtomState {
    Manifold manifold = Manifold::F3;
    int zeeman_m = 0;
    int n = 0;

    void validate() const;
    friend bool operator==(const AtomState&, const AtomState&) = default;
};

/// Populations p(F, n) on the truncated ladder n = 0..n_max of both manifolds.
class MotionalDistribution {
public:
    explicit MotionalDistribution(int n_max);

    int n_max() const { return n_max_; }
    std::size_t size() const { return data_.size(); }

    double& at(Manifold f, int n) { return data_[index(f, n)]; }
    double at(Manifold f, int n) const { return data_[index(f, n)]; }

    // Flat layout: F=3 block followed by F=4 block.
    std::size_t index(Manifold f, int n) const {
        return (f == Manifold::F3 ? 0u : static_cast<std::size_t>(n_max_ + 1)) + static_cast<std::size_t>(n);
    }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double total() const;
    double mean_n() const;
    double manifold_population(Manifold f) const;
    // Probability of n summed over both manifolds.
    std::vector<double> n_marginal() const;

    // Checks p >= 0 and sum = 1 within tolerance.
    bool is_normalized(double tolerance = 1e-9) const;
    // Clips round-off negatives no larger than `clip` and rescales to unit sum.
    void renormalize(double clip = 1e-12);

private:
    int n_max_;
    std::vector<double> data_;
};

enum class SidebandDirection { Lower, Raise };

// z0 = sqrt(hbar / (2 m omega_a)), metres.
double ground_state_size(double mass, double axial_frequency);

// eta = (2 pi / lambda) z0.
double lamb_dicke(double wavelength, double wavepacket_size);

// Omega_{n->n} = (1 + cos 2 alpha) Omega_0 / 2, first order in eta.
double carrier_rabi(double base_rabi, double spatial_phase);

// Omega_{n->n-1} = eta sqrt(n) |sin 2 alpha| Omega_0, and the sqrt(n+1) analog
// for the raising sideband. Exactly zero for the lowering sideband at n = 0.
double sideband_rabi(double base_rabi, double spatial_phase, double eta, int n, SidebandDirection direction);

struct CriticalNumbers {
    double photon; // n0 = gamma^2 / (2 g0^2)
    double atom;   // N0 = 2 kappa gamma / g0^2
};
CriticalNumbers critical_numbers(double coupling, double field_decay, double atomic_decay);

// Un-normalized thermal weights nbar^n / (nbar + 1)^(n+1) for n = 0..n_max.
std::vector<double> thermal_weights(double nbar, int n_max);

// Thermal ladder placed in one manifold and renormalized after truncation.
MotionalDistribution thermal_distribution(double nbar, int n_max, Manifold manifold = Manifold::F3);

struct ZeemanModel {
    double g3 = constants::cesium_g3;
    double g4 = constants::cesium_g4;
};

// Line offset of |F=3,m3> -> |F=4,m4> in Hz for a field B in tesla.
double zeeman_shift(int m3, int m4, double field, const ZeemanModel& model = {});

// hbar omega_a / 2 k_B in kelvin.
double zero_point_temperature(double axial_frequency);

double trap_lamb_dicke(const TrapConfig& trap);

} // namespace rsc
