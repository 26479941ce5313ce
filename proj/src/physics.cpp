#include "rsc/physics.hpp"

#include "rsc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rsc {

void TrapConfig::validate() const {
    if (!(axial_frequency > 0.0)) throw DomainError("axial frequency must be positive");
    if (!(radial_frequency > 0.0)) throw DomainError("radial frequency must be positive");
    if (!(atom_mass > 0.0)) throw DomainError("atom mass must be positive");
    if (!(fort_wavelength > 0.0) || !(raman_wavelength > 0.0))
        throw DomainError("wavelengths must be positive");
    if (!(base_rabi >= 0.0)) throw DomainError("base Rabi frequency must be non-negative");
    if (!(spatial_phase >= 0.0 && spatial_phase <= constants::pi / 2.0))
        throw DomainError("spatial phase must lie in [0, pi/2]");
}

void AtomState::validate() const {
    if (std::abs(zeeman_m) > total_f(manifold))
        throw DomainError("Zeeman sublevel m=" + std::to_string(zeeman_m) + " outside F=" +
                          std::to_string(total_f(manifold)));
    if (n < 0) throw DomainError("vibrational number must be non-negative");
}

MotionalDistribution::MotionalDistribution(int n_max) : n_max_(n_max) {
    if (n_max < 0) throw DomainError("n_max must be non-negative");
    data_.assign(2 * static_cast<std::size_t>(n_max + 1), 0.0);
}

double MotionalDistribution::total() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double MotionalDistribution::mean_n() const {
    double sum = 0.0;
    for (int n = 0; n <= n_max_; ++n) sum += n * (at(Manifold::F3, n) + at(Manifold::F4, n));
    return sum;
}

double MotionalDistribution::manifold_population(Manifold f) const {
    double sum = 0.0;
    for (int n = 0; n <= n_max_; ++n) sum += at(f, n);
    return sum;
}

std::vector<double> MotionalDistribution::n_marginal() const {
    std::vector<double> out(static_cast<std::size_t>(n_max_ + 1));
    for (int n = 0; n <= n_max_; ++n) out[n] = at(Manifold::F3, n) + at(Manifold::F4, n);
    return out;
}

bool MotionalDistribution::is_normalized(double tolerance) const {
    if (std::any_of(data_.begin(), data_.end(), [](double p) { return !(p >= 0.0); })) return false;
    return std::abs(total() - 1.0) <= tolerance;
}

void MotionalDistribution::renormalize(double clip) {
    for (double& p : data_) {
        if (p < 0.0) {
            if (p < -clip) throw NumericalError("population " + std::to_string(p) + " below round-off level");
            p = 0.0;
        }
    }
    const double sum = total();
    if (!(sum > 0.0)) throw NumericalError("distribution has no weight");
    for (double& p : data_) p /= sum;
}

double ground_state_size(double mass, double axial_frequency) {
    if (!(mass > 0.0) || !(axial_frequency > 0.0))
        throw DomainError("ground_state_size needs positive mass and frequency");
    return std::sqrt(constants::hbar / (2.0 * mass * axial_frequency));
}

double lamb_dicke(double wavelength, double wavepacket_size) {
    if (!(wavelength > 0.0)) throw DomainError("wavelength must be positive");
    if (!(wavepacket_size >= 0.0)) throw DomainError("wavepacket size must be non-negative");
    return constants::two_pi / wavelength * wavepacket_size;
}

double carrier_rabi(double base_rabi, double spatial_phase) {
    if (!(base_rabi >= 0.0)) throw DomainError("base Rabi frequency must be non-negative");
    return 0.5 * (1.0 + std::cos(2.0 * spatial_phase)) * base_rabi;
}

double sideband_rabi(double base_rabi, double spatial_phase, double eta, int n, SidebandDirection direction) {
    if (!(base_rabi >= 0.0)) throw DomainError("base Rabi frequency must be non-negative");
    if (n < 0) throw DomainError("vibrational number must be non-negative");
    const int ladder = direction == SidebandDirection::Lower ? n : n + 1;
    if (ladder == 0) return 0.0;
    return eta * std::sqrt(static_cast<double>(ladder)) * std::abs(std::sin(2.0 * spatial_phase)) * base_rabi;
}

CriticalNumbers critical_numbers(double coupling, double field_decay, double atomic_decay) {
    if (!(coupling > 0.0)) throw DomainError("critical numbers need a positive coupling g0");
    const double g2 = coupling * coupling;
    return {atomic_decay * atomic_decay / (2.0 * g2), 2.0 * field_decay * atomic_decay / g2};
}

std::vector<double> thermal_weights(double nbar, int n_max) {
    if (!(nbar >= 0.0)) throw DomainError("mean occupation must be non-negative");
    if (n_max < 0) throw DomainError("n_max must be non-negative");
    std::vector<double> w(static_cast<std::size_t>(n_max + 1), 0.0);
    // P_n = (1 - q) q^n with q = nbar / (nbar + 1)
    const double q = nbar / (nbar + 1.0);
    double term = 1.0 - q;
    for (int n = 0; n <= n_max; ++n) {
        w[n] = term;
        term *= q;
    }
    return w;
}

MotionalDistribution thermal_distribution(double nbar, int n_max, Manifold manifold) {
    const auto w = thermal_weights(nbar, n_max);
    const double mass = std::accumulate(w.begin(), w.end(), 0.0);
    MotionalDistribution dist(n_max);
    for (int n = 0; n <= n_max; ++n) dist.at(manifold, n) = w[n] / mass;
    return dist;
}

double zeeman_shift(int m3, int m4, double field, const ZeemanModel& model) {
    if (std::abs(m3) > 3 || std::abs(m4) > 4) throw DomainError("Zeeman sublevels outside F=3 / F=4");
    if (!(field >= 0.0)) throw DomainError("magnetic field magnitude must be non-negative");
    return (model.g4 * m4 - model.g3 * m3) * constants::bohr_magneton * field / constants::planck;
}

double zero_point_temperature(double axial_frequency) {
    if (!(axial_frequency >= 0.0)) throw DomainError("frequency must be non-negative");
    return constants::hbar * axial_frequency / (2.0 * constants::boltzmann);
}

double trap_lamb_dicke(const TrapConfig& trap) {
    return lamb_dicke(trap.raman_wavelength, ground_state_size(trap.atom_mass, trap.axial_frequency));
}

} // namespace rsc
