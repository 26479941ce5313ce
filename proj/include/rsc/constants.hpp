#pragma once

#include <numbers>

namespace rsc {

namespace constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

//
// CODATA 2018 values, SI units
//
inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double hbar = 1.054571817e-34;           // J s
inline constexpr double boltzmann = 1.380649e-23;         // J/K
inline constexpr double bohr_magneton = 9.2740100783e-24; // J/T
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg

//
// Cesium
//
inline constexpr double cesium_mass = 132.905451961 * atomic_mass_unit; // kg
inline constexpr double cesium_d2_wavelength = 852.347e-9;               // m

// Ground-manifold Lande factors, F=3 and F=4 (nuclear term neglected).
inline constexpr double cesium_g3 = -0.25;
inline constexpr double cesium_g4 = 0.25;

inline constexpr double gauss = 1.0e-4; // T

} // namespace constants

// Frequencies enter through configuration as cycles/s and are stored as rad/s.
constexpr double hz(double cycles_per_second) { return constants::two_pi * cycles_per_second; }
constexpr double to_hz(double rad_per_second) { return rad_per_second / constants::two_pi; }

} // namespace rsc
