#pragma once

#include <numbers>

namespace zpol {

// CODATA 2018. SI units throughout.
namespace constants {
inline constexpr double planck = 6.62607015e-34;               // J s (exact)
inline constexpr double hbar = planck / (2.0 * std::numbers::pi); // J s
inline constexpr double boltzmann = 1.380649e-23;              // J/K (exact)
inline constexpr double bohr_magneton = 9.2740100783e-24;      // J/T
inline constexpr double vacuum_permeability = 1.25663706212e-6; // N/A^2
inline constexpr double speed_of_light = 299792458.0;          // m/s (exact)
}  // namespace constants

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Frequencies cross module boundaries as angular frequencies (rad/s); GHz is
// only used at the I/O edge.
inline constexpr double ghz_to_rad_s(double ghz) { return two_pi * ghz * 1e9; }
inline constexpr double rad_s_to_ghz(double omega) { return omega / (two_pi * 1e9); }
inline constexpr double hz_to_rad_s(double hz) { return two_pi * hz; }
inline constexpr double rad_s_to_hz(double omega) { return omega / two_pi; }

}  // namespace zpol
