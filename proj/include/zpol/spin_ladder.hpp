#pragma once

// Zeeman ladder of a paramagnetic ion: level energies in a DC field and their
// Boltzmann populations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "zpol/constants.hpp"
#include "zpol/errors.hpp"

namespace zpol {

/// Static spin parameters of the paramagnetic species.
///
/// Levels are indexed 0..2s and correspond to m_s = -s + index. The optional
/// zero-field offsets (joules, one per level) stand in for crystal-field
/// structure; an empty vector means pure Zeeman levels.
struct SpinSystem {
  double spin = 3.5;
  double g_factor = 2.0023;
  double dipole_density = 0.0;  // dipoles per m^3
  std::vector<double> zero_field_offsets;

  /// Gd3+ in gadolinium gallium garnet: 24 ions per cubic cell of 1.238 nm.
  static SpinSystem gd_ggg() {
    SpinSystem sys;
    sys.dipole_density = density_from_lattice(1.238e-9, 24.0);
    return sys;
  }

  static double density_from_lattice(double lattice_constant, double ions_per_cell) {
    return ions_per_cell / (lattice_constant * lattice_constant * lattice_constant);
  }

  std::size_t level_count() const { return static_cast<std::size_t>(std::lround(2.0 * spin)) + 1; }

  double magnetic_quantum_number(std::size_t level) const { return -spin + static_cast<double>(level); }

  /// Maps m_s to a level index; throws if m_s is not on the ladder.
  std::size_t level_of(double m_s) const {
    const double k = m_s + spin;
    const double rounded = std::round(k);
    if (std::abs(k - rounded) > 1e-9 || rounded < 0.0 || rounded > 2.0 * spin + 1e-9) {
      throw DomainError("m_s = " + std::to_string(m_s) + " is not a level of spin " +
                        std::to_string(spin));
    }
    return static_cast<std::size_t>(rounded);
  }

  void validate() const {
    const double twice = 2.0 * spin;
    if (!(spin > 0.0) || std::abs(twice - std::round(twice)) > 1e-12) {
      throw DomainError("spin must be a positive half-integer");
    }
    if (!(dipole_density > 0.0)) throw DomainError("dipole density must be positive");
    if (!(g_factor > 0.0)) throw DomainError("g factor must be positive");
    if (!zero_field_offsets.empty() && zero_field_offsets.size() != level_count()) {
      throw DomainError("zero-field offset table needs exactly 2s+1 entries");
    }
  }
};

/// E_{m_s} = g mu_B m_s B + offset_{m_s}, ordered from m_s = -s to +s.
inline std::vector<double> level_energies(const SpinSystem& sys, double field) {
  if (field < 0.0) throw DomainError("DC field must be nonnegative");
  const std::size_t count = sys.level_count();
  std::vector<double> energies(count);
  for (std::size_t i = 0; i < count; ++i) {
    energies[i] = sys.g_factor * constants::bohr_magneton * sys.magnetic_quantum_number(i) * field;
    if (!sys.zero_field_offsets.empty()) energies[i] += sys.zero_field_offsets[i];
  }
  return energies;
}

/// Angular frequency of the transition between the two lowest levels.
inline double lowest_transition_frequency(const std::vector<double>& energies) {
  if (energies.size() < 2) return 0.0;
  std::vector<double> sorted = energies;
  std::partial_sort(sorted.begin(), sorted.begin() + 2, sorted.end());
  return (sorted[1] - sorted[0]) / constants::hbar;
}

/// Energies and Boltzmann populations at one (B, T) point.
///
/// partition_function is taken relative to the lowest level, i.e. it is the
/// normalizer of exp(-(E - E_min) / k_B T). At T = 0 it counts the degenerate
/// ground levels.
struct ThermalLadder {
  double field = 0.0;
  double temperature = 0.0;
  std::vector<double> energies;
  std::vector<double> populations;
  double partition_function = 1.0;

  std::size_t size() const { return energies.size(); }
};

inline ThermalLadder thermal_ladder(const SpinSystem& sys, double field, double temperature) {
  if (temperature < 0.0 || std::isnan(temperature)) {
    throw DomainError("temperature must be nonnegative");
  }
  ThermalLadder ladder;
  ladder.field = field;
  ladder.temperature = temperature;
  ladder.energies = level_energies(sys, field);

  const double e_min = *std::min_element(ladder.energies.begin(), ladder.energies.end());
  const std::size_t count = ladder.energies.size();
  ladder.populations.assign(count, 0.0);

  if (temperature == 0.0) {
    // Ties are split equally. The tolerance is relative to the ladder width.
    const double e_max = *std::max_element(ladder.energies.begin(), ladder.energies.end());
    const double tie = 1e-12 * std::max(e_max - e_min, std::abs(e_min));
    double ground = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      if (ladder.energies[i] - e_min <= tie) {
        ladder.populations[i] = 1.0;
        ground += 1.0;
      }
    }
    for (double& p : ladder.populations) p /= ground;
    ladder.partition_function = ground;
    return ladder;
  }

  const double kt = constants::boltzmann * temperature;
  double z = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    ladder.populations[i] = std::exp(-(ladder.energies[i] - e_min) / kt);
    z += ladder.populations[i];
  }
  for (double& p : ladder.populations) p /= z;
  ladder.partition_function = z;
  return ladder;
}

}  // namespace zpol
