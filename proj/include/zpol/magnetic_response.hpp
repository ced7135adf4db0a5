#pragma once

// Thermal magnetic susceptibility of a Zeeman ladder, its per-transition
// couplings, and the relative permeability that enters the slab optics.

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "zpol/constants.hpp"
#include "zpol/errors.hpp"
#include "zpol/spin_ladder.hpp"

namespace zpol {

/// g0 = (1/2) mu_B g sqrt(2s (N/V) mu0 omega_EPR / (2 hbar)).
///
/// 2s is the squared two-level matrix element of s_x in units of (hbar/2)^2,
/// i.e. 7 for the spin-7/2 ladder.
inline double g0_closed_form(const SpinSystem& sys, double omega_epr) {
  if (!(omega_epr > 0.0)) throw DomainError("EPR frequency must be positive");
  const double two_s = 2.0 * sys.spin;
  return 0.5 * constants::bohr_magneton * sys.g_factor *
         std::sqrt(two_s * sys.dipole_density * constants::vacuum_permeability * omega_epr /
                   (2.0 * constants::hbar));
}

/// One Delta m_s = 1 Lorentzian: angular frequency and oscillator strength 4 g^2.
struct Transition {
  double m_s = 0.0;  // upper level of the pair (m_s - 1 -> m_s)
  double omega = 0.0;
  double strength = 0.0;
};

struct SusceptibilityModel {
  SpinSystem sys;
  ThermalLadder ladder;
  double gamma = 0.0;      // matter damping, rad/s
  double g0 = 0.0;         // zero-temperature coupling, rad/s
  double omega_epr = 0.0;  // (E_{-s+1} - E_{-s}) / hbar
  bool g0_pinned = false;
  std::vector<Transition> transitions;
};

namespace detail {

// g_{m_s}^2 / g0^2 for the pair (k-1, k).
inline double coupling_radicand(const SpinSystem& sys, const ThermalLadder& ladder, double omega_epr,
                                std::size_t k) {
  const double s = sys.spin;
  const double m = sys.magnetic_quantum_number(k);
  const double weight = (s + m) * (s - m + 1.0) / (2.0 * s);
  const double delta_e = ladder.energies[k] - ladder.energies[k - 1];
  const double delta_p = ladder.populations[k - 1] - ladder.populations[k];
  if (omega_epr == 0.0) {
    // Fully degenerate ladder (B = 0, no offsets): nothing to couple.
    return 0.0;
  }
  const double value = weight * delta_e / (constants::hbar * omega_epr) * delta_p;
  if (value < 0.0) {
    if (value > -1e-14) return 0.0;
    throw DomainError("population difference has the wrong sign for a thermal ladder");
  }
  return value;
}

}  // namespace detail

/// Builds the model at (field, temperature). g0 follows the closed form at the
/// ladder's EPR frequency unless a value is pinned.
inline SusceptibilityModel make_susceptibility_model(const SpinSystem& sys, double field,
                                                     double temperature, double gamma,
                                                     std::optional<double> g0_override = std::nullopt) {
  sys.validate();
  if (!(gamma > 0.0)) throw DomainError("matter damping gamma must be positive");
  if (g0_override && *g0_override < 0.0) throw DomainError("g0 must be nonnegative");

  SusceptibilityModel model;
  model.sys = sys;
  model.ladder = thermal_ladder(sys, field, temperature);
  model.gamma = gamma;
  model.omega_epr = (model.ladder.energies[1] - model.ladder.energies[0]) / constants::hbar;
  if (model.omega_epr < 0.0) throw DomainError("lowest two levels are inverted; EPR frequency negative");
  if (g0_override) {
    model.g0 = *g0_override;
    model.g0_pinned = true;
  } else {
    model.g0 = model.omega_epr > 0.0 ? g0_closed_form(sys, model.omega_epr) : 0.0;
  }

  for (std::size_t k = 1; k < model.ladder.size(); ++k) {
    Transition t;
    t.m_s = sys.magnetic_quantum_number(k);
    t.omega = (model.ladder.energies[k] - model.ladder.energies[k - 1]) / constants::hbar;
    t.strength = 4.0 * model.g0 * model.g0 * detail::coupling_radicand(sys, model.ladder, model.omega_epr, k);
    model.transitions.push_back(t);
  }
  return model;
}

/// g_{m_s} for the m_s - 1 -> m_s transition.
inline double coupling_strength(const SusceptibilityModel& model, double m_s) {
  const std::size_t k = model.sys.level_of(m_s);
  if (k == 0) throw DomainError("m_s = -s has no lower partner");
  return model.g0 * std::sqrt(detail::coupling_radicand(model.sys, model.ladder, model.omega_epr, k));
}

/// sqrt(sum_m g_m^2): the single-oscillator coupling carrying the total
/// oscillator strength. Equals g0 at T = 0.
inline double effective_coupling(const SusceptibilityModel& model) {
  double sum = 0.0;
  for (const Transition& t : model.transitions) sum += t.strength;
  return 0.5 * std::sqrt(sum);
}

/// chi(omega) = sum_m 4 g_m^2 / (omega_m^2 - omega^2 - i gamma omega).
///
/// Accepts any real omega; chi(-omega) = conj(chi(omega)).
inline std::complex<double> chi_at(const SusceptibilityModel& model, double omega) {
  std::complex<double> chi{0.0, 0.0};
  for (const Transition& t : model.transitions) {
    if (t.strength == 0.0) continue;
    chi += t.strength / std::complex<double>(t.omega * t.omega - omega * omega, -model.gamma * omega);
  }
  return chi;
}

inline std::complex<double> mu_r_at(const SusceptibilityModel& model, double omega) {
  return 1.0 / (1.0 - chi_at(model, omega));
}

struct ComplexResponse {
  std::vector<double> frequency_grid;  // rad/s
  std::vector<std::complex<double>> chi_values;
  std::vector<std::complex<double>> mu_r_values;
};

inline void require_increasing_nonnegative(std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 0.0) throw DomainError("frequency grid must be nonnegative");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("frequency grid must be strictly increasing");
  }
}

inline ComplexResponse susceptibility(const SusceptibilityModel& model, std::span<const double> omega_grid) {
  require_increasing_nonnegative(omega_grid);
  ComplexResponse out;
  out.frequency_grid.assign(omega_grid.begin(), omega_grid.end());
  out.chi_values.reserve(omega_grid.size());
  out.mu_r_values.reserve(omega_grid.size());
  for (double omega : omega_grid) {
    const auto chi = chi_at(model, omega);
    out.chi_values.push_back(chi);
    out.mu_r_values.push_back(1.0 / (1.0 - chi));
  }
  return out;
}

}  // namespace zpol
