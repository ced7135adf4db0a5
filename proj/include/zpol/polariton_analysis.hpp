#pragma once

// Peak extraction, vacuum Rabi splitting at zero detuning, and field-swept
// anticrossing maps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "zpol/cavity_optics.hpp"
#include "zpol/constants.hpp"
#include "zpol/errors.hpp"
#include "zpol/magnetic_response.hpp"
#include "zpol/parallel.hpp"
#include "zpol/spin_ladder.hpp"

namespace zpol {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PeakSet {
  std::vector<double> frequencies_hz;  // ascending
  std::vector<double> transmittances;
  std::vector<double> prominences;
  bool coarse_grid = false;  // some step in the window exceeded the polariton limit

  std::size_t size() const { return frequencies_hz.size(); }
  bool empty() const { return frequencies_hz.empty(); }
};

inline constexpr double kPolaritonGridStepHz = 1e9;

/// Local maxima of transmittance inside [lo_hz, hi_hz] whose topographic
/// prominence (within the window) exceeds `prominence_floor`. Positions and
/// heights are refined with the parabola through the three grid points around
/// each maximum.
inline PeakSet find_peaks(const Spectrum& spectrum, double lo_hz, double hi_hz, double prominence_floor = 0.01) {
  const auto& f = spectrum.frequency_hz;
  const auto& y = spectrum.transmittance;
  const auto first = std::lower_bound(f.begin(), f.end(), lo_hz);
  const auto last = std::upper_bound(f.begin(), f.end(), hi_hz);
  if (!(hi_hz > lo_hz) || first >= last) throw DomainError("peak window contains no grid points");
  const std::size_t begin = static_cast<std::size_t>(first - f.begin());
  const std::size_t end = static_cast<std::size_t>(last - f.begin());

  PeakSet peaks;
  for (std::size_t i = begin + 1; i < end; ++i) {
    if (f[i] - f[i - 1] > kPolaritonGridStepHz) peaks.coarse_grid = true;
  }

  for (std::size_t i = begin + 1; i + 1 < end; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;

    double left_min = y[i];
    for (std::size_t k = i; k-- > begin;) {
      if (y[k] > y[i]) break;
      left_min = std::min(left_min, y[k]);
    }
    double right_min = y[i];
    for (std::size_t k = i + 1; k < end; ++k) {
      if (y[k] > y[i]) break;
      right_min = std::min(right_min, y[k]);
    }
    const double prominence = y[i] - std::max(left_min, right_min);
    if (!(prominence > prominence_floor)) continue;

    const double x0 = f[i - 1], x1 = f[i], x2 = f[i + 1];
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
    const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    double xv = x1;
    double yv = y1;
    if (den != 0.0) {
      xv = std::clamp(x1 - 0.5 * num / den, x0, x2);
      // Lagrange form of the same parabola.
      yv = y0 * (xv - x1) * (xv - x2) / ((x0 - x1) * (x0 - x2)) +
           y1 * (xv - x0) * (xv - x2) / ((x1 - x0) * (x1 - x2)) +
           y2 * (xv - x0) * (xv - x1) / ((x2 - x0) * (x2 - x1));
    }
    peaks.frequencies_hz.push_back(xv);
    peaks.transmittances.push_back(yv);
    peaks.prominences.push_back(prominence);
  }
  return peaks;
}

/// Most prominent peak strictly below and strictly above `center_hz`.
struct BranchPair {
  std::optional<std::size_t> lower;
  std::optional<std::size_t> upper;
};

inline BranchPair bracketing_peaks(const PeakSet& peaks, double center_hz) {
  BranchPair pair;
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    auto& slot = peaks.frequencies_hz[i] < center_hz ? pair.lower : pair.upper;
    if (peaks.frequencies_hz[i] == center_hz) continue;
    if (!slot || peaks.prominences[i] > peaks.prominences[*slot]) slot = i;
  }
  return pair;
}

/// Self-formed Fabry-Perot cavity: a slab of index n and thickness L in vacuum,
/// probed at mode j.
struct CavityGeometry {
  double index = 3.8;
  double thickness = 180e-6;  // m
  int mode_index = 1;

  double fsr_hz() const { return free_spectral_range_hz(index, thickness); }
  double mode_hz() const { return mode_index * fsr_hz(); }
  double mode_omega() const { return hz_to_rad_s(mode_hz()); }

  void validate() const {
    if (!(index > 1.0)) throw DomainError("refractive index must exceed 1");
    if (!(thickness > 0.0)) throw DomainError("thickness must be positive");
    if (mode_index < 1) throw DomainError("mode index must be >= 1");
  }
};

/// Field where the lowest EPR transition matches `target_omega`. Locates the
/// first sign change of omega_EPR(B) - target on a coarse scan and bisects;
/// falls back to the scan minimum of |omega_EPR(B) - target| when the curves
/// never cross.
inline double zero_detuning_field(const SpinSystem& sys, double target_omega, double max_field = 100.0) {
  if (!(target_omega > 0.0)) throw DomainError("target frequency must be positive");
  auto detuning = [&](double b) { return lowest_transition_frequency(level_energies(sys, b)) - target_omega; };

  constexpr int kScan = 4000;
  double prev_b = 0.0;
  double prev_d = detuning(0.0);
  double best_b = 0.0;
  double best_abs = std::abs(prev_d);
  for (int k = 1; k <= kScan; ++k) {
    const double b = max_field * k / kScan;
    const double d = detuning(b);
    if (std::abs(d) < best_abs) {
      best_abs = std::abs(d);
      best_b = b;
    }
    if (d == 0.0) return b;
    if ((prev_d < 0.0) != (d < 0.0)) {
      double lo = prev_b, hi = b;
      for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((detuning(mid) < 0.0) == (prev_d < 0.0)) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    prev_b = b;
    prev_d = d;
  }
  return best_b;
}

struct PolaritonMetrics {
  double vrs_hz = 0.0;  // 0 when fewer than two bracketing peaks exist
  bool resolved = false;
  double zero_detuning_field = 0.0;  // T
  double eta = 0.0;                  // g0 / omega_cav
  double resolution_floor_hz = 65e9;
  double cavity_hz = 0.0;
  double g0 = 0.0;  // rad/s, as used by the model
  double lower_hz = kNaN;
  double upper_hz = kNaN;
  double single_peak_hz = kNaN;  // set when only one branch is visible

  /// Omega_VRS - 2 g0 in Hz; the excess over the weak-coupling expectation.
  double excess_over_2g0_hz() const { return vrs_hz - 2.0 * rad_s_to_hz(g0); }
};

struct VrsOptions {
  double resolution_floor_hz = 65e9;
  double grid_step_hz = 0.25e9;
  double prominence_floor = 0.01;
  std::optional<double> window_half_width_hz;  // default: half the FSR
  std::optional<double> field;                 // pin instead of searching zero detuning
};

/// Splitting of the two most prominent transmission maxima bracketing
/// omega_cav^(j) at the zero-detuning field. Neighbouring harmonics are kept
/// out by the +-FSR/2 window.
inline PolaritonMetrics vrs_at_zero_detuning(const SpinSystem& sys, const CavityGeometry& cavity, double temperature,
                                             std::optional<double> g0, double gamma, const VrsOptions& options = {}) {
  cavity.validate();
  if (!(options.grid_step_hz > 0.0)) throw DomainError("grid step must be positive");
  PolaritonMetrics metrics;
  metrics.resolution_floor_hz = options.resolution_floor_hz;
  metrics.cavity_hz = cavity.mode_hz();
  metrics.zero_detuning_field = options.field ? *options.field : zero_detuning_field(sys, cavity.mode_omega());

  const SusceptibilityModel model =
      make_susceptibility_model(sys, metrics.zero_detuning_field, temperature, gamma, g0);
  metrics.g0 = model.g0;
  metrics.eta = model.g0 / cavity.mode_omega();

  const double half = options.window_half_width_hz.value_or(0.5 * cavity.fsr_hz());
  const double lo = std::max(options.grid_step_hz, metrics.cavity_hz - half);
  const double hi = metrics.cavity_hz + half;
  const auto points = static_cast<std::size_t>(std::floor((hi - lo) / options.grid_step_hz)) + 1;
  std::vector<double> grid(points);
  for (std::size_t k = 0; k < points; ++k) grid[k] = lo + options.grid_step_hz * static_cast<double>(k);

  const Layer slab = Layer::magnetic_slab(cavity.thickness, cavity.index, model);
  const Spectrum spectrum = transfer_matrix_spectrum(std::span<const Layer>(&slab, 1), grid);
  const PeakSet peaks = find_peaks(spectrum, lo, hi, options.prominence_floor);

  const BranchPair pair = bracketing_peaks(peaks, metrics.cavity_hz);
  if (pair.lower && pair.upper) {
    metrics.lower_hz = peaks.frequencies_hz[*pair.lower];
    metrics.upper_hz = peaks.frequencies_hz[*pair.upper];
    metrics.vrs_hz = metrics.upper_hz - metrics.lower_hz;
    metrics.resolved = metrics.vrs_hz >= options.resolution_floor_hz;
  } else if (!peaks.empty()) {
    const auto best = std::max_element(peaks.prominences.begin(), peaks.prominences.end());
    metrics.single_peak_hz = peaks.frequencies_hz[static_cast<std::size_t>(best - peaks.prominences.begin())];
  }
  return metrics;
}

/// Transmittance over (B, f) with the bare-mode overlays and per-row branch
/// positions around omega_cav^(j).
struct AnticrossingMap {
  std::vector<double> fields;        // T
  std::vector<double> frequency_hz;  // columns
  std::vector<std::vector<double>> transmittance;  // one row per field
  std::vector<double> epr_hz;        // bare lowest EPR transition per field
  std::vector<double> cavity_modes_hz;  // bare FP modes inside the band
  double tracked_mode_hz = 0.0;
  std::vector<double> lower_hz;  // NaN when the branch is missing
  std::vector<double> upper_hz;
  bool coarse_grid = false;

  double separation_hz(std::size_t row) const { return upper_hz[row] - lower_hz[row]; }

  /// Field of closest approach of the branches. Measured in omega^2, where
  /// magnetic-dipole coupling repels the branches symmetrically about zero
  /// detuning; the plain frequency gap bottoms out above it once g0/omega is
  /// large.
  std::optional<std::size_t> anticrossing_row() const {
    std::optional<std::size_t> best;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (std::isnan(lower_hz[k]) || std::isnan(upper_hz[k])) continue;
      const double gap = upper_hz[k] * upper_hz[k] - lower_hz[k] * lower_hz[k];
      if (gap < best_gap) {
        best_gap = gap;
        best = k;
      }
    }
    return best;
  }
};

struct MapOptions {
  double prominence_floor = 0.01;
  std::optional<double> window_half_width_hz;
  unsigned threads = 1;
};

inline AnticrossingMap anticrossing_map(const SpinSystem& sys, const CavityGeometry& cavity,
                                        std::span<const double> fields, double temperature,
                                        std::span<const double> frequency_hz, std::optional<double> g0, double gamma,
                                        const MapOptions& options = {}) {
  cavity.validate();
  for (std::size_t k = 1; k < fields.size(); ++k) {
    if (!(fields[k] > fields[k - 1])) throw DomainError("field range must be increasing");
  }
  AnticrossingMap map;
  map.fields.assign(fields.begin(), fields.end());
  map.frequency_hz.assign(frequency_hz.begin(), frequency_hz.end());
  map.tracked_mode_hz = cavity.mode_hz();
  if (!frequency_hz.empty()) {
    for (int j = 1; j * cavity.fsr_hz() <= frequency_hz.back(); ++j) {
      if (j * cavity.fsr_hz() >= frequency_hz.front()) map.cavity_modes_hz.push_back(j * cavity.fsr_hz());
    }
  }
  const std::size_t rows = fields.size();
  map.transmittance.resize(rows);
  map.epr_hz.assign(rows, 0.0);
  map.lower_hz.assign(rows, kNaN);
  map.upper_hz.assign(rows, kNaN);
  std::vector<char> coarse(rows, 0);

  const double half = options.window_half_width_hz.value_or(0.5 * cavity.fsr_hz());
  parallel_for(rows, options.threads, [&](std::size_t row) {
    const SusceptibilityModel model = make_susceptibility_model(sys, fields[row], temperature, gamma, g0);
    map.epr_hz[row] = rad_s_to_hz(lowest_transition_frequency(model.ladder.energies));
    const Layer slab = Layer::magnetic_slab(cavity.thickness, cavity.index, model);
    Spectrum spectrum = transfer_matrix_spectrum(std::span<const Layer>(&slab, 1), frequency_hz);
    const double lo = std::max(frequency_hz.front(), map.tracked_mode_hz - half);
    const double hi = std::min(frequency_hz.back(), map.tracked_mode_hz + half);
    const PeakSet peaks = find_peaks(spectrum, lo, hi, options.prominence_floor);
    coarse[row] = peaks.coarse_grid ? 1 : 0;
    const BranchPair pair = bracketing_peaks(peaks, map.tracked_mode_hz);
    if (pair.lower) map.lower_hz[row] = peaks.frequencies_hz[*pair.lower];
    if (pair.upper) map.upper_hz[row] = peaks.frequencies_hz[*pair.upper];
    map.transmittance[row] = std::move(spectrum.transmittance);
  });
  map.coarse_grid = std::any_of(coarse.begin(), coarse.end(), [](char c) { return c != 0; });
  return map;
}

}  // namespace zpol
