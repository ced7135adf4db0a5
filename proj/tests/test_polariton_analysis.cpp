#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "zpol/dicke_reference.hpp"
#include "zpol/polariton_analysis.hpp"

namespace {

using namespace zpol;

Spectrum synthetic(const std::function<double(double)>& f, double lo_ghz, double hi_ghz, double step_ghz) {
  Spectrum s;
  for (double x = lo_ghz; x <= hi_ghz + 1e-9; x += step_ghz) {
    s.frequency_hz.push_back(x * 1e9);
    s.transmittance.push_back(f(x));
  }
  s.reflectance.assign(s.frequency_hz.size(), 0.0);
  return s;
}

TEST(FindPeaks, TwoLorentzians) {
  const auto s = synthetic(
      [](double x) {
        auto l = [](double x, double c) { return 1.0 / (1.0 + std::pow((x - c) / 10.0, 2)); };
        return l(x, 600.0) + l(x, 700.0);
      },
      500.0, 800.0, 0.7);
  const auto peaks = find_peaks(s, 500e9, 800e9, 0.1);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_NEAR(peaks.frequencies_hz[0] / 1e9, 600.0, 0.5);
  EXPECT_NEAR(peaks.frequencies_hz[1] / 1e9, 700.0, 0.5);
  EXPECT_LT(peaks.frequencies_hz[0], peaks.frequencies_hz[1]);
}

TEST(FindPeaks, MonotonicSpectrumHasNoPeaks) {
  const auto s = synthetic([](double x) { return x / 1000.0; }, 10.0, 900.0, 1.0);
  EXPECT_TRUE(find_peaks(s, 10e9, 900e9).empty());
}

TEST(FindPeaks, BareEtalonResonance) {
  const std::vector<Layer> slab{Layer::dielectric(180e-6, 3.8)};
  std::vector<double> grid;
  for (double f = 120.0; f <= 320.0; f += 0.5) grid.push_back(f * 1e9);
  const auto s = transfer_matrix_spectrum(slab, grid);
  const auto peaks = find_peaks(s, grid.front(), grid.back());
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_NEAR(peaks.frequencies_hz[0], free_spectral_range_hz(3.8, 180e-6), 0.05e9);
}

TEST(FindPeaks, EmptyWindowIsAnError) {
  const auto s = synthetic([](double x) { return x; }, 10.0, 20.0, 1.0);
  EXPECT_THROW(find_peaks(s, 30e9, 40e9), DomainError);
  EXPECT_THROW(find_peaks(s, 15e9, 15e9), DomainError);
}

TEST(FindPeaks, ProminenceFloorFiltersRipples) {
  const auto s = synthetic([](double x) { return 0.5 + 0.001 * std::sin(x) + std::exp(-std::pow((x - 300) / 20, 2)); },
                           100.0, 500.0, 0.25);
  const auto peaks = find_peaks(s, 100e9, 500e9, 0.01);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_NEAR(peaks.frequencies_hz[0] / 1e9, 300.0, 0.2);
}

TEST(ZeroDetuning, SampleOneAtSevenPointEightTesla) {
  const double b = zero_detuning_field(fixtures::sample1_spins(), fixtures::sample1_cavity().mode_omega());
  EXPECT_NEAR(b, 7.8, 0.1);
  const auto e = level_energies(fixtures::sample1_spins(), b);
  EXPECT_NEAR((e[1] - e[0]) / constants::hbar, fixtures::sample1_cavity().mode_omega(), 1e-9 * 1.4e12);
}

TEST(ZeroDetuning, SampleTwoNearTwentyOnePointFiveTesla) {
  const double b = zero_detuning_field(fixtures::sample2_spins(), fixtures::sample2_cavity().mode_omega());
  EXPECT_NEAR(b, 21.5, 0.2);
}

TEST(Vrs, NoCouplingLeavesTheBareMode) {
  const auto cavity = fixtures::sample1_cavity();
  const auto m = vrs_at_zero_detuning(fixtures::sample1_spins(), cavity, 1.5, 0.0, fixtures::kGamma);
  EXPECT_FALSE(m.resolved);
  EXPECT_EQ(m.vrs_hz, 0.0);
  EXPECT_NEAR(m.single_peak_hz, cavity.mode_hz(), 0.1e9);
  EXPECT_EQ(m.eta, 0.0);
}

TEST(Vrs, BranchesBracketTheCavityMode) {
  for (double t : {1.5, 10.0, 25.0}) {
    const auto m = vrs_at_zero_detuning(fixtures::sample1_spins(), fixtures::sample1_cavity(), t, fixtures::kG0Sample1,
                                        fixtures::kGamma);
    ASSERT_TRUE(m.resolved);
    EXPECT_LT(m.lower_hz, m.cavity_hz);
    EXPECT_GT(m.upper_hz, m.cavity_hz);
    EXPECT_DOUBLE_EQ(m.vrs_hz, m.upper_hz - m.lower_hz);
  }
}

TEST(Vrs, EtaFromModelCoupling) {
  const auto m = vrs_at_zero_detuning(fixtures::sample1_spins(), fixtures::sample1_cavity(), 1.5, fixtures::kG0Sample1,
                                      fixtures::kGamma);
  EXPECT_NEAR(m.eta, fixtures::kG0Sample1 / fixtures::sample1_cavity().mode_omega(), 1e-15);
  EXPECT_NEAR(m.excess_over_2g0_hz(), m.vrs_hz - 2 * 47.5e9, 1.0);
}

TEST(Vrs, SplittingBelowFloorIsUnresolved) {
  VrsOptions options;
  options.resolution_floor_hz = 200e9;
  const auto m = vrs_at_zero_detuning(fixtures::sample1_spins(), fixtures::sample1_cavity(), 1.5, fixtures::kG0Sample1,
                                      fixtures::kGamma, options);
  EXPECT_GT(m.vrs_hz, 0.0);
  EXPECT_FALSE(m.resolved);
}

TEST(VrsProperty, NonincreasingInTemperature) {
  struct Case {
    SpinSystem sys;
    CavityGeometry cavity;
    double g0;
  };
  const std::vector<Case> cases{{fixtures::sample1_spins(), fixtures::sample1_cavity(), fixtures::kG0Sample1},
                                {fixtures::sample2_spins(), fixtures::sample2_cavity(), fixtures::kG0Sample2}};
  for (const auto& c : cases) {
    VrsOptions options;
    options.field = zero_detuning_field(c.sys, c.cavity.mode_omega());
    double previous = std::numeric_limits<double>::infinity();
    for (double t = 1.5; t <= 300.0; t = (t < 2 ? 15.0 : t + 15.0)) {
      const auto m = vrs_at_zero_detuning(c.sys, c.cavity, t, c.g0, fixtures::kGamma, options);
      EXPECT_LE(m.vrs_hz, previous + 1e-6) << "T=" << t;
      previous = m.vrs_hz;
    }
  }
}

// Single oscillator at T = 0 in a high-index slab. Damping pushes the
// transmission maxima apart, so the split sits above the damped two-mode
// value and settles onto the lossless Hopfield split as the finesse grows.
TEST(VrsProperty, TwoModeLowerBound) {
  auto sys = fixtures::sample1_spins();
  for (double gamma_ghz : {1.0, 5.0}) {
    double previous_excess = std::numeric_limits<double>::infinity();
    for (double n : {10.0, 20.0, 40.0}) {
      const CavityGeometry cavity{n, constants::speed_of_light / (2 * n * 219e9), 1};
      const double g0 = 0.05 * cavity.mode_omega();
      VrsOptions options;
      options.grid_step_hz = 0.05e9;
      options.resolution_floor_hz = 0.0;
      const auto m = vrs_at_zero_detuning(sys, cavity, 0.0, g0, ghz_to_rad_s(gamma_ghz), options);
      const double g = rad_s_to_hz(g0);
      const double ratio = gamma_ghz * 1e9 / (2 * g);
      const double bound = 2 * g * std::sqrt(1 - ratio * ratio);
      EXPECT_GE(m.vrs_hz, bound) << "n=" << n << " gamma=" << gamma_ghz;

      const double omega_epr = make_susceptibility_model(sys, m.zero_detuning_field, 0.0, 1.0, g0).omega_epr;
      const double lossless = rad_s_to_hz(hopfield_branches(cavity.mode_omega(), omega_epr, g0).splitting());
      const double excess = m.vrs_hz / lossless - 1.0;
      EXPECT_GT(excess, 0.0) << "n=" << n << " gamma=" << gamma_ghz;
      EXPECT_LT(excess, previous_excess) << "n=" << n << " gamma=" << gamma_ghz;
      previous_excess = excess;
    }
    if (gamma_ghz == 1.0) EXPECT_LT(previous_excess, 0.01);
  }
}

TEST(AnticrossingMap, DetunedRowsShowTheBareMode) {
  const auto sys = fixtures::sample1_spins();
  const auto cavity = fixtures::sample1_cavity();
  std::vector<double> grid;
  for (double f = 60.0; f <= 520.0; f += 0.5) grid.push_back(f * 1e9);
  const std::vector<double> fields{1.0, 16.0};
  const auto map = anticrossing_map(sys, cavity, fields, 1.5, grid, fixtures::kG0Sample1, fixtures::kGamma);
  const double linewidth = fp_diagnostics(cavity.index, cavity.thickness, 1).linewidth_hz;
  for (std::size_t row = 0; row < 2; ++row) {
    const auto& t = map.transmittance[row];
    std::optional<std::size_t> best;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (std::abs(grid[k] - cavity.mode_hz()) > 0.5 * cavity.fsr_hz()) continue;
      if (!best || t[k] > t[*best]) best = k;
    }
    ASSERT_TRUE(best.has_value());
    EXPECT_NEAR(grid[*best], cavity.mode_hz(), linewidth) << "B=" << fields[row];
  }
  EXPECT_NEAR(map.epr_hz[0], 2.0 * constants::bohr_magneton * 1.0 / constants::planck, 1e3);
  ASSERT_FALSE(map.cavity_modes_hz.empty());
  EXPECT_DOUBLE_EQ(map.cavity_modes_hz[0], cavity.fsr_hz());
}

TEST(AnticrossingMap, SampleOneClosestApproachNearSevenPointEight) {
  const auto sys = fixtures::sample1_spins();
  std::vector<double> fields, grid;
  for (double b = 0.0; b <= 9.0 + 1e-9; b += 0.02) fields.push_back(b);
  for (double f = 20.0; f <= 500.0; f += 0.25) grid.push_back(f * 1e9);
  const auto map =
      anticrossing_map(sys, fixtures::sample1_cavity(), fields, 1.5, grid, fixtures::kG0Sample1, fixtures::kGamma);
  const auto row = map.anticrossing_row();
  ASSERT_TRUE(row.has_value());
  EXPECT_NEAR(map.fields[*row], 7.8, 0.2);
  EXPECT_FALSE(map.coarse_grid);
}

TEST(AnticrossingMap, RejectsDecreasingFields) {
  const std::vector<double> fields{2.0, 1.0}, grid{1e11, 2e11};
  EXPECT_THROW(anticrossing_map(fixtures::sample1_spins(), fixtures::sample1_cavity(), fields, 1.5, grid, std::nullopt,
                                fixtures::kGamma),
               DomainError);
}

// Tuning the spins through the mode or the mode through the spins gives the
// same closest approach.
TEST(AnticrossingMap, TuningEitherModeGivesTheSameMinimum) {
  const auto sys = fixtures::sample1_spins();
  const double n = 20.0;
  const CavityGeometry cavity{n, constants::speed_of_light / (2 * n * 219e9), 1};
  const double g0 = 0.02 * cavity.mode_omega();
  const double gamma = ghz_to_rad_s(1.0);
  const double step_hz = 0.05e9;
  std::vector<double> grid;
  for (double f = 180.0; f <= 260.0; f += 0.05) grid.push_back(f * 1e9);
  const double b0 = zero_detuning_field(sys, cavity.mode_omega());

  std::vector<double> fields;
  for (int k = -40; k <= 40; ++k) fields.push_back(b0 + 0.002 * k);
  MapOptions options;
  options.window_half_width_hz = 40e9;
  const auto map = anticrossing_map(sys, cavity, fields, 0.0, grid, g0, gamma, options);
  double by_field = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < fields.size(); ++r) {
    if (!std::isnan(map.lower_hz[r]) && !std::isnan(map.upper_hz[r])) by_field = std::min(by_field, map.separation_hz(r));
  }

  const auto model = make_susceptibility_model(sys, b0, 0.0, gamma, g0);
  double by_length = std::numeric_limits<double>::infinity();
  for (int k = -40; k <= 40; ++k) {
    const double length = cavity.thickness * (1.0 + 0.0005 * k);
    const Layer slab = Layer::magnetic_slab(length, n, model);
    const auto spectrum = transfer_matrix_spectrum(std::span<const Layer>(&slab, 1), grid);
    const double mode = free_spectral_range_hz(n, length);
    const auto peaks = find_peaks(spectrum, mode - 40e9, mode + 40e9);
    const auto pair = bracketing_peaks(peaks, mode);
    if (pair.lower && pair.upper) {
      by_length = std::min(by_length, peaks.frequencies_hz[*pair.upper] - peaks.frequencies_hz[*pair.lower]);
    }
  }
  ASSERT_TRUE(std::isfinite(by_field));
  ASSERT_TRUE(std::isfinite(by_length));
  EXPECT_NEAR(by_field, by_length, step_hz);
}

}  // namespace
