#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "zpol/vrs_fitting.hpp"

namespace {

using namespace zpol;

const std::vector<double> kSample1Temps{1.5, 4, 7, 10, 13, 16, 20, 25, 30, 35};

struct Setup {
  SpinSystem sys;
  CavityGeometry cavity;
  double field;
};

Setup sample1() {
  const auto sys = fixtures::sample1_spins();
  const auto cavity = fixtures::sample1_cavity();
  return {sys, cavity, zero_detuning_field(sys, cavity.mode_omega())};
}

Setup sample2() {
  const auto sys = fixtures::sample2_spins();
  const auto cavity = fixtures::sample2_cavity();
  return {sys, cavity, zero_detuning_field(sys, cavity.mode_omega())};
}

VrsDataset dataset_from(const Setup& s, const std::vector<VrsPoint>& curve) {
  VrsDataset data;
  data.cavity = s.cavity;
  data.zero_detuning_field = s.field;
  for (const auto& p : curve) data.rows.push_back({p.temperature, p.vrs_hz, std::nullopt});
  return data;
}

TEST(SimulateCurve, NoCouplingIsUnresolvedEverywhere) {
  const auto s = sample1();
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, 0.0, fixtures::kGamma, kSample1Temps);
  for (const auto& p : curve) {
    EXPECT_FALSE(p.resolved);
    EXPECT_EQ(p.vrs_hz, 0.0);
  }
}

TEST(SimulateCurve, SampleOneFallsWithTemperature) {
  const auto s = sample1();
  const std::vector<double> temps{1.5, 50, 100, 150};
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, fixtures::kG0Sample1, fixtures::kGamma, temps);
  EXPECT_TRUE(curve[0].resolved);
  for (std::size_t k = 1; k < curve.size(); ++k) {
    EXPECT_LE(curve[k].vrs_hz, curve[k - 1].vrs_hz);
    if (curve[k].vrs_hz > 0.0) EXPECT_LT(curve[k].vrs_hz, curve[k - 1].vrs_hz);
  }
}

TEST(SimulateCurve, SampleTwoAt235Kelvin) {
  const auto s = sample2();
  const std::vector<double> temps{235.0};
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, fixtures::kG0Sample2, fixtures::kGamma, temps);
  EXPECT_NEAR(curve[0].vrs_hz / 1e9, 103.0, 0.15 * 103.0);
}

TEST(SimulateCurve, RejectsBadParameters) {
  const auto s = sample1();
  EXPECT_THROW(simulate_vrs_curve(s.sys, s.cavity, s.field, -1.0, fixtures::kGamma, kSample1Temps), DomainError);
  EXPECT_THROW(simulate_vrs_curve(s.sys, s.cavity, s.field, 1.0, 0.0, kSample1Temps), DomainError);
}

TEST(FitG0, NoiselessRoundTripSampleOne) {
  const auto s = sample1();
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, fixtures::kG0Sample1, fixtures::kGamma, kSample1Temps);
  FitOptions options;
  options.initial_g0 = ghz_to_rad_s(30.0);
  const auto fit = fit_g0(dataset_from(s, curve), s.sys, options);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(rad_s_to_ghz(fit.g0_fit), 47.5, 0.5);
  EXPECT_EQ(fit.gamma_fit, fixtures::kGamma);
  EXPECT_FALSE(fit.gamma_free);
}

TEST(FitG0, ThreePercentNoiseSampleOne) {
  const auto s = sample1();
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, fixtures::kG0Sample1, fixtures::kGamma, kSample1Temps);
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> noise(0.0, 0.03);
  for (int draw = 0; draw < 20; ++draw) {
    auto data = dataset_from(s, curve);
    for (auto& row : data.rows) row.vrs_hz *= 1.0 + noise(rng);
    const auto fit = fit_g0(data, s.sys);
    EXPECT_TRUE(fit.converged) << "draw " << draw;
    EXPECT_NEAR(rad_s_to_ghz(fit.g0_fit), 47.5, 2.0) << "draw " << draw;
  }
}

TEST(FitG0, NoiselessRoundTripSampleTwo) {
  const auto s = sample2();
  std::vector<double> temps{12, 25, 50, 75, 100, 125, 150, 175, 200, 235};
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, fixtures::kG0Sample2, fixtures::kGamma, temps);
  FitOptions options;
  options.initial_g0 = ghz_to_rad_s(60.0);
  const auto fit = fit_g0(dataset_from(s, curve), s.sys, options);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(rad_s_to_ghz(fit.g0_fit), 79.3, 1.0);
}

TEST(FitG0, FreeGammaRoundTrip) {
  const auto s = sample1();
  const double g0 = ghz_to_rad_s(40.0), gamma = ghz_to_rad_s(60.0);
  const std::vector<double> temps{1.5, 3, 5, 8, 11, 14, 18, 22, 26, 30, 35, 40};
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, g0, gamma, temps);
  FitOptions options;
  options.free_gamma = true;
  const auto fit = fit_g0(dataset_from(s, curve), s.sys, options);
  EXPECT_TRUE(fit.converged);
  EXPECT_TRUE(fit.gamma_free);
  EXPECT_NEAR(rad_s_to_ghz(fit.g0_fit), 40.0, 0.5);
  EXPECT_NEAR(rad_s_to_ghz(fit.gamma_fit), 60.0, 5.0);
}

TEST(FitG0, CensoredRowsNeverContribute) {
  const auto s = sample1();
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, fixtures::kG0Sample1, fixtures::kGamma, kSample1Temps);
  auto base = dataset_from(s, curve);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 0.03);
  for (auto& row : base.rows) row.vrs_hz *= 1.0 + noise(rng);
  auto padded = base;
  padded.rows.push_back({60.0, 10e9, std::nullopt});
  padded.rows.push_back({80.0, 64.9e9, std::nullopt});
  const auto a = fit_g0(base, s.sys);
  const auto b = fit_g0(padded, s.sys);
  EXPECT_EQ(a.g0_fit, b.g0_fit);
  EXPECT_EQ(a.objective, b.objective);
  EXPECT_TRUE(std::isnan(b.per_point_residuals_hz.back()));
  EXPECT_TRUE(std::isnan(b.per_point_residuals_hz[b.per_point_residuals_hz.size() - 2]));
}

// Dropping rows can only lower the minimized sum of squares.
TEST(FitG0, SubsetObjectiveNeverExceedsFull) {
  const auto s = sample1();
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, fixtures::kG0Sample1, fixtures::kGamma, kSample1Temps);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.03);
  auto full = dataset_from(s, curve);
  for (auto& row : full.rows) row.vrs_hz *= 1.0 + noise(rng);
  const auto full_fit = fit_g0(full, s.sys);
  for (std::size_t drop = 0; drop < full.rows.size(); drop += 3) {
    auto subset = full;
    subset.rows.erase(subset.rows.begin() + static_cast<std::ptrdiff_t>(drop));
    const auto fit = fit_g0(subset, s.sys);
    EXPECT_LE(fit.objective, full_fit.objective * (1 + 1e-9) + 1e-12) << "dropped row " << drop;
  }
}

TEST(FitG0, DeterministicAcrossRuns) {
  const auto s = sample1();
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, fixtures::kG0Sample1, fixtures::kGamma, kSample1Temps);
  auto data = dataset_from(s, curve);
  data.rows[3].vrs_hz *= 1.02;
  FitOptions serial, threaded;
  threaded.threads = 3;
  const auto a = fit_g0(data, s.sys, serial);
  const auto b = fit_g0(data, s.sys, threaded);
  EXPECT_EQ(a.g0_fit, b.g0_fit);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.per_point_residuals_hz, b.per_point_residuals_hz);
}

TEST(FitG0, UncertaintyIsReported) {
  const auto s = sample1();
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, fixtures::kG0Sample1, fixtures::kGamma, kSample1Temps);
  auto data = dataset_from(s, curve);
  for (auto& row : data.rows) row.uncertainty_hz = 3e9;
  data.rows[2].vrs_hz += 3e9;
  const auto fit = fit_g0(data, s.sys);
  EXPECT_TRUE(fit.converged);
  EXPECT_GT(fit.g0_uncertainty, 0.0);
  EXPECT_LT(rad_s_to_ghz(fit.g0_uncertainty), 2.0);
}

TEST(FitG0, AllCensoredIsAnError) {
  const auto s = sample1();
  VrsDataset data;
  data.cavity = s.cavity;
  for (double t : {1.0, 2.0, 3.0, 4.0}) data.rows.push_back({t, 50e9, std::nullopt});
  try {
    fit_g0(data, s.sys);
    FAIL() << "expected a DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("censored"), std::string::npos);
  }
}

TEST(FitG0, NeedsThreeUsableRows) {
  const auto s = sample1();
  VrsDataset data;
  data.cavity = s.cavity;
  data.rows = {{1.5, 120e9, std::nullopt}, {10.0, 100e9, std::nullopt}, {60.0, 10e9, std::nullopt}};
  EXPECT_THROW(fit_g0(data, s.sys), DomainError);
}

TEST(FitG0, RejectsGuessOutsideBounds) {
  const auto s = sample1();
  const auto curve = simulate_vrs_curve(s.sys, s.cavity, s.field, fixtures::kG0Sample1, fixtures::kGamma, kSample1Temps);
  FitOptions options;
  options.initial_g0 = ghz_to_rad_s(500.0);
  EXPECT_THROW(fit_g0(dataset_from(s, curve), s.sys, options), DomainError);
}

TEST(VrsDatasetTest, NormalizeSortsAndValidates) {
  VrsDataset data;
  data.rows = {{20.0, 90e9, std::nullopt}, {1.5, 120e9, std::nullopt}};
  data.normalize();
  EXPECT_EQ(data.rows[0].temperature, 1.5);
  data.rows.push_back({1.5, 100e9, std::nullopt});
  EXPECT_THROW(data.normalize(), DomainError);
  VrsDataset bad;
  bad.rows = {{1.0, -1.0, std::nullopt}};
  EXPECT_THROW(bad.normalize(), DomainError);
}

}  // namespace
