#pragma once

// The command layer behind the `zpol` tool. Each command reads a RunConfig,
// writes its artifacts into the output directory and returns a process exit
// code; run_command maps the typed errors onto the remaining codes.

#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "zpol/cavity_optics.hpp"
#include "zpol/dicke_reference.hpp"
#include "zpol/io/config.hpp"
#include "zpol/io/dataset.hpp"
#include "zpol/io/output.hpp"
#include "zpol/magnetic_response.hpp"
#include "zpol/parallel.hpp"
#include "zpol/polariton_analysis.hpp"
#include "zpol/vrs_fitting.hpp"

namespace zpol::io {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNonConvergence = 4,
  kExitIo = 5,
};

struct RunContext {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
  std::string axis = "field";
  std::optional<std::string> data_path;
  std::ostream* log = &std::cout;
};

/// --out beats ZPOL_OUTPUT_DIR, which beats output.dir from the config.
inline std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag, const RunConfig& cfg) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("ZPOL_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return cfg.output.dir;
}

namespace detail {

inline bool wants(const RunConfig& cfg, const std::string& format) {
  return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), format) != cfg.output.formats.end();
}

inline double working_field(const RunConfig& cfg, const SpinSystem& sys) {
  return cfg.physics.field_t ? *cfg.physics.field_t : zero_detuning_field(sys, cfg.cavity().mode_omega());
}

inline VrsOptions vrs_options(const RunConfig& cfg) {
  VrsOptions options;
  options.resolution_floor_hz = cfg.analysis.resolution_floor_ghz * 1e9;
  options.grid_step_hz = cfg.analysis.polariton_step_ghz * 1e9;
  options.prominence_floor = cfg.analysis.prominence_floor;
  if (cfg.analysis.window_half_width_ghz) options.window_half_width_hz = *cfg.analysis.window_half_width_ghz * 1e9;
  return options;
}

inline nlohmann::json envelope(const RunConfig& cfg) {
  return {{"config", to_json(cfg)}, {"constants", constants_table()}};
}

inline void write_json(const RunContext& ctx, const std::string& name, const nlohmann::json& doc) {
  write_atomic(ctx.out_dir / name, doc.dump(2) + "\n");
}

inline std::vector<double> to_ghz(const std::vector<double>& hz) {
  std::vector<double> out(hz.size());
  for (std::size_t k = 0; k < hz.size(); ++k) out[k] = hz[k] / 1e9;
  return out;
}

}  // namespace detail

/// T(f), R(f), Im chi and mu_r of the sample on the configured grid.
inline int run_spectrum(const RunConfig& cfg, const RunContext& ctx) {
  const SpinSystem sys = cfg.spin_system();
  const CavityGeometry cavity = cfg.cavity();
  cavity.validate();
  const std::vector<double> grid = cfg.frequency_grid_hz();
  const double field = detail::working_field(cfg, sys);
  const SusceptibilityModel model = make_susceptibility_model(
      sys, field, cfg.physics.temperature_k, ghz_to_rad_s(cfg.physics.gamma_ghz), cfg.g0_rad_s());

  const Layer slab = cfg.physics.magnetic ? Layer::magnetic_slab(cavity.thickness, cavity.index, model)
                                          : Layer::dielectric(cavity.thickness, cavity.index);
  const Spectrum spectrum = transfer_matrix_spectrum(std::span<const Layer>(&slab, 1), grid);

  std::vector<double> im_chi(grid.size(), 0.0), re_mu(grid.size(), 1.0), im_mu(grid.size(), 0.0);
  if (cfg.physics.magnetic) {
    std::vector<double> omega(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) omega[k] = hz_to_rad_s(grid[k]);
    const ComplexResponse response = susceptibility(model, omega);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      im_chi[k] = response.chi_values[k].imag();
      re_mu[k] = response.mu_r_values[k].real();
      im_mu[k] = response.mu_r_values[k].imag();
    }
  }

  const PeakSet peaks = find_peaks(spectrum, grid.front(), grid.back(), cfg.analysis.prominence_floor);
  std::vector<double> peak_ghz = detail::to_ghz(peaks.frequencies_hz);
  *ctx.log << "spectrum: field " << format_number(field) << " T, g0 " << format_number(rad_s_to_ghz(model.g0))
           << " GHz, " << peaks.size() << " transmission peaks\n";
  if (peaks.coarse_grid) *ctx.log << "warning: grid step is coarse relative to the peak widths\n";

  ensure_directory(ctx.out_dir);
  const std::vector<std::string> columns{"frequency_GHz", "transmittance", "reflectance",
                                         "Im_chi",        "Re_mu_r",       "Im_mu_r"};
  if (detail::wants(cfg, "csv")) {
    CsvTable table(columns);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      table.add_row({grid[k] / 1e9, spectrum.transmittance[k], spectrum.reflectance[k], im_chi[k], re_mu[k], im_mu[k]});
    }
    write_atomic(ctx.out_dir / "spectrum.csv", table.text());
  }
  if (detail::wants(cfg, "json")) {
    nlohmann::json doc = detail::envelope(cfg);
    doc["field_T"] = field;
    doc["g0_GHz"] = rad_s_to_ghz(model.g0);
    doc["omega_epr_GHz"] = rad_s_to_ghz(model.omega_epr);
    doc["peaks_GHz"] = peak_ghz;
    doc["coarse_grid"] = peaks.coarse_grid;
    doc["columns"] = {{columns[0], detail::to_ghz(grid)},      {columns[1], spectrum.transmittance},
                      {columns[2], spectrum.reflectance},      {columns[3], im_chi},
                      {columns[4], re_mu},                     {columns[5], im_mu}};
    detail::write_json(ctx, "spectrum.json", doc);
  }
  return kExitOk;
}

/// Transmission maps over field or temperature plus a per-row splitting summary.
inline int run_sweep(const RunConfig& cfg, const RunContext& ctx) {
  const SpinSystem sys = cfg.spin_system();
  const CavityGeometry cavity = cfg.cavity();
  cavity.validate();
  const std::vector<double> grid = cfg.frequency_grid_hz();
  const double gamma = ghz_to_rad_s(cfg.physics.gamma_ghz);
  const double floor_hz = cfg.analysis.resolution_floor_ghz * 1e9;

  CsvTable map_table({"axis_value", "frequency_GHz", "transmittance"});
  CsvTable summary({"axis_value", "vrs_GHz", "resolved_flag"});
  nlohmann::json doc = detail::envelope(cfg);
  doc["axis"] = ctx.axis;
  doc["tracked_mode_GHz"] = cavity.mode_hz() / 1e9;

  if (ctx.axis == "field") {
    if (cfg.physics.field_range_t.empty()) throw ConfigError(0, "a field sweep needs physics.field_range_T");
    MapOptions options;
    options.prominence_floor = cfg.analysis.prominence_floor;
    options.threads = ctx.threads;
    if (cfg.analysis.window_half_width_ghz) options.window_half_width_hz = *cfg.analysis.window_half_width_ghz * 1e9;
    const AnticrossingMap map = anticrossing_map(sys, cavity, cfg.physics.field_range_t, cfg.physics.temperature_k,
                                                 grid, cfg.g0_rad_s(), gamma, options);
    for (std::size_t row = 0; row < map.fields.size(); ++row) {
      for (std::size_t k = 0; k < grid.size(); ++k) {
        map_table.add_row({map.fields[row], grid[k] / 1e9, map.transmittance[row][k]});
      }
      const bool both = !std::isnan(map.lower_hz[row]) && !std::isnan(map.upper_hz[row]);
      const double vrs = both ? map.separation_hz(row) : 0.0;
      summary.add_row({map.fields[row], vrs / 1e9, both && vrs >= floor_hz ? 1.0 : 0.0});
    }
    const auto row = map.anticrossing_row();
    doc["anticrossing_field_T"] = row ? nlohmann::json(map.fields[*row]) : nlohmann::json(nullptr);
    doc["cavity_modes_GHz"] = detail::to_ghz(map.cavity_modes_hz);
    doc["epr_GHz"] = detail::to_ghz(map.epr_hz);
    doc["coarse_grid"] = map.coarse_grid;
    if (map.coarse_grid) *ctx.log << "warning: grid step is coarse relative to the peak widths\n";
    *ctx.log << "sweep: " << map.fields.size() << " fields";
    if (row) *ctx.log << ", closest approach at " << format_number(map.fields[*row]) << " T";
    *ctx.log << "\n";
  } else if (ctx.axis == "temperature") {
    if (cfg.physics.temperature_range_k.empty()) {
      throw ConfigError(0, "a temperature sweep needs physics.temperature_range_K");
    }
    const std::vector<double>& temps = cfg.physics.temperature_range_k;
    const double field = detail::working_field(cfg, sys);
    VrsOptions options = detail::vrs_options(cfg);
    options.field = field;
    std::vector<std::vector<double>> rows(temps.size());
    std::vector<PolaritonMetrics> metrics(temps.size());
    parallel_for(temps.size(), ctx.threads, [&](std::size_t i) {
      const SusceptibilityModel model = make_susceptibility_model(sys, field, temps[i], gamma, cfg.g0_rad_s());
      const Layer slab = Layer::magnetic_slab(cavity.thickness, cavity.index, model);
      rows[i] = transfer_matrix_spectrum(std::span<const Layer>(&slab, 1), grid).transmittance;
      metrics[i] = vrs_at_zero_detuning(sys, cavity, temps[i], cfg.g0_rad_s(), gamma, options);
    });
    for (std::size_t i = 0; i < temps.size(); ++i) {
      for (std::size_t k = 0; k < grid.size(); ++k) map_table.add_row({temps[i], grid[k] / 1e9, rows[i][k]});
      summary.add_row({temps[i], metrics[i].vrs_hz / 1e9, metrics[i].resolved ? 1.0 : 0.0});
    }
    doc["field_T"] = field;
    *ctx.log << "sweep: " << temps.size() << " temperatures at " << format_number(field) << " T\n";
  } else {
    throw ConfigError(0, "unknown sweep axis '" + ctx.axis + "' (field, temperature)");
  }

  ensure_directory(ctx.out_dir);
  const std::string stem = "sweep_" + ctx.axis;
  write_atomic(ctx.out_dir / (stem + "_map.csv"), map_table.text());
  write_atomic(ctx.out_dir / (stem + "_summary.csv"), summary.text());
  detail::write_json(ctx, stem + ".json", doc);
  return kExitOk;
}

inline int run_fit(const RunConfig& cfg, const RunContext& ctx) {
  if (!ctx.data_path) throw ConfigError(0, "fit needs a dataset (--data)");
  VrsDataset dataset;
  dataset.rows = read_vrs_csv(*ctx.data_path);
  dataset.cavity = cfg.cavity();
  dataset.resolution_floor_hz = cfg.analysis.resolution_floor_ghz * 1e9;
  if (cfg.fit.zero_detuning_field_t) {
    dataset.zero_detuning_field = cfg.fit.zero_detuning_field_t;
  } else if (cfg.physics.field_t) {
    dataset.zero_detuning_field = cfg.physics.field_t;
  }

  FitOptions options;
  options.free_gamma = cfg.fit.free_gamma;
  options.initial_g0 = ghz_to_rad_s(cfg.fit.initial_g0_ghz);
  options.initial_gamma = ghz_to_rad_s(cfg.fit.initial_gamma_ghz.value_or(cfg.physics.gamma_ghz));
  options.g0_bounds = {ghz_to_rad_s(cfg.fit.g0_bounds_ghz[0]), ghz_to_rad_s(cfg.fit.g0_bounds_ghz[1])};
  options.gamma_bounds = {ghz_to_rad_s(cfg.fit.gamma_bounds_ghz[0]), ghz_to_rad_s(cfg.fit.gamma_bounds_ghz[1])};
  options.max_iterations = cfg.fit.max_iterations;
  options.threads = ctx.threads;
  options.vrs = detail::vrs_options(cfg);

  const SpinSystem sys = cfg.spin_system();
  FitResult result;
  try {
    result = fit_g0(dataset, sys, options);
  } catch (const DomainError& e) {
    throw DataError(0, e.what());
  }

  dataset.normalize();
  nlohmann::json residuals = nlohmann::json::array();
  for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
    const VrsRow& row = dataset.rows[i];
    const double r = result.per_point_residuals_hz[i];
    residuals.push_back({{"temperature_K", row.temperature},
                         {"observed_GHz", row.vrs_hz / 1e9},
                         {"censored", dataset.censored(row)},
                         {"residual_GHz", std::isnan(r) ? nlohmann::json(nullptr) : nlohmann::json(r / 1e9)}});
  }
  nlohmann::json doc = detail::envelope(cfg);
  doc["g0_GHz"] = rad_s_to_ghz(result.g0_fit);
  doc["g0_uncertainty_GHz"] = rad_s_to_ghz(result.g0_uncertainty);
  doc["gamma_GHz"] = rad_s_to_ghz(result.gamma_fit);
  doc["gamma_free"] = result.gamma_free;
  if (result.gamma_free) doc["gamma_uncertainty_GHz"] = rad_s_to_ghz(result.gamma_uncertainty);
  doc["residual_norm_GHz"] = result.residual_norm_hz / 1e9;
  doc["objective"] = result.objective;
  doc["gradient_norm"] = result.gradient_norm;
  doc["iterations"] = result.iterations;
  doc["starts"] = result.starts;
  doc["converged"] = result.converged;
  doc["zero_detuning_field_T"] =
      dataset.zero_detuning_field ? *dataset.zero_detuning_field : zero_detuning_field(sys, dataset.cavity.mode_omega());
  doc["residuals"] = residuals;

  ensure_directory(ctx.out_dir);
  detail::write_json(ctx, "fit_result.json", doc);
  *ctx.log << "fit: g0 = " << format_number(rad_s_to_ghz(result.g0_fit)) << " +- "
           << format_number(rad_s_to_ghz(result.g0_uncertainty)) << " GHz, rms residual "
           << format_number(result.residual_norm_hz / 1e9) << " GHz, "
           << (result.converged ? "converged" : "NOT converged") << "\n";
  return result.converged ? kExitOk : kExitNonConvergence;
}

/// Finite-N Dicke splitting against the Hopfield limit at resonance.
inline int run_dicke_compare(const RunConfig& cfg, const RunContext& ctx) {
  const double omega = ghz_to_rad_s(cfg.dicke.omega_ghz.value_or(cfg.cavity().mode_hz() / 1e9));
  const double g = cfg.dicke.eta * omega;
  const double hopfield = hopfield_branches(omega, omega, g).splitting();
  CsvTable table({"N", "dicke_splitting_GHz", "hopfield_splitting_GHz", "rel_diff"});
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> splittings(cfg.dicke.n_spins.size(), kNaN);
  std::vector<std::string> failures(cfg.dicke.n_spins.size());
  parallel_for(cfg.dicke.n_spins.size(), ctx.threads, [&](std::size_t i) {
    DickeModel model{cfg.dicke.n_spins[i], omega, omega, g, cfg.dicke.photon_cutoff, cfg.dicke.counter_rotating};
    try {
      splittings[i] = dicke_splitting(model);
    } catch (const ConvergenceError& e) {
      failures[i] = e.what();
    }
  });
  bool all_converged = true;
  for (std::size_t i = 0; i < splittings.size(); ++i) {
    const double rel = hopfield > 0.0 ? (splittings[i] - hopfield) / hopfield : (splittings[i] == 0.0 ? 0.0 : kNaN);
    table.add_row({static_cast<double>(cfg.dicke.n_spins[i]), rad_s_to_ghz(splittings[i]), rad_s_to_ghz(hopfield), rel});
    nlohmann::json entry = {{"N", cfg.dicke.n_spins[i]},
                            {"dicke_splitting_GHz", std::isnan(splittings[i]) ? nlohmann::json(nullptr)
                                                                              : nlohmann::json(rad_s_to_ghz(splittings[i]))},
                            {"hopfield_splitting_GHz", rad_s_to_ghz(hopfield)},
                            {"rel_diff", std::isnan(rel) ? nlohmann::json(nullptr) : nlohmann::json(rel)}};
    if (!failures[i].empty()) {
      entry["error"] = failures[i];
      all_converged = false;
      *ctx.log << "dicke-compare: N = " << cfg.dicke.n_spins[i] << ": " << failures[i] << "\n";
    }
    rows.push_back(entry);
  }
  nlohmann::json doc = detail::envelope(cfg);
  doc["omega_GHz"] = rad_s_to_ghz(omega);
  doc["eta"] = cfg.dicke.eta;
  doc["rows"] = rows;
  ensure_directory(ctx.out_dir);
  write_atomic(ctx.out_dir / "dicke_compare.csv", table.text());
  detail::write_json(ctx, "dicke_compare.json", doc);
  return all_converged ? kExitOk : kExitNonConvergence;
}

/// Closed-form cavity and coupling numbers; printed and written as JSON.
inline int run_diagnostics(const RunConfig& cfg, const RunContext& ctx) {
  const SpinSystem sys = cfg.spin_system();
  const CavityGeometry cavity = cfg.cavity();
  cavity.validate();
  const int j_max = std::max(1, static_cast<int>(std::floor(cfg.grid.f_max_ghz * 1e9 / cavity.fsr_hz())));
  const CavityDiagnostics fp = fp_diagnostics(cavity.index, cavity.thickness, j_max);
  const double field = detail::working_field(cfg, sys);
  const SusceptibilityModel model = make_susceptibility_model(
      sys, field, cfg.physics.temperature_k, ghz_to_rad_s(cfg.physics.gamma_ghz), cfg.g0_rad_s());

  nlohmann::json doc = detail::envelope(cfg);
  doc["free_spectral_range_GHz"] = fp.free_spectral_range_hz / 1e9;
  doc["mode_frequencies_GHz"] = detail::to_ghz(fp.mode_frequencies_hz);
  doc["linewidth_GHz"] = fp.linewidth_hz / 1e9;
  doc["surface_reflection"] = fp.surface_reflection;
  doc["tracked_mode_GHz"] = cavity.mode_hz() / 1e9;
  doc["field_T"] = field;
  doc["omega_epr_GHz"] = rad_s_to_ghz(model.omega_epr);
  doc["g0_GHz"] = rad_s_to_ghz(model.g0);
  doc["g0_closed_form_GHz"] = model.omega_epr > 0.0 ? rad_s_to_ghz(g0_closed_form(sys, model.omega_epr)) : 0.0;
  doc["effective_coupling_GHz"] = rad_s_to_ghz(effective_coupling(model));
  doc["eta"] = model.g0 / cavity.mode_omega();
  doc["dipole_density_m3"] = sys.dipole_density;

  ensure_directory(ctx.out_dir);
  detail::write_json(ctx, "diagnostics.json", doc);
  *ctx.log << "FSR " << format_number(fp.free_spectral_range_hz / 1e9) << " GHz, linewidth "
           << format_number(fp.linewidth_hz / 1e9) << " GHz, mode " << cavity.mode_index << " at "
           << format_number(cavity.mode_hz() / 1e9) << " GHz, zero detuning at " << format_number(field)
           << " T, g0 " << format_number(rad_s_to_ghz(model.g0)) << " GHz\n";
  return kExitOk;
}

/// Runs `command` and turns the typed failures into exit codes, with the
/// message on `err`.
inline int run_command(const std::function<int()>& command, std::ostream& err = std::cerr) {
  try {
    return command();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DomainError& e) {
    err << "error: invalid parameters: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace zpol::io
