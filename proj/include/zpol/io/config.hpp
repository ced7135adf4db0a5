#pragma once

// Run configuration: a YAML document with one block per concern. Unknown keys
// are rejected and every error carries the line it refers to. JSON is a YAML
// subset, so the JSON echo written next to results parses back through the
// same reader.

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "json.hpp"
#include "zpol/constants.hpp"
#include "zpol/polariton_analysis.hpp"
#include "zpol/spin_ladder.hpp"

namespace zpol::io {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message)
      : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message : "config: " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct SampleBlock {
  double index = 3.8;
  double thickness_m = 180e-6;
  int mode = 1;
  bool operator==(const SampleBlock&) const = default;
};

struct SpinBlock {
  double spin = 3.5;
  double g_factor = 2.0023;
  std::optional<double> dipole_density_m3;
  std::optional<double> lattice_constant_m;
  std::optional<double> ions_per_cell;
  std::vector<double> zero_field_offsets_ghz;
  bool operator==(const SpinBlock&) const = default;
};

struct PhysicsBlock {
  std::optional<double> g0_ghz;  // pinned coupling; closed form when absent
  double gamma_ghz = 80.0;
  double temperature_k = 1.5;
  std::optional<double> field_t;  // zero detuning when absent
  std::vector<double> field_range_t;
  std::vector<double> temperature_range_k;
  bool magnetic = true;  // false: bare dielectric slab
  bool operator==(const PhysicsBlock&) const = default;
};

struct GridBlock {
  double f_min_ghz = 50.0;
  double f_max_ghz = 800.0;
  int points = 3001;
  bool operator==(const GridBlock&) const = default;
};

struct AnalysisBlock {
  double resolution_floor_ghz = 65.0;
  std::optional<double> window_half_width_ghz;  // half the FSR when absent
  double prominence_floor = 0.01;
  double polariton_step_ghz = 0.25;
  bool operator==(const AnalysisBlock&) const = default;
};

struct OutputBlock {
  std::string dir = ".";
  std::vector<std::string> formats{"csv", "json"};
  bool operator==(const OutputBlock&) const = default;
};

struct FitBlock {
  bool free_gamma = false;
  double initial_g0_ghz = 30.0;
  std::optional<double> initial_gamma_ghz;  // physics.gamma_GHz when absent
  std::array<double, 2> g0_bounds_ghz{1.0, 200.0};
  std::array<double, 2> gamma_bounds_ghz{5.0, 400.0};
  int max_iterations = 100;
  std::optional<double> zero_detuning_field_t;
  bool operator==(const FitBlock&) const = default;
};

struct DickeBlock {
  std::vector<int> n_spins{1, 2, 4, 8, 16};
  double eta = 0.05;
  std::optional<double> omega_ghz;  // cavity mode frequency when absent
  int photon_cutoff = 40;
  bool counter_rotating = true;
  bool operator==(const DickeBlock&) const = default;
};

struct RunConfig {
  SampleBlock sample;
  SpinBlock spin;
  PhysicsBlock physics;
  GridBlock grid;
  AnalysisBlock analysis;
  OutputBlock output;
  FitBlock fit;
  DickeBlock dicke;
  bool operator==(const RunConfig&) const = default;

  CavityGeometry cavity() const { return {sample.index, sample.thickness_m, sample.mode}; }

  SpinSystem spin_system() const {
    SpinSystem sys;
    sys.spin = spin.spin;
    sys.g_factor = spin.g_factor;
    if (spin.dipole_density_m3) {
      sys.dipole_density = *spin.dipole_density_m3;
    } else {
      sys.dipole_density = SpinSystem::density_from_lattice(spin.lattice_constant_m.value_or(1.238e-9),
                                                            spin.ions_per_cell.value_or(24.0));
    }
    for (double ghz : spin.zero_field_offsets_ghz) sys.zero_field_offsets.push_back(constants::planck * ghz * 1e9);
    return sys;
  }

  std::vector<double> frequency_grid_hz() const {
    std::vector<double> grid(static_cast<std::size_t>(this->grid.points));
    const double step = (this->grid.f_max_ghz - this->grid.f_min_ghz) / (this->grid.points - 1);
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = (this->grid.f_min_ghz + step * static_cast<double>(k)) * 1e9;
    return grid;
  }

  std::optional<double> g0_rad_s() const {
    return physics.g0_ghz ? std::optional<double>(ghz_to_rad_s(*physics.g0_ghz)) : std::nullopt;
  }
};

namespace detail {

inline int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

inline double as_number(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(line_of(node), "'" + key + "' must be a number");
  try {
    const double value = node.as<double>();
    if (!std::isfinite(value)) throw ConfigError(line_of(node), "'" + key + "' must be finite");
    return value;
  } catch (const YAML::BadConversion&) {
    throw ConfigError(line_of(node), "'" + key + "' must be a number, got '" + node.Scalar() + "'");
  }
}

inline int as_int(const YAML::Node& node, const std::string& key) {
  const double value = as_number(node, key);
  if (value != std::floor(value) || std::abs(value) > 1e9) {
    throw ConfigError(line_of(node), "'" + key + "' must be an integer");
  }
  return static_cast<int>(value);
}

inline bool as_bool(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<bool>();
  } catch (const YAML::BadConversion&) {
    throw ConfigError(line_of(node), "'" + key + "' must be true or false");
  }
}

inline std::string as_string(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError(line_of(node), "'" + key + "' must be a string");
  return node.Scalar();
}

inline std::vector<double> as_number_list(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ConfigError(line_of(node), "'" + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& item : node) out.push_back(as_number(item, key));
  return out;
}

inline std::array<double, 2> as_bounds(const YAML::Node& node, const std::string& key) {
  const auto values = as_number_list(node, key);
  if (values.size() != 2 || !(values[1] > values[0]) || !(values[0] > 0.0)) {
    throw ConfigError(line_of(node), "'" + key + "' must be [lower, upper] with 0 < lower < upper");
  }
  return {values[0], values[1]};
}

/// Either an explicit increasing list or {start, stop, points}.
inline std::vector<double> as_axis(const YAML::Node& node, const std::string& key) {
  std::vector<double> values;
  if (node.IsSequence()) {
    values = as_number_list(node, key);
  } else if (node.IsMap()) {
    std::optional<double> start, stop;
    std::optional<int> points;
    for (const auto& item : node) {
      const std::string sub = item.first.as<std::string>();
      if (sub == "start") {
        start = as_number(item.second, key + ".start");
      } else if (sub == "stop") {
        stop = as_number(item.second, key + ".stop");
      } else if (sub == "points") {
        points = as_int(item.second, key + ".points");
      } else {
        throw ConfigError(line_of(item.first), "unknown key '" + sub + "' in '" + key + "'");
      }
    }
    if (!start || !stop || !points) throw ConfigError(line_of(node), "'" + key + "' needs start, stop and points");
    if (*points < 1) throw ConfigError(line_of(node), "'" + key + ".points' must be >= 1");
    if (*points == 1) {
      if (*stop != *start) throw ConfigError(line_of(node), "single-point '" + key + "' needs start == stop");
      values = {*start};
    } else {
      for (int k = 0; k < *points; ++k) values.push_back(*start + (*stop - *start) * k / (*points - 1));
    }
  } else {
    throw ConfigError(line_of(node), "'" + key + "' must be a list or {start, stop, points}");
  }
  if (values.empty()) throw ConfigError(line_of(node), "'" + key + "' is empty");
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k] < 0.0) throw ConfigError(line_of(node), "'" + key + "' values must be nonnegative");
    if (k > 0 && !(values[k] > values[k - 1])) throw ConfigError(line_of(node), "'" + key + "' must be increasing");
  }
  return values;
}

inline void require_positive(double value, const YAML::Node& node, const std::string& key) {
  if (!(value > 0.0)) throw ConfigError(line_of(node), "'" + key + "' must be positive");
}

template <typename Handler>
void for_each_key(const YAML::Node& block, const std::string& name, Handler&& handle) {
  if (!block.IsMap()) throw ConfigError(line_of(block), "block '" + name + "' must be a mapping");
  for (const auto& item : block) {
    const std::string key = item.first.as<std::string>();
    if (!handle(key, item.second)) {
      throw ConfigError(line_of(item.first), "unknown key '" + key + "' in block '" + name + "'");
    }
  }
}

}  // namespace detail

inline RunConfig parse_config_text(const std::string& text) {
  using namespace detail;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.mark.line + 1, e.msg);
  }
  RunConfig cfg;
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) throw ConfigError(line_of(root), "top level must be a mapping of blocks");

  int grid_f_max_line = 0;
  for (const auto& block : root) {
    const std::string name = block.first.as<std::string>();
    const YAML::Node& body = block.second;
    if (name == "sample") {
      for_each_key(body, name, [&](const std::string& key, const YAML::Node& v) {
        if (key == "n") {
          cfg.sample.index = as_number(v, key);
          if (!(cfg.sample.index > 1.0)) throw ConfigError(line_of(v), "'n' must exceed 1");
        } else if (key == "thickness_m") {
          cfg.sample.thickness_m = as_number(v, key);
          require_positive(cfg.sample.thickness_m, v, key);
        } else if (key == "mode") {
          cfg.sample.mode = as_int(v, key);
          if (cfg.sample.mode < 1) throw ConfigError(line_of(v), "'mode' must be >= 1");
        } else {
          return false;
        }
        return true;
      });
    } else if (name == "spin") {
      int density_line = 0, lattice_line = 0;
      for_each_key(body, name, [&](const std::string& key, const YAML::Node& v) {
        if (key == "s") {
          cfg.spin.spin = as_number(v, key);
          const double twice = 2.0 * cfg.spin.spin;
          if (!(cfg.spin.spin > 0.0) || twice != std::round(twice)) {
            throw ConfigError(line_of(v), "'s' must be a positive half-integer");
          }
        } else if (key == "g_factor") {
          cfg.spin.g_factor = as_number(v, key);
          require_positive(cfg.spin.g_factor, v, key);
        } else if (key == "dipole_density_m3") {
          cfg.spin.dipole_density_m3 = as_number(v, key);
          require_positive(*cfg.spin.dipole_density_m3, v, key);
          density_line = line_of(v);
        } else if (key == "lattice_constant_m") {
          cfg.spin.lattice_constant_m = as_number(v, key);
          require_positive(*cfg.spin.lattice_constant_m, v, key);
          lattice_line = line_of(v);
        } else if (key == "ions_per_cell") {
          cfg.spin.ions_per_cell = as_number(v, key);
          require_positive(*cfg.spin.ions_per_cell, v, key);
          lattice_line = lattice_line ? lattice_line : line_of(v);
        } else if (key == "zero_field_offsets_GHz") {
          cfg.spin.zero_field_offsets_ghz = as_number_list(v, key);
        } else {
          return false;
        }
        return true;
      });
      if (density_line && lattice_line) {
        throw ConfigError(std::max(density_line, lattice_line),
                          "dipole_density_m3 and lattice_constant_m/ions_per_cell are mutually exclusive");
      }
      const auto levels = static_cast<std::size_t>(std::lround(2.0 * cfg.spin.spin)) + 1;
      if (!cfg.spin.zero_field_offsets_ghz.empty() && cfg.spin.zero_field_offsets_ghz.size() != levels) {
        throw ConfigError(line_of(body), "zero_field_offsets_GHz needs 2s+1 = " + std::to_string(levels) + " entries");
      }
    } else if (name == "physics") {
      for_each_key(body, name, [&](const std::string& key, const YAML::Node& v) {
        if (key == "g0_GHz") {
          cfg.physics.g0_ghz = as_number(v, key);
          if (*cfg.physics.g0_ghz < 0.0) throw ConfigError(line_of(v), "'g0_GHz' must be nonnegative");
        } else if (key == "gamma_GHz") {
          cfg.physics.gamma_ghz = as_number(v, key);
          require_positive(cfg.physics.gamma_ghz, v, key);
        } else if (key == "temperature_K") {
          cfg.physics.temperature_k = as_number(v, key);
          if (cfg.physics.temperature_k < 0.0) throw ConfigError(line_of(v), "'temperature_K' must be nonnegative");
        } else if (key == "field_T") {
          cfg.physics.field_t = as_number(v, key);
          if (*cfg.physics.field_t < 0.0) throw ConfigError(line_of(v), "'field_T' must be nonnegative");
        } else if (key == "field_range_T") {
          cfg.physics.field_range_t = as_axis(v, key);
        } else if (key == "temperature_range_K") {
          cfg.physics.temperature_range_k = as_axis(v, key);
        } else if (key == "magnetic") {
          cfg.physics.magnetic = as_bool(v, key);
        } else {
          return false;
        }
        return true;
      });
    } else if (name == "grid") {
      for_each_key(body, name, [&](const std::string& key, const YAML::Node& v) {
        if (key == "f_min_GHz") {
          cfg.grid.f_min_ghz = as_number(v, key);
          require_positive(cfg.grid.f_min_ghz, v, key);
        } else if (key == "f_max_GHz") {
          cfg.grid.f_max_ghz = as_number(v, key);
          require_positive(cfg.grid.f_max_ghz, v, key);
          grid_f_max_line = line_of(v);
        } else if (key == "points") {
          cfg.grid.points = as_int(v, key);
          if (cfg.grid.points < 64) throw ConfigError(line_of(v), "'points' must be >= 64");
        } else {
          return false;
        }
        return true;
      });
    } else if (name == "analysis") {
      for_each_key(body, name, [&](const std::string& key, const YAML::Node& v) {
        if (key == "resolution_floor_GHz") {
          cfg.analysis.resolution_floor_ghz = as_number(v, key);
          if (cfg.analysis.resolution_floor_ghz < 0.0) throw ConfigError(line_of(v), "'" + key + "' must be nonnegative");
        } else if (key == "window_half_width_GHz") {
          cfg.analysis.window_half_width_ghz = as_number(v, key);
          require_positive(*cfg.analysis.window_half_width_ghz, v, key);
        } else if (key == "prominence_floor") {
          cfg.analysis.prominence_floor = as_number(v, key);
          if (cfg.analysis.prominence_floor < 0.0) throw ConfigError(line_of(v), "'" + key + "' must be nonnegative");
        } else if (key == "polariton_step_GHz") {
          cfg.analysis.polariton_step_ghz = as_number(v, key);
          require_positive(cfg.analysis.polariton_step_ghz, v, key);
        } else {
          return false;
        }
        return true;
      });
    } else if (name == "output") {
      for_each_key(body, name, [&](const std::string& key, const YAML::Node& v) {
        if (key == "dir") {
          cfg.output.dir = as_string(v, key);
        } else if (key == "formats") {
          if (!v.IsSequence()) throw ConfigError(line_of(v), "'formats' must be a list");
          cfg.output.formats.clear();
          for (const auto& item : v) {
            const std::string format = as_string(item, key);
            if (format != "csv" && format != "json") {
              throw ConfigError(line_of(item), "unknown output format '" + format + "' (csv, json)");
            }
            cfg.output.formats.push_back(format);
          }
        } else {
          return false;
        }
        return true;
      });
    } else if (name == "fit") {
      for_each_key(body, name, [&](const std::string& key, const YAML::Node& v) {
        if (key == "free_gamma") {
          cfg.fit.free_gamma = as_bool(v, key);
        } else if (key == "initial_g0_GHz") {
          cfg.fit.initial_g0_ghz = as_number(v, key);
          require_positive(cfg.fit.initial_g0_ghz, v, key);
        } else if (key == "initial_gamma_GHz") {
          cfg.fit.initial_gamma_ghz = as_number(v, key);
          require_positive(*cfg.fit.initial_gamma_ghz, v, key);
        } else if (key == "g0_bounds_GHz") {
          cfg.fit.g0_bounds_ghz = as_bounds(v, key);
        } else if (key == "gamma_bounds_GHz") {
          cfg.fit.gamma_bounds_ghz = as_bounds(v, key);
        } else if (key == "max_iterations") {
          cfg.fit.max_iterations = as_int(v, key);
          if (cfg.fit.max_iterations < 1) throw ConfigError(line_of(v), "'max_iterations' must be >= 1");
        } else if (key == "zero_detuning_field_T") {
          cfg.fit.zero_detuning_field_t = as_number(v, key);
          require_positive(*cfg.fit.zero_detuning_field_t, v, key);
        } else {
          return false;
        }
        return true;
      });
    } else if (name == "dicke") {
      for_each_key(body, name, [&](const std::string& key, const YAML::Node& v) {
        if (key == "n_spins") {
          cfg.dicke.n_spins.clear();
          for (double n : as_number_list(v, key)) {
            if (n < 1 || n != std::floor(n)) throw ConfigError(line_of(v), "'n_spins' entries must be integers >= 1");
            cfg.dicke.n_spins.push_back(static_cast<int>(n));
          }
        } else if (key == "eta") {
          cfg.dicke.eta = as_number(v, key);
          if (cfg.dicke.eta < 0.0) throw ConfigError(line_of(v), "'eta' must be nonnegative");
        } else if (key == "omega_GHz") {
          cfg.dicke.omega_ghz = as_number(v, key);
          require_positive(*cfg.dicke.omega_ghz, v, key);
        } else if (key == "photon_cutoff") {
          cfg.dicke.photon_cutoff = as_int(v, key);
          if (cfg.dicke.photon_cutoff < 2) throw ConfigError(line_of(v), "'photon_cutoff' must be >= 2");
        } else if (key == "counter_rotating") {
          cfg.dicke.counter_rotating = as_bool(v, key);
        } else {
          return false;
        }
        return true;
      });
    } else {
      throw ConfigError(line_of(block.first), "unknown block '" + name + "'");
    }
  }
  if (!(cfg.grid.f_max_ghz > cfg.grid.f_min_ghz)) {
    throw ConfigError(grid_f_max_line, "empty frequency range: f_max_GHz must exceed f_min_GHz");
  }
  if (cfg.fit.initial_g0_ghz < cfg.fit.g0_bounds_ghz[0] || cfg.fit.initial_g0_ghz > cfg.fit.g0_bounds_ghz[1]) {
    throw ConfigError(0, "fit.initial_g0_GHz lies outside fit.g0_bounds_GHz");
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

/// Full echo of the effective configuration, accepted by parse_config_text.
inline nlohmann::json to_json(const RunConfig& cfg) {
  using nlohmann::json;
  json spin = {{"s", cfg.spin.spin}, {"g_factor", cfg.spin.g_factor}};
  if (cfg.spin.dipole_density_m3) spin["dipole_density_m3"] = *cfg.spin.dipole_density_m3;
  if (cfg.spin.lattice_constant_m) spin["lattice_constant_m"] = *cfg.spin.lattice_constant_m;
  if (cfg.spin.ions_per_cell) spin["ions_per_cell"] = *cfg.spin.ions_per_cell;
  if (!cfg.spin.zero_field_offsets_ghz.empty()) spin["zero_field_offsets_GHz"] = cfg.spin.zero_field_offsets_ghz;

  json physics = {{"gamma_GHz", cfg.physics.gamma_ghz},
                  {"temperature_K", cfg.physics.temperature_k},
                  {"magnetic", cfg.physics.magnetic}};
  if (cfg.physics.g0_ghz) physics["g0_GHz"] = *cfg.physics.g0_ghz;
  if (cfg.physics.field_t) physics["field_T"] = *cfg.physics.field_t;
  if (!cfg.physics.field_range_t.empty()) physics["field_range_T"] = cfg.physics.field_range_t;
  if (!cfg.physics.temperature_range_k.empty()) physics["temperature_range_K"] = cfg.physics.temperature_range_k;

  json analysis = {{"resolution_floor_GHz", cfg.analysis.resolution_floor_ghz},
                   {"prominence_floor", cfg.analysis.prominence_floor},
                   {"polariton_step_GHz", cfg.analysis.polariton_step_ghz}};
  if (cfg.analysis.window_half_width_ghz) analysis["window_half_width_GHz"] = *cfg.analysis.window_half_width_ghz;

  json fit = {{"free_gamma", cfg.fit.free_gamma},
              {"initial_g0_GHz", cfg.fit.initial_g0_ghz},
              {"g0_bounds_GHz", cfg.fit.g0_bounds_ghz},
              {"gamma_bounds_GHz", cfg.fit.gamma_bounds_ghz},
              {"max_iterations", cfg.fit.max_iterations}};
  if (cfg.fit.initial_gamma_ghz) fit["initial_gamma_GHz"] = *cfg.fit.initial_gamma_ghz;
  if (cfg.fit.zero_detuning_field_t) fit["zero_detuning_field_T"] = *cfg.fit.zero_detuning_field_t;

  json dicke = {{"n_spins", cfg.dicke.n_spins},
                {"eta", cfg.dicke.eta},
                {"photon_cutoff", cfg.dicke.photon_cutoff},
                {"counter_rotating", cfg.dicke.counter_rotating}};
  if (cfg.dicke.omega_ghz) dicke["omega_GHz"] = *cfg.dicke.omega_ghz;

  return {{"sample", {{"n", cfg.sample.index}, {"thickness_m", cfg.sample.thickness_m}, {"mode", cfg.sample.mode}}},
          {"spin", spin},
          {"physics", physics},
          {"grid", {{"f_min_GHz", cfg.grid.f_min_ghz}, {"f_max_GHz", cfg.grid.f_max_ghz}, {"points", cfg.grid.points}}},
          {"analysis", analysis},
          {"output", {{"dir", cfg.output.dir}, {"formats", cfg.output.formats}}},
          {"fit", fit},
          {"dicke", dicke}};
}

inline nlohmann::json constants_table() {
  return {{"source", "CODATA 2018"},
          {"planck_J_s", constants::planck},
          {"hbar_J_s", constants::hbar},
          {"boltzmann_J_per_K", constants::boltzmann},
          {"bohr_magneton_J_per_T", constants::bohr_magneton},
          {"vacuum_permeability_N_per_A2", constants::vacuum_permeability},
          {"speed_of_light_m_per_s", constants::speed_of_light}};
}

}  // namespace zpol::io
