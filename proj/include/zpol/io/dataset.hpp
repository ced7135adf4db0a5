#pragma once

// Measured splittings as CSV: header `temperature_K,vrs_GHz[,vrs_err_GHz]`,
// one row per temperature. Blank lines and lines starting with '#' are
// skipped. Errors name the 1-based file line.

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "zpol/vrs_fitting.hpp"

namespace zpol::io {

class DataError : public std::runtime_error {
 public:
  DataError(int line, const std::string& message)
      : std::runtime_error(line > 0 ? "data line " + std::to_string(line) + ": " + message : "data: " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream stream(line);
  std::string field;
  while (std::getline(stream, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_cell(const std::string& text, int line, const std::string& column) {
  if (text.empty()) throw DataError(line, "empty value in column '" + column + "'");
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(value)) {
    throw DataError(line, "column '" + column + "' is not a finite number: '" + text + "'");
  }
  return value;
}

}  // namespace detail

inline std::vector<VrsRow> read_vrs_csv(std::istream& in) {
  std::string text;
  int line = 0;
  std::optional<std::vector<std::string>> header;
  std::vector<VrsRow> rows;
  std::vector<int> row_lines;
  while (std::getline(in, text)) {
    ++line;
    const std::string trimmed = detail::trim(text);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto cells = detail::split_csv(trimmed);
    if (!header) {
      const bool two = cells.size() == 2;
      const bool three = cells.size() == 3 && cells[2] == "vrs_err_GHz";
      if (!(two || three) || cells[0] != "temperature_K" || cells[1] != "vrs_GHz") {
        throw DataError(line, "header must be 'temperature_K,vrs_GHz' optionally followed by ',vrs_err_GHz'");
      }
      header = cells;
      continue;
    }
    if (cells.size() != header->size()) {
      throw DataError(line, "expected " + std::to_string(header->size()) + " columns, found " +
                                std::to_string(cells.size()));
    }
    VrsRow row;
    row.temperature = detail::parse_cell(cells[0], line, "temperature_K");
    if (!(row.temperature > 0.0)) throw DataError(line, "temperature_K must be positive");
    const double vrs_ghz = detail::parse_cell(cells[1], line, "vrs_GHz");
    if (vrs_ghz < 0.0) throw DataError(line, "vrs_GHz must be nonnegative");
    row.vrs_hz = vrs_ghz * 1e9;
    if (cells.size() == 3) {
      const double err = detail::parse_cell(cells[2], line, "vrs_err_GHz");
      if (!(err > 0.0)) throw DataError(line, "vrs_err_GHz must be positive");
      row.uncertainty_hz = err * 1e9;
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].temperature == row.temperature) {
        throw DataError(line, "temperature duplicates line " + std::to_string(row_lines[k]));
      }
    }
    rows.push_back(row);
    row_lines.push_back(line);
  }
  if (!header) throw DataError(0, "file is empty (no header)");
  if (rows.empty()) throw DataError(0, "file has a header but no rows");
  return rows;
}

inline std::vector<VrsRow> read_vrs_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(0, "cannot read dataset '" + path + "'");
  return read_vrs_csv(in);
}

}  // namespace zpol::io
