#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rulsif/types.hpp"

namespace rulsif {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

enum class HeaderMode { automatic, yes, no };

struct CsvTable {
  std::optional<std::vector<std::string>> header;
  Matrix values;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline bool parse_field(const std::string& field, double& out) {
  const char* begin = field.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end == begin) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0' && std::isfinite(out);
}

}  // namespace detail

/// Minimal numeric CSV: comma-separated finite decimals, rectangular, with
/// an optional single header line (auto-detected by trying to parse line 1
/// as numbers). Errors carry 1-based line numbers.
inline CsvTable read_csv(std::istream& in, const std::string& name,
                         HeaderMode header_mode = HeaderMode::automatic) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  CsvTable table;
  if (lines.empty()) {
    table.values.resize(0, 0);
    return table;
  }

  std::size_t first_row = 0;
  const auto head_fields = detail::split_fields(lines[0]);
  bool head_numeric = !head_fields.empty();
  for (const auto& f : head_fields) {
    double ignored;
    if (!detail::parse_field(f, ignored)) {
      head_numeric = false;
      break;
    }
  }
  const bool has_header = header_mode == HeaderMode::yes ||
                          (header_mode == HeaderMode::automatic && !head_numeric);
  if (has_header) {
    table.header = head_fields;
    first_row = 1;
  }

  const std::size_t rows = lines.size() - first_row;
  std::size_t cols = 0;
  Matrix values;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t line_no = first_row + r + 1;
    if (lines[first_row + r].empty()) {
      throw data_error(name + ":" + std::to_string(line_no) + ": empty line");
    }
    const auto fields = detail::split_fields(lines[first_row + r]);
    if (r == 0) {
      cols = fields.size();
      values.resize(static_cast<Index>(rows), static_cast<Index>(cols));
    } else if (fields.size() != cols) {
      throw data_error(name + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(cols) + " columns, got " +
                       std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double v;
      if (!detail::parse_field(fields[c], v)) {
        throw data_error(name + ":" + std::to_string(line_no) +
                         ": not a finite number: '" + fields[c] + "'");
      }
      values(static_cast<Index>(r), static_cast<Index>(c)) = v;
    }
  }
  table.values = std::move(values);
  return table;
}

inline CsvTable read_csv_file(const std::string& path,
                              HeaderMode header_mode = HeaderMode::automatic) {
  std::ifstream in(path);
  if (!in) throw data_error(path + ": cannot open file");
  return read_csv(in, path, header_mode);
}

inline SampleSet sample_set_from_csv(const std::string& path,
                                     HeaderMode header_mode = HeaderMode::automatic) {
  CsvTable table = read_csv_file(path, header_mode);
  if (table.values.rows() == 0) throw data_error(path + ": no data rows");
  return SampleSet(std::move(table.values));
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    out << fields[i];
  }
  out << '\n';
}

inline void write_matrix_csv(std::ostream& out, const Matrix& values) {
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(values(r, c));
    }
    out << '\n';
  }
}

}  // namespace rulsif
