#include "wotlab/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace wotlab {
namespace {

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n") != std::string::npos;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

void append_cell(std::string& out, const CsvCell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) {
    out += needs_quoting(*s) ? quote(*s) : *s;
  } else if (const auto* d = std::get_if<double>(&cell)) {
    out += format_double(*d);
  } else {
    out += std::to_string(std::get<long>(cell));
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string csv_to_string(const std::vector<std::string>& header,
                          const std::vector<std::vector<CsvCell>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += needs_quoting(header[i]) ? quote(header[i]) : header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("csv: row width differs from header");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      append_cell(out, row[i]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<CsvCell>>& rows) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("csv: cannot open " + path);
  file << csv_to_string(header, rows);
  if (!file) throw std::runtime_error("csv: write failed for " + path);
}

void write_metrics_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, double>>& metrics) {
  std::vector<std::vector<CsvCell>> rows;
  rows.reserve(metrics.size());
  for (const auto& [name, value] : metrics) {
    rows.push_back({CsvCell{name}, CsvCell{value}});
  }
  write_csv(path, {"name", "value"}, rows);
}

}  // namespace wotlab
