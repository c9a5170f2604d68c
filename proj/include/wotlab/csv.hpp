#pragma once
// Deterministic CSV output: header row, '.' decimal separator, doubles
// printed with %.17g (round-trip exact), '\n' line endings.

#include <string>
#include <variant>
#include <vector>

namespace wotlab {

using CsvCell = std::variant<std::string, double, long>;

std::string format_double(double value);  // %.17g, C locale

std::string csv_to_string(const std::vector<std::string>& header,
                          const std::vector<std::vector<CsvCell>>& rows);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<CsvCell>>& rows);

// Two-column convenience for metric tables: name,value.
void write_metrics_csv(const std::string& path,
                       const std::vector<std::pair<std::string, double>>& metrics);

}  // namespace wotlab
