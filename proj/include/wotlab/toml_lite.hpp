#pragma once
// Parser for the plain TOML subset used by experiment config files:
// [section] headers (dotted names allowed), key = value pairs with string,
// boolean, integer, float, and (possibly nested, multi-line) array values,
// and '#' comments. Produces a JSON object with stable key order.

#include <nlohmann/json.hpp>
#include <string>

namespace wotlab {

// Throws ConfigError with a line number on malformed input.
nlohmann::ordered_json parse_toml(const std::string& text);
nlohmann::ordered_json parse_toml_file(const std::string& path);

}  // namespace wotlab
