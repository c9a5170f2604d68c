#include "wotlab/toml_lite.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "wotlab/errors.hpp"

namespace wotlab {
namespace {

using nlohmann::ordered_json;

struct Cursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() {
    char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream msg;
    msg << "config parse error at line " << line << ": " << what;
    throw ConfigError(msg.str());
  }

  // Skips spaces and tabs (not newlines).
  void skip_blanks() {
    while (!done() && (peek() == ' ' || peek() == '\t')) take();
  }

  // Skips whitespace including newlines, plus comments. Used inside arrays.
  void skip_space_and_comments() {
    while (!done()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        take();
      } else if (c == '#') {
        while (!done() && peek() != '\n') take();
      } else {
        break;
      }
    }
  }
};

bool is_bare_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_bare_key(Cursor& cur) {
  std::string key;
  while (!cur.done() && is_bare_char(cur.peek())) key += cur.take();
  if (key.empty()) cur.fail("expected a key");
  return key;
}

std::string parse_string(Cursor& cur) {
  cur.take();  // opening quote
  std::string out;
  while (true) {
    if (cur.done()) cur.fail("unterminated string");
    char c = cur.take();
    if (c == '"') break;
    if (c == '\n') cur.fail("newline inside string");
    if (c == '\\') {
      if (cur.done()) cur.fail("dangling escape");
      char e = cur.take();
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: cur.fail("unsupported escape sequence");
      }
    } else {
      out += c;
    }
  }
  return out;
}

ordered_json parse_number(Cursor& cur) {
  std::string token;
  while (!cur.done()) {
    const char c = cur.peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
        c == '.' || c == 'e' || c == 'E' || c == '_') {
      if (c != '_') token += c;
      cur.take();
    } else {
      break;
    }
  }
  if (token.empty()) cur.fail("expected a number");
  const bool looks_integer =
      token.find_first_of(".eE") == std::string::npos;
  errno = 0;
  char* end = nullptr;
  if (looks_integer) {
    const long long value = std::strtoll(token.c_str(), &end, 10);
    if (errno != 0 || end != token.c_str() + token.size()) {
      cur.fail("invalid integer '" + token + "'");
    }
    return ordered_json(value);
  }
  const double value = std::strtod(token.c_str(), &end);
  if (errno != 0 || end != token.c_str() + token.size()) {
    cur.fail("invalid number '" + token + "'");
  }
  return ordered_json(value);
}

ordered_json parse_value(Cursor& cur);

ordered_json parse_array(Cursor& cur) {
  cur.take();  // '['
  ordered_json arr = ordered_json::array();
  cur.skip_space_and_comments();
  if (!cur.done() && cur.peek() == ']') {
    cur.take();
    return arr;
  }
  while (true) {
    cur.skip_space_and_comments();
    arr.push_back(parse_value(cur));
    cur.skip_space_and_comments();
    if (cur.done()) cur.fail("unterminated array");
    const char c = cur.take();
    if (c == ']') break;
    if (c != ',') cur.fail("expected ',' or ']' in array");
    cur.skip_space_and_comments();
    if (!cur.done() && cur.peek() == ']') {  // trailing comma
      cur.take();
      break;
    }
  }
  return arr;
}

ordered_json parse_value(Cursor& cur) {
  if (cur.done()) cur.fail("expected a value");
  const char c = cur.peek();
  if (c == '"') return ordered_json(parse_string(cur));
  if (c == '[') return parse_array(cur);
  if (std::isalpha(static_cast<unsigned char>(c))) {
    std::string word = parse_bare_key(cur);
    if (word == "true") return ordered_json(true);
    if (word == "false") return ordered_json(false);
    cur.fail("unquoted value '" + word + "' (strings need double quotes)");
  }
  return parse_number(cur);
}

std::vector<std::string> parse_dotted_name(Cursor& cur) {
  std::vector<std::string> parts;
  parts.push_back(parse_bare_key(cur));
  while (!cur.done() && cur.peek() == '.') {
    cur.take();
    parts.push_back(parse_bare_key(cur));
  }
  return parts;
}

ordered_json* descend(ordered_json& root, const std::vector<std::string>& path,
                      Cursor& cur) {
  ordered_json* node = &root;
  for (const auto& part : path) {
    if (!node->is_object()) cur.fail("'" + part + "' conflicts with a value");
    node = &(*node)[part];
    if (node->is_null()) *node = ordered_json::object();
  }
  return node;
}

}  // namespace

ordered_json parse_toml(const std::string& text) {
  Cursor cur{text};
  ordered_json root = ordered_json::object();
  ordered_json* section = &root;
  while (!cur.done()) {
    cur.skip_blanks();
    if (cur.done()) break;
    const char c = cur.peek();
    if (c == '\n' || c == '\r') {
      cur.take();
      continue;
    }
    if (c == '#') {
      while (!cur.done() && cur.peek() != '\n') cur.take();
      continue;
    }
    if (c == '[') {
      cur.take();
      if (!cur.done() && cur.peek() == '[') {
        cur.fail("array-of-tables syntax is not supported");
      }
      cur.skip_blanks();
      const auto path = parse_dotted_name(cur);
      cur.skip_blanks();
      if (cur.done() || cur.take() != ']') cur.fail("expected ']'");
      section = descend(root, path, cur);
      continue;
    }
    // key = value
    const auto key_path = parse_dotted_name(cur);
    cur.skip_blanks();
    if (cur.done() || cur.take() != '=') cur.fail("expected '='");
    cur.skip_blanks();
    ordered_json value = parse_value(cur);
    cur.skip_blanks();
    if (!cur.done() && cur.peek() == '#') {
      while (!cur.done() && cur.peek() != '\n') cur.take();
    }
    if (!cur.done() && cur.peek() != '\n' && cur.peek() != '\r') {
      cur.fail("unexpected trailing characters after value");
    }
    ordered_json* holder = section;
    if (key_path.size() > 1) {
      holder = descend(*section,
                       {key_path.begin(), key_path.end() - 1}, cur);
    }
    const std::string& key = key_path.back();
    if (holder->contains(key)) cur.fail("duplicate key '" + key + "'");
    (*holder)[key] = std::move(value);
  }
  return root;
}

ordered_json parse_toml_file(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_toml(buffer.str());
}

}  // namespace wotlab
