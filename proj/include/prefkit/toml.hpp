#pragma once

// Small TOML subset: [section] headers, key = value with string / integer /
// float / boolean values, and # comments.  Enough for flat run configs;
// arrays, dates and nested tables are out of scope and rejected loudly.

#include <cctype>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "prefkit/errors.hpp"

namespace prefkit {

using TomlValue = std::variant<std::string, int64_t, double, bool>;

struct TomlDoc {
  // Keys are "section.key"; top-level keys have no dot.
  std::map<std::string, TomlValue> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  const TomlValue& at(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing config key: " + key);
    return it->second;
  }

  std::string get_string(const std::string& key) const {
    const auto& v = at(key);
    if (!std::holds_alternative<std::string>(v))
      throw ConfigError("config key is not a string: " + key);
    return std::get<std::string>(v);
  }

  int64_t get_int(const std::string& key) const {
    const auto& v = at(key);
    if (!std::holds_alternative<int64_t>(v))
      throw ConfigError("config key is not an integer: " + key);
    return std::get<int64_t>(v);
  }

  double get_double(const std::string& key) const {
    const auto& v = at(key);
    if (std::holds_alternative<int64_t>(v)) return static_cast<double>(std::get<int64_t>(v));
    if (!std::holds_alternative<double>(v))
      throw ConfigError("config key is not a number: " + key);
    return std::get<double>(v);
  }

  bool get_bool(const std::string& key) const {
    const auto& v = at(key);
    if (!std::holds_alternative<bool>(v))
      throw ConfigError("config key is not a boolean: " + key);
    return std::get<bool>(v);
  }

  std::string get_string_or(const std::string& key, const std::string& def) const {
    return has(key) ? get_string(key) : def;
  }
  int64_t get_int_or(const std::string& key, int64_t def) const {
    return has(key) ? get_int(key) : def;
  }
  double get_double_or(const std::string& key, double def) const {
    return has(key) ? get_double(key) : def;
  }
  bool get_bool_or(const std::string& key, bool def) const {
    return has(key) ? get_bool(key) : def;
  }
};

namespace detail {

inline std::string toml_trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline TomlValue toml_parse_value(const std::string& raw, size_t lineno) {
  const std::string where = " at line " + std::to_string(lineno);
  if (raw.empty()) throw ConfigError("empty value" + where);
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"')
      throw ConfigError("unterminated string" + where);
    std::string out;
    for (size_t i = 1; i + 1 < raw.size(); ++i) {
      char c = raw[i];
      if (c == '\\' && i + 2 < raw.size() + 1) {
        char n = raw[++i];
        switch (n) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: throw ConfigError("bad escape" + where);
        }
      } else if (c == '"') {
        throw ConfigError("stray quote inside string" + where);
      } else {
        out += c;
      }
    }
    return out;
  }
  if (raw == "true") return true;
  if (raw == "false") return false;
  // Numeric: integer unless it needs a decimal point or exponent.
  bool is_float = raw.find_first_of(".eE") != std::string::npos;
  try {
    size_t used = 0;
    if (is_float) {
      double d = std::stod(raw, &used);
      if (used != raw.size()) throw ConfigError("bad number" + where);
      return d;
    }
    int64_t i = std::stoll(raw, &used, 10);
    if (used != raw.size()) throw ConfigError("bad integer" + where);
    return i;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("unparseable value '" + raw + "'" + where);
  }
}

}  // namespace detail

inline TomlDoc parse_toml(const std::string& text) {
  TomlDoc doc;
  std::string section;
  size_t lineno = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++lineno;

    // Strip comments, but not inside quoted strings.
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
      if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
      else if (c == '#' && !in_str) { line = line.substr(0, i); break; }
    }
    line = detail::toml_trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("malformed section header at line " + std::to_string(lineno));
      section = detail::toml_trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("empty section name at line " + std::to_string(lineno));
      continue;
    }

    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(lineno));
    std::string key = detail::toml_trim(line.substr(0, eq));
    std::string val = detail::toml_trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
    std::string full = section.empty() ? key : section + "." + key;
    if (doc.values.count(full))
      throw ConfigError("duplicate key '" + full + "' at line " + std::to_string(lineno));
    doc.values[full] = detail::toml_parse_value(val, lineno);
  }
  return doc;
}

}  // namespace prefkit
