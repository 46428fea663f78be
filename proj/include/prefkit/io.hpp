#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prefkit/errors.hpp"
#include "prefkit/hash.hpp"

namespace prefkit {

using json = nlohmann::ordered_json;

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw IoError("cannot open for reading: " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out.is_open()) throw IoError("cannot open for writing: " + path);
  return out;
}

inline std::string read_file(const std::string& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  auto out = open_output(path);
  out << content;
  if (!out.good()) throw IoError("write failed: " + path);
}

// Calls fn(line_number, parsed_object) for every non-empty line.
inline void for_each_jsonl(std::istream& in, const std::function<void(size_t, const json&)>& fn) {
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) throw DataError("malformed JSON at line " + std::to_string(lineno));
    fn(lineno, obj);
  }
}

inline void for_each_jsonl_file(const std::string& path,
                                const std::function<void(size_t, const json&)>& fn) {
  auto in = open_input(path);
  for_each_jsonl(in, fn);
}

// Tolerant variant: malformed lines are reported with ok=false instead of
// throwing, so callers can tally skips.
inline void for_each_jsonl_tolerant(
    std::istream& in, const std::function<void(size_t, const json&, bool ok)>& fn) {
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj = json::parse(line, nullptr, false);
    fn(lineno, obj, !obj.is_discarded());
  }
}

// Shortest round-trip decimal form, identical across runs.
inline std::string fmt_double(double x) { return nlohmann::json(x).dump(); }

// Stable 64-bit content checksum, reported as fixed-width hex.
inline std::string file_checksum(const std::string& path) {
  const std::string data = read_file(path);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  return std::string(buf);
}

// Minimal CSV escaping: quote when the cell contains a comma, quote or newline.
inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

// Default worker count for parallel stages, from PREFKIT_THREADS.
inline int default_thread_count() {
  const char* env = std::getenv("PREFKIT_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 256)
    throw ConfigError("PREFKIT_THREADS must be an integer in [1,256]");
  return static_cast<int>(v);
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') { cur += '"'; ++i; }
        else quoted = false;
      } else cur += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace prefkit
