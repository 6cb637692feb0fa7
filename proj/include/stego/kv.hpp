#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stego/error.hpp"

namespace stego {

// Flat key=value text with '#' comments and blank lines. Order-preserving
// writer; map-based reader. Duplicate keys are rejected.
using KeyValueMap = std::map<std::string, std::string>;

inline std::string kv_trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline KeyValueMap parse_key_value(std::istream& in) {
  KeyValueMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = kv_trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(Error::Kind::config,
           "config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = kv_trim(line.substr(0, eq));
    const std::string value = kv_trim(line.substr(eq + 1));
    if (key.empty())
      fail(Error::Kind::config,
           "config line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second)
      fail(Error::Kind::config, "config: duplicate key '" + key + "'");
  }
  return out;
}

inline KeyValueMap parse_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Error::Kind::io, "config: cannot open " + path);
  return parse_key_value(in);
}

inline void write_key_value_file(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Error::Kind::io, "config: cannot open " + path + " for write");
  for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
  if (!out) fail(Error::Kind::io, "config: write failure on " + path);
}

}  // namespace stego
