#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "proden/datagen.hpp"
#include "proden/errors.hpp"

namespace proden {

// Flat key/value settings read from an INI-style file:
//
//   # comment
//   [train]
//   epochs = 500        ->  train.epochs = 500
//
// Keys outside any section are stored as-is. Overrides use the dotted form
// ("train.epochs=50").
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string section;
    std::string raw;
    std::size_t line_number = 0;
    while (std::getline(in, raw)) {
      ++line_number;
      std::string_view line = detail::trim(raw);
      if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) {
        line = detail::trim(line.substr(0, hash));
      }
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("line " + std::to_string(line_number) + ": unterminated section");
        section = std::string(detail::trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_number) + ": expected key = value");
      const std::string key(detail::trim(line.substr(0, eq)));
      if (key.empty()) throw ConfigError("line " + std::to_string(line_number) + ": empty key");
      cfg.set(section.empty() ? key : section + "." + key, std::string(detail::trim(line.substr(eq + 1))));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    return parse(in);
  }

  void set(const std::string& key, std::string value) {
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    values_[key] = std::move(value);
  }

  // "key=value"
  void apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ConfigError("override '" + std::string(assignment) + "' is not KEY=VALUE");
    }
    set(std::string(detail::trim(assignment.substr(0, eq))), std::string(detail::trim(assignment.substr(eq + 1))));
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto v = detail::parse_double(get(key, ""));
    if (!v) throw ConfigError("'" + key + "' must be a number");
    return *v;
  }

  long long get_int(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const auto v = detail::parse_integer(get(key, ""));
    if (!v) throw ConfigError("'" + key + "' must be an integer");
    return *v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto v = get(key, "");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("'" + key + "' must be true or false");
  }

  // Keys present in the file that nothing asked for; usually typos.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) out.push_back(k);
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

// Comma-separated list with surrounding whitespace removed.
inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (detail::trim(s).empty()) return out;
  for (auto part : detail::split(s, ',')) out.emplace_back(part);
  return out;
}

}  // namespace proden
