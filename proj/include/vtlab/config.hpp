#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vtlab/core.hpp"

namespace vtlab {

// Flat dotted-key configuration. The text form is one `key = value` per
// line with '#' comments; the JSON form nests objects and flattens to the
// same keys. Both parse into the same map, so a run is a pure function of
// (canonical key-value set, seed).
struct RawConfig {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing config key: " + key);
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  double get_double(const std::string& key) const {
    try {
      std::size_t used = 0;
      const double v = std::stod(get(key), &used);
      if (used != get(key).size())
        throw ConfigError("config key " + key + ": trailing characters");
      return v;
    } catch (const ConfigError&) {
      throw;
    } catch (...) {
      throw ConfigError("config key " + key + ": expected a number, got '" +
                        get(key) + "'");
    }
  }

  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  std::int64_t get_int(const std::string& key) const {
    try {
      std::size_t used = 0;
      const std::int64_t v = std::stoll(get(key), &used);
      if (used != get(key).size())
        throw ConfigError("config key " + key + ": trailing characters");
      return v;
    } catch (const ConfigError&) {
      throw;
    } catch (...) {
      throw ConfigError("config key " + key + ": expected an integer, got '" +
                        get(key) + "'");
    }
  }

  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::vector<double> get_list(const std::string& key) const {
    std::vector<double> out;
    std::istringstream ss(get(key));
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        out.push_back(std::stod(cell));
      } catch (...) {
        throw ConfigError("config key " + key + ": bad list entry '" + cell +
                          "'");
      }
    }
    if (out.empty()) throw ConfigError("config key " + key + ": empty list");
    return out;
  }

  // Canonical dump: sorted keys, one per line. Input for the config hash.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values) {
      out += k;
      out += '=';
      out += v;
      out += '\n';
    }
    return out;
  }

  // FNV-1a over the canonical form.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : canonical()) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    return h;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline void flatten_json(const nlohmann::json& j, const std::string& prefix,
                         RawConfig& cfg) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      flatten_json(value, prefix.empty() ? key : prefix + "." + key, cfg);
    }
    return;
  }
  if (j.is_array()) {
    std::string list;
    for (const auto& e : j) {
      if (!list.empty()) list += ',';
      if (e.is_number_integer())
        list += std::to_string(e.get<std::int64_t>());
      else if (e.is_number())
        list += nlohmann::json(e.get<double>()).dump();
      else
        throw ConfigError("config key " + prefix +
                          ": arrays may only hold numbers");
    }
    cfg.values[prefix] = list;
    return;
  }
  if (j.is_string())
    cfg.values[prefix] = j.get<std::string>();
  else if (j.is_boolean())
    cfg.values[prefix] = j.get<bool>() ? "true" : "false";
  else if (j.is_number_integer())
    cfg.values[prefix] = std::to_string(j.get<std::int64_t>());
  else if (j.is_number())
    cfg.values[prefix] = nlohmann::json(j.get<double>()).dump();
  else
    throw ConfigError("config key " + prefix + ": unsupported JSON value");
}

}  // namespace detail

inline RawConfig parse_config_text(std::istream& in) {
  RawConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key or value");
    cfg.values[key] = value;
  }
  return cfg;
}

inline RawConfig parse_config_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad JSON config: ") + e.what());
  }
  RawConfig cfg;
  detail::flatten_json(j, "", cfg);
  return cfg;
}

inline RawConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
    return parse_config_json(in);
  return parse_config_text(in);
}

}  // namespace vtlab
