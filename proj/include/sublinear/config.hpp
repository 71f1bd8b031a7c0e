// SPDX-License-Identifier: Apache-2.0
// Flat `key=value` run configuration with dotted keys, `#` comments and
// typed accessors whose errors name the offending key.
#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sublinear/core.hpp"

namespace sublinear {

//! Known keys and their defaults; an empty default marks a required key.
inline const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> d = {
      {"law.name", "arctan"},
      {"law.params", ""},
      {"potential.name", "quadratic"},
      {"potential.alpha", "2"},
      {"potential.coef", "1"},
      {"potential.center", "0"},
      {"mass", ""},
      {"viscosity", "0"},
      {"initial", "gaussian 0 0.5"},
      {"initial.atoms", ""},
      {"n_quantiles", "400"},
      {"n_cells", "800"},
      {"domain", "auto"},
      {"tau", "0.01"},
      {"T", "1"},
      {"ode_dt", "0.001"},
      {"inner_tol", "auto"},
      {"inner_max_iter", "50000"},
      {"atom_threshold", "0.001"},
      {"record_every", "10"},
      {"seed", "1"},
      {"flow.x0", "1"},
      {"compare.levels", "3"},
      {"steady.atom_split", ""},
      {"stationary.tol", "0.001"},
  };
  return d;
}

class RunConfig {
 public:
  RunConfig() = default;

  //! Parses `key=value` lines; blank lines and `#` comments are skipped.
  static RunConfig parse(std::istream& is, const std::string& source = "config") {
    RunConfig c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw InputError(source + ":" + std::to_string(lineno) + ": expected key=value");
      }
      c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("config: cannot read " + path);
    return parse(is, path);
  }

  //! `key=value` override (as given to --set).
  void set_override(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError("--set: expected key=value, got '" + kv + "'");
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }

  void set(const std::string& key, const std::string& value) {
    std::string k = key == "epsilon" ? "viscosity" : key;
    if (!config_defaults().count(k)) throw InputError(key + ": unknown configuration key");
    values_[k] = value;
  }

  bool has(const std::string& key) const {
    const auto it = values_.find(key);
    if (it != values_.end()) return true;
    return !config_defaults().at(key).empty();
  }

  std::string str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    const auto& d = config_defaults().at(key);
    if (d.empty() && !optional_empty(key)) throw InputError(key + ": required key is missing");
    return d;
  }

  double real(const std::string& key) const {
    const std::string s = str(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw InputError(key + ": expected a number, got '" + s + "'");
    }
  }

  double positive(const std::string& key) const {
    const double v = real(key);
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError(key + ": must be positive");
    return v;
  }

  long integer(const std::string& key, long min_value) const {
    const double v = real(key);
    if (v != std::floor(v) || v < static_cast<double>(min_value)) {
      throw InputError(key + ": expected an integer >= " + std::to_string(min_value));
    }
    return static_cast<long>(v);
  }

  //! Whitespace- or comma-separated numbers.
  std::vector<double> reals(const std::string& key) const {
    std::string s = str(key);
    for (char& ch : s) {
      if (ch == ',' || ch == ';') ch = ' ';
    }
    std::istringstream is(s);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) {
      try {
        std::size_t pos = 0;
        out.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw InputError(key + ": expected numbers, got '" + tok + "'");
      }
    }
    return out;
  }

  //! Every known key with its effective value (defaults materialized).
  std::map<std::string, std::string> resolved() const {
    std::map<std::string, std::string> out;
    for (const auto& [k, d] : config_defaults()) {
      const auto it = values_.find(k);
      out[k] = it != values_.end() ? it->second : d;
    }
    return out;
  }

 private:
  static bool optional_empty(const std::string& key) {
    return key == "law.params" || key == "initial.atoms" || key == "steady.atom_split";
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

}  // namespace sublinear
