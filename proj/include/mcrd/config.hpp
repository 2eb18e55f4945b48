#pragma once

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "mcrd/error.hpp"
#include "mcrd/params.hpp"

namespace mcrd {

/// Flat key=value configuration. '#' starts a comment; blank lines are skipped.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto key_end = line.find('=');
      if (trim(line).empty()) continue;
      if (key_end == std::string::npos)
        throw DomainError("config line " + std::to_string(lineno) + ": expected key=value");
      auto key = trim(line.substr(0, key_end));
      auto value = trim(line.substr(key_end + 1));
      if (key.empty())
        throw DomainError("config line " + std::to_string(lineno) + ": empty key");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  static KeyValueConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file " + path);
    return parse(in);
  }

  static KeyValueConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  bool contains(const std::string& key) const { return values_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> get_double(const std::string& key) const {
    auto s = get(key);
    if (!s) return std::nullopt;
    return to_double(*s, key);
  }

  /// Entries of `overrides` win.
  void merge(const KeyValueConfig& overrides) {
    for (const auto& [k, v] : overrides.values_) values_[k] = v;
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

  static double to_double(const std::string& s, const std::string& key) {
    double out = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
      throw DomainError("value for '" + key + "' is not a number: " + s);
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

inline bool has_physical_keys(const KeyValueConfig& cfg) {
  for (const char* k : {"k_N", "k_I", "D_N", "D_I", "A", "L"})
    if (cfg.contains(k)) return true;
  return false;
}

/// Physical keys k_N,k_I,D_N,D_I,A,L over `defaults`.
inline PhysicalParams physical_from(const KeyValueConfig& cfg, PhysicalParams p = {}) {
  if (auto v = cfg.get_double("k_N")) p.k_N = *v;
  if (auto v = cfg.get_double("k_I")) p.k_I = *v;
  if (auto v = cfg.get_double("D_N")) p.D_N = *v;
  if (auto v = cfg.get_double("D_I")) p.D_I = *v;
  if (auto v = cfg.get_double("A")) p.A = *v;
  if (auto v = cfg.get_double("L")) p.L = *v;
  return p;
}

/// Reduced keys kappa,tau,d,eps,M,ell. When any physical key is present the
/// physical set is converted first and reduced keys override the result.
inline ReducedParams reduced_from(const KeyValueConfig& cfg, ReducedParams r = {}) {
  if (has_physical_keys(cfg)) r = to_reduced(physical_from(cfg, to_physical(r)));
  if (auto v = cfg.get_double("kappa")) r.kappa = *v;
  if (auto v = cfg.get_double("tau")) r.tau = *v;
  if (auto v = cfg.get_double("d")) r.d = *v;
  if (auto v = cfg.get_double("eps")) r.eps = *v;
  if (auto v = cfg.get_double("M")) r.M = *v;
  if (auto v = cfg.get_double("ell")) r.ell = *v;
  return r;
}

}  // namespace mcrd
