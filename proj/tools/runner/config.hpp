#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "flatten/rational.hpp"

namespace flatten::runner {

inline constexpr int kSchemaVersion = 1;

/// Flat `key.path = value` text. Blank lines and `#` comments are ignored;
/// `schema = 1` is mandatory. Every lookup records the resolved value
/// (defaults included) for the run manifest, and keys never looked up are
/// reported as errors so typos do not pass silently.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> words(const std::string& key, const std::vector<std::string>& fallback) const;
  /// Exact value of each list entry (decimal or a/b).
  std::vector<Rational> rationals(const std::string& key) const;

  /// Throws ConfigError naming the first key never looked up.
  void reject_unused() const;

  const std::map<std::string, std::string>& resolved() const noexcept { return resolved_; }

 private:
  const std::string& raw(const std::string& key) const;
  void record(const std::string& key, const std::string& value) const;

  std::string source_;
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> resolved_;
  mutable std::set<std::string> used_;
};

/// ConfigError for `key`.
[[noreturn]] void config_error(const std::string& key, const std::string& what);

/// Splits a list on commas (whitespace around items is dropped).
std::vector<std::string> split_list(const std::string& s, char sep = ',');

/// Parses "1.5", "-3e-2" or "1/3" exactly.
Rational parse_rational(const std::string& token);
double parse_number(const std::string& token);

}  // namespace flatten::runner
