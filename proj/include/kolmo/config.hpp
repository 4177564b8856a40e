#pragma once

// Flat "key = value" experiment configuration.

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kolmo/rational.hpp"

namespace kolmo {

inline constexpr int kSchemaVersion = 1;

class Config {
 public:
  Config() = default;
  explicit Config(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  /// One `key = value` per line; `#` starts a comment; blank lines ignored.
  /// Validation error (with line number) on malformed lines or repeated keys.
  static Config parse(std::istream& in, const std::string& source = "<config>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  /// Keys of other, overwriting ours.
  void merge(const Config& other);
  /// Validation error naming the first key outside allowed.
  void reject_unknown(const std::set<std::string>& allowed) const;

  /// Typed access; validation error when missing or malformed.
  const std::string& text(const std::string& key) const;
  Rational rational(const std::string& key) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;   ///< comma separated
  std::vector<long long> integers(const std::string& key) const;
  /// "a:b" inclusive integer range.
  std::pair<long long, long long> range(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  /// Canonical sorted `key = value` lines.
  void write(std::ostream& out) const;
  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace kolmo
