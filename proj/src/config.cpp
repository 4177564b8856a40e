#include "kolmo/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "kolmo/error.hpp"

namespace kolmo {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& source) {
  Config c;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(number);
    require(eq != std::string::npos, ErrorKind::validation, where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorKind::validation, where + ": empty key");
    require(!c.has(key), ErrorKind::validation, where + ": repeated key '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::validation, "cannot open config file " + path);
  return parse(in, path);
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

void Config::reject_unknown(const std::set<std::string>& allowed) const {
  for (const auto& [k, v] : values_) require(allowed.count(k) != 0, ErrorKind::validation, "unknown key '" + k + "'");
}

const std::string& Config::text(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorKind::validation, "missing key '" + key + "'");
  return it->second;
}

Rational Config::rational(const std::string& key) const {
  try {
    return parse_rational(text(key));
  } catch (const Error& e) {
    raise(ErrorKind::validation, "key '" + key + "': " + e.what());
  }
}

double Config::number(const std::string& key) const { return to_double(rational(key)); }

long long Config::integer(const std::string& key) const {
  const std::string& s = text(key);
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc{} && p == s.data() + s.size(), ErrorKind::validation, "key '" + key + "' is not an integer: " + s);
  return v;
}

bool Config::flag(const std::string& key) const {
  const std::string& s = text(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  raise(ErrorKind::validation, "key '" + key + "' is not a boolean: " + s);
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& part : split(text(key), ',')) {
    try {
      out.push_back(to_double(parse_rational(part)));
    } catch (const Error&) {
      raise(ErrorKind::validation, "key '" + key + "': bad number '" + part + "'");
    }
  }
  require(!out.empty(), ErrorKind::validation, "key '" + key + "' is empty");
  return out;
}

std::vector<long long> Config::integers(const std::string& key) const {
  std::vector<long long> out;
  for (const auto& part : split(text(key), ',')) {
    long long v = 0;
    const auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    require(ec == std::errc{} && p == part.data() + part.size() && !part.empty(), ErrorKind::validation,
            "key '" + key + "': bad integer '" + part + "'");
    out.push_back(v);
  }
  return out;
}

std::pair<long long, long long> Config::range(const std::string& key) const {
  const auto parts = split(text(key), ':');
  require(parts.size() == 2, ErrorKind::validation, "key '" + key + "' must look like a:b");
  Config tmp({{"a", parts[0]}, {"b", parts[1]}});
  const auto a = tmp.integer("a"), b = tmp.integer("b");
  require(a <= b, ErrorKind::validation, "key '" + key + "': empty range");
  return {a, b};
}

void Config::write(std::ostream& out) const {
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
}

nlohmann::json Config::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

}  // namespace kolmo
