#include "runner/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "flatten/error.hpp"
#include "flatten/numeric.hpp"

namespace flatten::runner {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::string join(const std::vector<double>& items) {
  std::vector<std::string> s;
  for (double x : items) s.push_back(format_double(x));
  return join(s);
}

}  // namespace

void config_error(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::kConfigError, key + ": " + what);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Rational parse_rational(const std::string& token) {
  const auto slash = token.find('/');
  if (slash != std::string::npos) {
    const Rational num = parse_rational(trim(token.substr(0, slash)));
    const Rational den = parse_rational(trim(token.substr(slash + 1)));
    if (den == 0) throw Error(ErrorCode::kParseError, "zero denominator in '" + token + "'");
    return num / den;
  }
  std::size_t i = 0;
  bool negative = false;
  if (i < token.size() && (token[i] == '+' || token[i] == '-')) negative = token[i++] == '-';
  BigInt digits = 0;
  int exponent = 0;
  bool any = false, point = false;
  for (; i < token.size(); ++i) {
    const char c = token[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits = digits * 10 + (c - '0');
      if (point) --exponent;
      any = true;
    } else if (c == '.' && !point) {
      point = true;
    } else {
      break;
    }
  }
  if (i < token.size() && (token[i] == 'e' || token[i] == 'E')) {
    int e = 0;
    const char* first = token.data() + i + 1;
    const char* last = token.data() + token.size();
    if (first < last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, e);
    if (ec != std::errc() || ptr != last) throw Error(ErrorCode::kParseError, "bad exponent in '" + token + "'");
    exponent += e;
    i = token.size();
  }
  if (!any || i != token.size()) throw Error(ErrorCode::kParseError, "not a number: '" + token + "'");
  BigInt scale = 1;
  for (int k = 0; k < std::abs(exponent); ++k) scale *= 10;
  Rational q = exponent >= 0 ? Rational(digits * scale) : Rational(digits, scale);
  return negative ? Rational(-q) : q;
}

double parse_number(const std::string& token) {
  const std::string t = trim(token);
  if (t.find('/') != std::string::npos) return to_double(parse_rational(t));
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorCode::kParseError, "not a number: '" + token + "'");
  }
  return x;
}

Config Config::parse(std::istream& is, const std::string& source) {
  Config c;
  c.source_ = source;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) config_error(where, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) config_error(where, "empty key");
    if (c.values_.count(key)) config_error(key, "duplicate key at " + where);
    c.values_[key] = trim(line.substr(eq + 1));
  }
  if (!c.has("schema")) config_error("schema", "missing required key");
  const std::int64_t schema = c.integer("schema", 0);
  if (schema != kSchemaVersion) {
    config_error("schema", "unsupported version " + std::to_string(schema) + " (expected " +
                               std::to_string(kSchemaVersion) + ")");
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open config file " + path.string());
  return parse(in, path.string());
}

const std::string& Config::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) config_error(key, "missing required key");
  used_.insert(key);
  return it->second;
}

void Config::record(const std::string& key, const std::string& value) const { resolved_[key] = value; }

std::string Config::text(const std::string& key) const {
  const std::string& v = raw(key);
  record(key, v);
  return v;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : (record(key, fallback), fallback);
}

double Config::number(const std::string& key) const {
  const std::string& v = raw(key);
  double x = 0.0;
  try {
    x = parse_number(v);
  } catch (const Error& e) {
    config_error(key, e.what());
  }
  record(key, format_double(x));
  return x;
}

double Config::number(const std::string& key, double fallback) const {
  if (has(key)) return number(key);
  record(key, format_double(fallback));
  return fallback;
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
  if (!has(key)) {
    record(key, std::to_string(fallback));
    return fallback;
  }
  const std::string& v = raw(key);
  std::int64_t x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) config_error(key, "expected an integer, got '" + v + "'");
  record(key, std::to_string(x));
  return x;
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) {
    record(key, fallback ? "true" : "false");
    return fallback;
  }
  const std::string& v = raw(key);
  bool out;
  if (v == "true" || v == "1" || v == "yes") {
    out = true;
  } else if (v == "false" || v == "0" || v == "no") {
    out = false;
  } else {
    config_error(key, "expected true or false, got '" + v + "'");
  }
  record(key, out ? "true" : "false");
  return out;
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(raw(key))) {
    try {
      out.push_back(parse_number(item));
    } catch (const Error& e) {
      config_error(key, e.what());
    }
  }
  if (out.empty()) config_error(key, "empty list");
  record(key, join(out));
  return out;
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
  if (has(key)) return numbers(key);
  record(key, join(fallback));
  return fallback;
}

std::vector<std::string> Config::words(const std::string& key, const std::vector<std::string>& fallback) const {
  std::vector<std::string> out = has(key) ? split_list(raw(key)) : fallback;
  record(key, join(out));
  return out;
}

std::vector<Rational> Config::rationals(const std::string& key) const {
  std::vector<Rational> out;
  for (const auto& item : split_list(raw(key))) {
    try {
      out.push_back(parse_rational(item));
    } catch (const Error& e) {
      config_error(key, e.what());
    }
  }
  if (out.empty()) config_error(key, "empty list");
  record(key, values_.at(key));
  return out;
}

void Config::reject_unused() const {
  for (const auto& [key, value] : values_) {
    if (key != "schema" && !used_.count(key)) config_error(key, "unknown key for this experiment");
  }
}

}  // namespace flatten::runner
