#include "sacflow/keyvalue.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sacflow/error.hpp"

namespace sacflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueText KeyValueText::parse(const std::string& text) {
  KeyValueText kv;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line);
    if (kv.entries_.count(key)) throw ConfigError("duplicate key '" + key + "'", line, key);
    kv.entries_[key] = Entry{value, line};
  }
  return kv;
}

KeyValueText KeyValueText::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

int KeyValueText::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

std::optional<std::string> KeyValueText::text(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  consumed_.insert(key);
  return it->second.value;
}

std::optional<double> KeyValueText::number(const std::string& key) const {
  const auto v = text(key);
  if (!v) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v->c_str(), &end);
  if (end == v->c_str() || *end != '\0' || errno == ERANGE)
    throw ConfigError("'" + key + "' expects a number, got '" + *v + "'", line_of(key), key);
  return x;
}

double KeyValueText::number(const std::string& key, double fallback) const {
  return number(key).value_or(fallback);
}

long KeyValueText::integer(const std::string& key, long fallback) const {
  const auto v = text(key);
  if (!v) return fallback;
  char* end = nullptr;
  const long x = std::strtol(v->c_str(), &end, 10);
  if (end == v->c_str() || *end != '\0')
    throw ConfigError("'" + key + "' expects an integer, got '" + *v + "'", line_of(key), key);
  return x;
}

std::uint64_t KeyValueText::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  const auto v = text(key);
  if (!v) return fallback;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v->c_str(), &end, 10);
  if (end == v->c_str() || *end != '\0' || v->front() == '-')
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + *v + "'", line_of(key), key);
  return x;
}

std::string KeyValueText::word(const std::string& key, const std::string& fallback) const {
  return text(key).value_or(fallback);
}

std::vector<double> KeyValueText::numbers(const std::string& key, std::vector<double> fallback) const {
  const auto v = text(key);
  if (!v) return fallback;
  std::string s = *v;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double x = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw ConfigError("'" + key + "' expects a list of numbers, got '" + tok + "'", line_of(key), key);
    out.push_back(x);
  }
  return out;
}

void KeyValueText::reject_unknown() const {
  // report the earliest offending line
  const std::string* worst = nullptr;
  int worst_line = 0;
  for (const auto& [k, e] : entries_)
    if (!consumed_.count(k) && (worst == nullptr || e.line < worst_line)) {
      worst = &k;
      worst_line = e.line;
    }
  if (worst) throw ConfigError("unknown key '" + *worst + "'", worst_line, *worst);
}

std::vector<std::string> KeyValueText::keys_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_)
    if (k.rfind(prefix, 0) == 0) out.push_back(k);
  return out;
}

std::string KeyValueText::canonical() const {
  std::string out;
  for (const auto& [k, e] : entries_) out += k + "=" + e.value + "\n";
  return out;
}

void KeyValueText::set(const std::string& key, const std::string& value) {
  auto& e = entries_[key];
  e.value = value;
}

}  // namespace sacflow
