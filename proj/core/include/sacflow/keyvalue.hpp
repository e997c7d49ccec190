#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sacflow {

/// Parsed `key = value` text. Lines starting with `#` and blank lines are ignored;
/// trailing `# comments` are stripped. Every lookup records the key as consumed so that
/// `reject_unknown` can flag typos.
class KeyValueText {
 public:
  static KeyValueText parse(const std::string& text);
  static KeyValueText load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  int line_of(const std::string& key) const;

  std::optional<std::string> text(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::optional<double> number(const std::string& key) const;
  long integer(const std::string& key, long fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  std::string word(const std::string& key, const std::string& fallback) const;
  /// Whitespace- or comma-separated list of numbers.
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;

  /// Throws ConfigError naming the first key that no lookup consumed.
  void reject_unknown() const;

  /// Keys starting with `prefix`, in order.
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

  /// Canonical `key=value` serialization (sorted by key), used for hashing.
  std::string canonical() const;

  void set(const std::string& key, const std::string& value);

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> consumed_;
};

}  // namespace sacflow
