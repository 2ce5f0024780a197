#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace stablab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat `key = value` configuration: one pair per line, '#' starts a comment,
// dotted keys express nesting. Every diagnostic names the file and line.
// Lookups mark keys as used so require_all_used() can flag typos afterwards.
struct Config {
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };

  std::string name;  // file name for diagnostics
  std::map<std::string, Entry> entries;

  bool has(const std::string& key) const;
  const Entry* find(const std::string& key) const;  // marks used; null if absent

  // Getters throw ConfigError naming key, file and line on a malformed value;
  // the *_or forms substitute the fallback when the key is absent.
  std::string get_string(const std::string& key) const;
  std::string get_string_or(const std::string& key,
                            const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  int get_int_or(const std::string& key, int fallback) const;
  std::uint64_t get_uint64_or(const std::string& key,
                              std::uint64_t fallback) const;
  bool get_bool_or(const std::string& key, bool fallback) const;
  // Comma- or whitespace-separated numbers.
  std::vector<double> get_doubles_or(const std::string& key,
                                     const std::vector<double>& fallback) const;
  // Comma-separated tokens, trimmed, empties dropped.
  std::vector<std::string> get_list_or(
      const std::string& key, const std::vector<std::string>& fallback) const;

  void require_all_used() const;  // throws listing unknown keys with lines
};

Config parse_config_text(const std::string& text, const std::string& name);
Config parse_config_file(const std::string& path);

}  // namespace stablab
