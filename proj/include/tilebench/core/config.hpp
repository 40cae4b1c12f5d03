#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tilebench {

// INI-style key-value document:
//
//   [section]
//   key = value
//
// Keys are addressed as "section.key". Lists are comma-separated.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::filesystem::path& path);

  std::string to_string() const;

  bool contains(const std::string& key) const;
  std::optional<std::string> raw(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key,
                                       const std::vector<std::string>& fallback) const;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, bool value);
  void set(const std::string& key, const std::vector<int>& values);
  void set(const std::string& key, const std::vector<double>& values);

  // Copies every "prefix.*" entry of `other` under `prefix` in this config.
  void merge_section(const KeyValueConfig& other, const std::string& prefix);

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace tilebench
