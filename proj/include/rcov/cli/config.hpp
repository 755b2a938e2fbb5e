#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rcov/linalg/types.hpp"

namespace rcov::cli {

/// INI configuration ("[section]" headers, "key = value" lines, ';' or '#'
/// comments). Keys are addressed as "section.key". Unknown sections or keys
/// are rejected so that typos cannot silently fall back to defaults.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  bool has_section(const std::string& section) const;

  std::string str(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key, double fallback) const;
  Index integer(const std::string& key, Index fallback) const;
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  /// Comma-separated values; "a-b" integer ranges are not expanded here.
  std::vector<std::string> list(const std::string& key, const std::string& fallback) const;
  /// Comma-separated integers with inclusive "a-b" ranges, e.g. "1-3,5".
  std::vector<Index> int_list(const std::string& key, const std::string& fallback) const;

  void set(const std::string& key, const std::string& value);

  /// Sorted "section.key=value" lines; stable input to the manifest digest.
  std::string canonical() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace rcov::cli
