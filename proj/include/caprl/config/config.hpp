#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace caprl::config {

// Strict INI-style config: "[section]" headers, "key = value" lines, '#' or
// ';' full-line comments. Keys outside a section, duplicate keys, and
// malformed lines are ConfigErrors; typed getters are strict about their
// value format. Schema checking (require_known) makes unknown keys fail
// fast.
class Config {
 public:
  static Config parse_string(const std::string& text, const std::string& origin = "<inline>");
  static Config parse_file(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  // Every present (section, key) must appear in the schema; otherwise a
  // ConfigError names the offender.
  void require_known(const std::map<std::string, std::set<std::string>>& schema) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::string raw(const std::string& section, const std::string& key) const;

  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace caprl::config
