#include "caprl/config/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "caprl/common.hpp"

namespace caprl::config {

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3)
        throw ConfigError(where + ": malformed section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      cfg.sections_[section];  // empty sections are fine
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + t + "'");
    if (section.empty()) throw ConfigError(where + ": key outside any [section]");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!cfg.sections_[section].emplace(key, value).second)
      throw ConfigError(where + ": duplicate key '" + section + "." + key + "'");
  }
  return cfg;
}

Config Config::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path.string());
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::raw(const std::string& section, const std::string& key) const {
  return sections_.at(section).at(key);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? raw(section, key) : fallback;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = raw(section, key);
  errno = 0;
  char* end = nullptr;
  const long long parsed = std::strtoll(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0')
    throw ConfigError(section + "." + key + ": '" + v + "' is not an integer");
  return parsed;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = raw(section, key);
  if (!v.empty() && v[0] == '-')
    throw ConfigError(section + "." + key + ": '" + v + "' is not a non-negative integer");
  errno = 0;
  char* end = nullptr;
  const unsigned long long parsed = std::strtoull(v.c_str(), &end, 10);
  if (errno != 0 || end == v.c_str() || *end != '\0')
    throw ConfigError(section + "." + key + ": '" + v + "' is not a non-negative integer");
  return parsed;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = raw(section, key);
  errno = 0;
  char* end = nullptr;
  const double parsed = std::strtod(v.c_str(), &end);
  if (errno != 0 || end == v.c_str() || *end != '\0')
    throw ConfigError(section + "." + key + ": '" + v + "' is not a number");
  return parsed;
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = to_lower(raw(section, key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(section + "." + key + ": '" + v + "' is not a boolean");
}

void Config::require_known(
    const std::map<std::string, std::set<std::string>>& schema) const {
  for (const auto& [section, kv] : sections_) {
    auto s = schema.find(section);
    if (s == schema.end())
      throw ConfigError(origin_ + ": unknown config section [" + section + "]");
    for (const auto& [key, value] : kv) {
      (void)value;
      if (!s->second.count(key))
        throw ConfigError(origin_ + ": unknown config key '" + section + "." + key + "'");
    }
  }
}

}  // namespace caprl::config
