// graft -- parser for the declarative "key = value" section config format.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace graft {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string name;  // text inside [...], may contain spaces ("condition IaB")
  std::vector<ConfigEntry> entries;
  int line = 0;

  // First value for key, or nullptr.
  const std::string* find(std::string_view key) const;
  std::string get(std::string_view key, std::string_view fallback) const;
  // All values for a repeated key, in file order.
  std::vector<std::string> all(std::string_view key) const;
};

struct ConfigFile {
  std::vector<ConfigSection> sections;
  std::string source;

  const ConfigSection* find(std::string_view name) const;
  const ConfigSection& require(std::string_view name) const;
};

ConfigFile parse_config(std::string_view text, const std::string& source_name = "<config>");
ConfigFile read_config(const std::filesystem::path& path);

// Typed accessors; throw Error naming section/key on bad values.
int config_int(const ConfigSection& s, std::string_view key, int fallback);
double config_double(const ConfigSection& s, std::string_view key, double fallback);
std::uint64_t config_u64(const ConfigSection& s, std::string_view key, std::uint64_t fallback);

}  // namespace graft
