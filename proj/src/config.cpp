#include "graft/config.hpp"

#include <fstream>
#include <sstream>

#include "graft/corpus.hpp"  // Error, ParseError
#include "graft/util.hpp"

namespace graft {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace

const std::string* ConfigSection::find(std::string_view key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e.value;
  return nullptr;
}

std::string ConfigSection::get(std::string_view key, std::string_view fallback) const {
  const std::string* v = find(key);
  return v ? *v : std::string(fallback);
}

std::vector<std::string> ConfigSection::all(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (e.key == key) out.push_back(e.value);
  return out;
}

const ConfigSection* ConfigFile::find(std::string_view name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

const ConfigSection& ConfigFile::require(std::string_view name) const {
  const ConfigSection* s = find(name);
  if (!s) throw Error(source + ": missing [" + std::string(name) + "] section");
  return *s;
}

ConfigFile parse_config(std::string_view text, const std::string& source_name) {
  ConfigFile file;
  file.source = source_name;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    bool last = eol == std::string_view::npos;
    std::string_view raw = text.substr(pos, last ? text.size() - pos : eol - pos);
    ++lineno;
    std::string_view line = trim(raw);
    if (!line.empty() && line[0] != '#') {
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ParseError(source_name, lineno, "unterminated section header");
        ConfigSection section;
        section.name = std::string(trim(line.substr(1, line.size() - 2)));
        if (section.name.empty()) throw ParseError(source_name, lineno, "empty section name");
        section.line = lineno;
        file.sections.push_back(std::move(section));
      } else {
        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
          throw ParseError(source_name, lineno, "expected 'key = value'");
        if (file.sections.empty())
          throw ParseError(source_name, lineno, "entry before any [section]");
        ConfigEntry entry;
        entry.key = std::string(trim(line.substr(0, eq)));
        entry.value = std::string(trim(line.substr(eq + 1)));
        entry.line = lineno;
        if (entry.key.empty()) throw ParseError(source_name, lineno, "empty key");
        file.sections.back().entries.push_back(std::move(entry));
      }
    }
    if (last) break;
    pos = eol + 1;
  }
  return file;
}

ConfigFile read_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

int config_int(const ConfigSection& s, std::string_view key, int fallback) {
  const std::string* v = s.find(key);
  if (!v) return fallback;
  int out;
  if (!parse_int(*v, out))
    throw Error("[" + s.name + "] " + std::string(key) + ": not an integer: '" + *v + "'");
  return out;
}

double config_double(const ConfigSection& s, std::string_view key, double fallback) {
  const std::string* v = s.find(key);
  if (!v) return fallback;
  double out;
  if (!parse_double(*v, out))
    throw Error("[" + s.name + "] " + std::string(key) + ": not a number: '" + *v + "'");
  return out;
}

std::uint64_t config_u64(const ConfigSection& s, std::string_view key, std::uint64_t fallback) {
  const std::string* v = s.find(key);
  if (!v) return fallback;
  std::uint64_t out;
  if (!parse_u64(*v, out))
    throw Error("[" + s.name + "] " + std::string(key) + ": not a non-negative integer: '" + *v +
                "'");
  return out;
}

}  // namespace graft
