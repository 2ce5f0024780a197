#include "stablab/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "stablab/mesh.hpp"

namespace stablab {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const Config& cfg, const Config::Entry& entry,
                       const std::string& key, const std::string& what) {
  throw ConfigError(cfg.name + ":" + std::to_string(entry.line) + ": key '" +
                    key + "': " + what + ", got '" + entry.value + "'");
}

double parse_double(const Config& cfg, const Config::Entry& entry,
                    const std::string& key, const std::string& token) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end != token.c_str() + token.size() || token.empty() || errno == ERANGE) {
    fail(cfg, entry, key, "expected a number");
  }
  return v;
}

}  // namespace

bool Config::has(const std::string& key) const {
  return entries.count(key) != 0;
}

const Config::Entry* Config::find(const std::string& key) const {
  auto it = entries.find(key);
  if (it == entries.end()) return nullptr;
  it->second.used = true;
  return &it->second;
}

std::string Config::get_string(const std::string& key) const {
  const Entry* e = find(key);
  if (e == nullptr) {
    throw ConfigError(name + ": missing required key '" + key + "'");
  }
  return e->value;
}

std::string Config::get_string_or(const std::string& key,
                                  const std::string& fallback) const {
  const Entry* e = find(key);
  return e == nullptr ? fallback : e->value;
}

double Config::get_double(const std::string& key) const {
  const Entry* e = find(key);
  if (e == nullptr) {
    throw ConfigError(name + ": missing required key '" + key + "'");
  }
  return parse_double(*this, *e, key, e->value);
}

double Config::get_double_or(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  return e == nullptr ? fallback : parse_double(*this, *e, key, e->value);
}

int Config::get_int_or(const std::string& key, int fallback) const {
  const Entry* e = find(key);
  if (e == nullptr) return fallback;
  const double v = parse_double(*this, *e, key, e->value);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) fail(*this, *e, key, "expected an integer");
  return i;
}

std::uint64_t Config::get_uint64_or(const std::string& key,
                                    std::uint64_t fallback) const {
  const Entry* e = find(key);
  if (e == nullptr) return fallback;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
  if (end != e->value.c_str() + e->value.size() || e->value.empty() ||
      errno == ERANGE || e->value[0] == '-') {
    fail(*this, *e, key, "expected an unsigned integer");
  }
  return static_cast<std::uint64_t>(v);
}

bool Config::get_bool_or(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  if (e == nullptr) return fallback;
  const std::string v = e->value;
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(*this, *e, key, "expected a boolean (true/false)");
}

std::vector<double> Config::get_doubles_or(
    const std::string& key, const std::vector<double>& fallback) const {
  const Entry* e = find(key);
  if (e == nullptr) return fallback;
  std::string normalized = e->value;
  for (char& c : normalized) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(normalized);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_double(*this, *e, key, token));
  if (out.empty()) fail(*this, *e, key, "expected a list of numbers");
  return out;
}

std::vector<std::string> Config::get_list_or(
    const std::string& key, const std::vector<std::string>& fallback) const {
  const Entry* e = find(key);
  if (e == nullptr) return fallback;
  std::vector<std::string> out;
  std::string token;
  std::istringstream in(e->value);
  while (std::getline(in, token, ',')) {
    token = trim(token);
    if (!token.empty()) out.push_back(token);
  }
  if (out.empty()) fail(*this, *e, key, "expected a comma-separated list");
  return out;
}

void Config::require_all_used() const {
  std::string unknown;
  for (const auto& [key, entry] : entries) {
    if (!entry.used) {
      if (!unknown.empty()) unknown += ", ";
      unknown += "'" + key + "' (line " + std::to_string(entry.line) + ")";
    }
  }
  if (!unknown.empty()) {
    throw ConfigError(name + ": unknown keys: " + unknown);
  }
}

Config parse_config_text(const std::string& text, const std::string& name) {
  Config cfg;
  cfg.name = name;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(name + ":" + std::to_string(lineno) +
                        ": expected `key = value`, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(name + ":" + std::to_string(lineno) +
                        ": empty key before '='");
    }
    for (char c : key) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' &&
          c != '_' && c != '-') {
        throw ConfigError(name + ":" + std::to_string(lineno) +
                          ": bad character '" + std::string(1, c) +
                          "' in key '" + key + "'");
      }
    }
    auto [it, inserted] = cfg.entries.emplace(key, Config::Entry{value, lineno});
    if (!inserted) {
      throw ConfigError(name + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "' (first at line " +
                        std::to_string(it->second.line) + ")");
    }
  }
  return cfg;
}

Config parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

// Domain block of the shared config dialect; defaults are the DomainSpec
// defaults so a bare `domain.kind = disk` is a complete spec.
DomainSpec domain_from_config(const Config& cfg) {
  DomainSpec spec;
  const std::string kind = cfg.get_string_or("domain.kind", "disk");
  if (kind == "disk") {
    spec.kind = DomainSpec::Kind::Disk;
  } else if (kind == "annulus") {
    spec.kind = DomainSpec::Kind::Annulus;
  } else if (kind == "rectangle") {
    spec.kind = DomainSpec::Kind::Rectangle;
  } else if (kind == "ellipse") {
    spec.kind = DomainSpec::Kind::Ellipse;
  } else if (kind == "dumbbell") {
    spec.kind = DomainSpec::Kind::Dumbbell;
  } else if (kind == "file") {
    spec.kind = DomainSpec::Kind::File;
  } else {
    const Config::Entry* e = cfg.find("domain.kind");
    throw ConfigError(cfg.name + ":" +
                      (e ? std::to_string(e->line) : std::string("?")) +
                      ": unknown domain.kind '" + kind +
                      "' (disk, annulus, rectangle, ellipse, dumbbell, file)");
  }
  spec.h = cfg.get_double_or("domain.h", spec.h);
  spec.radius = cfg.get_double_or("domain.radius", spec.radius);
  spec.inner_radius = cfg.get_double_or("domain.inner_radius", spec.inner_radius);
  spec.width = cfg.get_double_or("domain.width", spec.width);
  spec.height = cfg.get_double_or("domain.height", spec.height);
  spec.rounding = cfg.get_double_or("domain.rounding", spec.rounding);
  spec.rx = cfg.get_double_or("domain.rx", spec.rx);
  spec.ry = cfg.get_double_or("domain.ry", spec.ry);
  spec.neck_width = cfg.get_double_or("domain.neck_width", spec.neck_width);
  spec.neck_length = cfg.get_double_or("domain.neck_length", spec.neck_length);
  spec.path = cfg.get_string_or("domain.path", spec.path);
  if (spec.kind == DomainSpec::Kind::File && spec.path.empty()) {
    throw ConfigError(cfg.name + ": domain.kind = file requires domain.path");
  }
  return spec;
}

}  // namespace stablab
