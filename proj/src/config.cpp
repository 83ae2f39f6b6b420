#include "smile/config.hpp"

#include <sstream>
#include <stdexcept>

#include "smile/io.hpp"

namespace smile {

namespace {
std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    cfg.kv_[section.empty() ? key : section + "." + key] = val;
  }
  return cfg;
}

Config Config::load(const std::string& path) { return parse(readTextFile(path)); }

std::string Config::serialize() const {
  // unsectioned keys first, then sections; std::map iteration is sorted
  std::ostringstream os;
  for (const auto& [k, v] : kv_)
    if (k.find('.') == std::string::npos) os << k << " = " << v << "\n";
  std::string cur_section;
  for (const auto& [k, v] : kv_) {
    const size_t dot = k.find('.');
    if (dot == std::string::npos) continue;
    const std::string section = k.substr(0, dot);
    if (section != cur_section) {
      os << "\n[" << section << "]\n";
      cur_section = section;
    }
    os << k.substr(dot + 1) << " = " << v << "\n";
  }
  return os.str();
}

void Config::save(const std::string& path) const { writeTextFile(path, serialize()); }

std::string Config::getString(const std::string& key, const std::string& dflt) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? dflt : it->second;
}

int Config::getInt(const std::string& key, int dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  try {
    return std::stoi(it->second);
  } catch (...) {
    throw std::invalid_argument("config key " + key + ": not an integer: " + it->second);
  }
}

std::uint64_t Config::getUint(const std::string& key, std::uint64_t dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  try {
    return std::stoull(it->second);
  } catch (...) {
    throw std::invalid_argument("config key " + key + ": not an unsigned integer: " + it->second);
  }
}

double Config::getDouble(const std::string& key, double dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  try {
    return std::stod(it->second);
  } catch (...) {
    throw std::invalid_argument("config key " + key + ": not a number: " + it->second);
  }
}

bool Config::getBool(const std::string& key, bool dflt) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return dflt;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config key " + key + ": not a boolean: " + v);
}

}  // namespace smile
