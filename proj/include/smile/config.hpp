#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace smile {

/// Flat "key = value" configuration with [section] headers; keys are stored
/// as "section.key". Unsectioned keys keep their bare name. '#' starts a
/// comment. Serialization is sorted so emitted files are reproducible.
class Config {
public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  std::string serialize() const;
  void save(const std::string& path) const;

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  std::string getString(const std::string& key, const std::string& dflt) const;
  int getInt(const std::string& key, int dflt) const;
  std::uint64_t getUint(const std::string& key, std::uint64_t dflt) const;
  double getDouble(const std::string& key, double dflt) const;
  bool getBool(const std::string& key, bool dflt) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

private:
  std::map<std::string, std::string> kv_;
};

}  // namespace smile
