#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace emsaudit::cli {

// Flat key/value view of a small TOML subset: "[section]" headers, "key = value"
// lines, '#' comments, quoted strings, numbers and booleans. Keys under a
// section are stored as "section.key".
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, std::string_view source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<long long> get_int(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<bool> get_bool(const std::string& key) const;

 private:
  std::string source_;
  std::map<std::string, std::string> values_;
};

}  // namespace emsaudit::cli
