#pragma once

#include <map>
#include <optional>
#include <string>

namespace margin_probe {

/// Plain-text `key = value` configuration. `#` starts a comment; blank lines
/// are ignored; later keys override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::string& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get_string(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<long long> get_int(const std::string& key) const;

  double get_double_or(const std::string& key, double fallback) const {
    return get_double(key).value_or(fallback);
  }
  long long get_int_or(const std::string& key, long long fallback) const {
    return get_int(key).value_or(fallback);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace margin_probe
