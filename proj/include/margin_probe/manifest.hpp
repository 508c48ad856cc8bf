#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace margin_probe {

inline constexpr const char* kToolVersion = "0.1.0";

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits. Throws FormatError if
/// the file cannot be read.
std::string file_digest(const std::string& path);

/// Run record written next to every output: command, effective parameters,
/// seed chain, library versions and digests of inputs and outputs. Contains no
/// timestamps or host data, so identical runs give identical manifests.
class Manifest {
 public:
  using Value = std::variant<std::string, double, long long, bool>;

  explicit Manifest(std::string command) : command_(std::move(command)) {}

  Manifest& param(const std::string& key, Value v);
  Manifest& seed(const std::string& name, std::uint64_t value);
  Manifest& input(const std::string& path);
  Manifest& output(const std::string& path);

  std::string dump() const;
  /// Writes dump() to `path`.
  void write(const std::string& path) const;

  /// `<output>.manifest.json`
  static std::string path_for(const std::string& output);

 private:
  std::string command_;
  std::vector<std::pair<std::string, Value>> params_;
  std::vector<std::pair<std::string, std::uint64_t>> seeds_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
};

}  // namespace margin_probe
