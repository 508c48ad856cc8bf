#include "margin_probe/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "margin_probe/errors.hpp"

namespace margin_probe {

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

Manifest& Manifest::param(const std::string& key, Value v) {
  params_.emplace_back(key, std::move(v));
  return *this;
}

Manifest& Manifest::seed(const std::string& name, std::uint64_t value) {
  seeds_.emplace_back(name, value);
  return *this;
}

Manifest& Manifest::input(const std::string& path) {
  inputs_.push_back(path);
  return *this;
}

Manifest& Manifest::output(const std::string& path) {
  outputs_.push_back(path);
  return *this;
}

std::string Manifest::dump() const {
  nlohmann::ordered_json j;
  j["tool"] = "margin-probe";
  j["version"] = kToolVersion;
  j["command"] = command_;
  j["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"boost", BOOST_LIB_VERSION}};
  j["params"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : params_) {
    std::visit([&](const auto& x) { j["params"][k] = x; }, v);
  }
  j["seeds"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : seeds_) j["seeds"][k] = v;
  auto files = [](const std::vector<std::string>& paths) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : paths) {
      arr.push_back({{"path", std::filesystem::path(p).filename().string()}, {"fnv1a64", file_digest(p)}});
    }
    return arr;
  };
  j["inputs"] = files(inputs_);
  j["outputs"] = files(outputs_);
  return j.dump(1) + "\n";
}

void Manifest::write(const std::string& path) const {
  const auto text = dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << text;
}

std::string Manifest::path_for(const std::string& output) { return output + ".manifest.json"; }

}  // namespace margin_probe
