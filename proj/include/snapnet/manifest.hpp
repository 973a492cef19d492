#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace snapnet {

inline constexpr const char* kToolVersion = "snapnet 0.1.0";

std::string sha256_hex(const std::string& bytes);

/// Run record: the config hash covers every input byte plus the command
/// options, so it changes iff an input changes. No clocks, no hostnames.
struct Manifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;  // label, raw bytes
  nlohmann::json options = nlohmann::json::object();
  nlohmann::json parameters = nlohmann::json::object();    // parsed scenario echo
  std::vector<std::filesystem::path> artifacts;

  std::string config_hash() const;
  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

}  // namespace snapnet
