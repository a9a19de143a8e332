#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace aberray::cli {

/// Provenance record written next to a command's outputs.
struct RunManifest {
  std::string subcommand;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string tool_version;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

std::string sha256_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

const char* tool_version();

}  // namespace aberray::cli
