#pragma once
// Per-stage record of inputs, outputs and seed written next to every
// pipeline artifact.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace morphouq {

struct ArtifactRef {
  std::string path;
  std::string hash;  // FNV-1a of the file contents, empty if unreadable
};

ArtifactRef artifact_ref(const std::filesystem::path& path);

struct PipelineManifest {
  std::string stage;
  std::vector<ArtifactRef> inputs;
  std::vector<ArtifactRef> outputs;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  nlohmann::json options = nlohmann::json::object();

  nlohmann::json to_json() const;
  static PipelineManifest from_json(const nlohmann::json& j);
};

/// Writes `dir/manifest.json`.
void write_manifest(const std::filesystem::path& dir, const PipelineManifest& m);
/// Throws FormatError on a missing or malformed file.
PipelineManifest read_manifest(const std::filesystem::path& path);

/// One warning per recorded artifact whose current hash differs.
std::vector<std::string> verify_manifest(const PipelineManifest& m);

}  // namespace morphouq
