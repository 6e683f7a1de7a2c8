#include "morphouq/pipeline/manifest.hpp"

#include <fstream>

#include "morphouq/errors.hpp"
#include "morphouq/io/hash.hpp"

namespace morphouq {

namespace {

nlohmann::json refs_to_json(const std::vector<ArtifactRef>& refs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : refs) a.push_back({{"path", r.path}, {"hash", r.hash}});
  return a;
}

std::vector<ArtifactRef> refs_from_json(const nlohmann::json& a) {
  std::vector<ArtifactRef> out;
  for (const auto& r : a) out.push_back({r.at("path").get<std::string>(), r.at("hash").get<std::string>()});
  return out;
}

}  // namespace

ArtifactRef artifact_ref(const std::filesystem::path& path) {
  return {path.string(), io::hash_file(path.string())};
}

nlohmann::json PipelineManifest::to_json() const {
  return {{"stage", stage},
          {"inputs", refs_to_json(inputs)},
          {"outputs", refs_to_json(outputs)},
          {"seed", seed},
          {"wall_seconds", wall_seconds},
          {"options", options}};
}

PipelineManifest PipelineManifest::from_json(const nlohmann::json& j) {
  PipelineManifest m;
  m.stage = j.at("stage").get<std::string>();
  m.inputs = refs_from_json(j.at("inputs"));
  m.outputs = refs_from_json(j.at("outputs"));
  m.seed = j.at("seed").get<std::uint64_t>();
  m.wall_seconds = j.value("wall_seconds", 0.0);
  m.options = j.value("options", nlohmann::json::object());
  return m;
}

void write_manifest(const std::filesystem::path& dir, const PipelineManifest& m) {
  std::ofstream out(dir / "manifest.json");
  if (!out) throw FormatError("cannot write " + (dir / "manifest.json").string());
  out << m.to_json().dump(2) << '\n';
}

PipelineManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  try {
    return PipelineManifest::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> verify_manifest(const PipelineManifest& m) {
  std::vector<std::string> warnings;
  for (const auto* refs : {&m.inputs, &m.outputs}) {
    for (const auto& r : *refs) {
      const std::string now = io::hash_file(r.path);
      if (now.empty()) {
        warnings.push_back(r.path + ": missing");
      } else if (now != r.hash) {
        warnings.push_back(r.path + ": hash " + now + " differs from recorded " + r.hash);
      }
    }
  }
  return warnings;
}

}  // namespace morphouq
