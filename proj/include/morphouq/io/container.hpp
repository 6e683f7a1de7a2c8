#pragma once
// Versioned binary container shared by simulation results, datasets, model
// checkpoints and posterior samples:
//
//   MORPHOUQ
//   kind <kind> <version>
//   meta <byte count>
//   <JSON metadata>
//   payload <double count> <fnv1a hex>
//   <little-endian float64 payload>

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace morphouq::io {

struct Container {
  std::string kind;
  int version = 1;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<double> payload;
};

void write_container(const std::filesystem::path& path, const Container& c);

/// Throws FormatError on a bad magic, kind mismatch, truncation or checksum
/// failure. An empty `expected_kind` accepts any kind.
Container read_container(const std::filesystem::path& path, const std::string& expected_kind = "");

/// Sequential reader over a container payload.
class PayloadReader {
 public:
  explicit PayloadReader(const std::vector<double>& payload) : data_(payload) {}
  std::vector<double> take(std::size_t n);
  double take_one();
  bool exhausted() const { return pos_ == data_.size(); }

 private:
  const std::vector<double>& data_;
  std::size_t pos_ = 0;
};

}  // namespace morphouq::io
