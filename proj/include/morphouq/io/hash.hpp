#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace morphouq::io {

/// 64-bit FNV-1a, used for provenance hashes and payload checksums.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n);
  void update(std::string_view s) { update(s.data(), s.size()); }
  void update(std::span<const double> v) { update(v.data(), v.size_bytes()); }
  template <class T>
  void update_value(const T& v) {
    update(&v, sizeof(T));
  }
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string to_hex(std::uint64_t v);
std::string hash_bytes(std::string_view bytes);
/// Hash of a file's full contents; empty string if unreadable.
std::string hash_file(const std::string& path);

}  // namespace morphouq::io
