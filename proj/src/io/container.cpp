#include "morphouq/io/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "morphouq/errors.hpp"
#include "morphouq/io/hash.hpp"

namespace morphouq::io {

static_assert(std::endian::native == std::endian::little,
              "container payloads are written in host order; big-endian hosts are unsupported");

namespace {

constexpr const char* kMagic = "MORPHOUQ";

std::string read_line(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("truncated header in " + path.string());
  }
  return line;
}

}  // namespace

void write_container(const std::filesystem::path& path, const Container& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::string meta = c.meta.dump();
  Fnv1a h;
  h.update(std::span<const double>(c.payload));

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    out << kMagic << '\n'
        << "kind " << c.kind << ' ' << c.version << '\n'
        << "meta " << meta.size() << '\n'
        << meta << '\n'
        << "payload " << c.payload.size() << ' ' << h.hex() << '\n';
    out.write(reinterpret_cast<const char*>(c.payload.data()),
              static_cast<std::streamsize>(c.payload.size() * sizeof(double)));
    if (!out) throw FormatError("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Container read_container(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  if (read_line(in, path) != kMagic) throw FormatError("not a morphouq container: " + path.string());

  Container c;
  {
    std::istringstream kind(read_line(in, path));
    std::string tag;
    if (!(kind >> tag >> c.kind >> c.version) || tag != "kind") {
      throw FormatError("bad kind line in " + path.string());
    }
  }
  if (!expected_kind.empty() && c.kind != expected_kind) {
    throw FormatError(path.string() + " holds '" + c.kind + "', expected '" + expected_kind + "'");
  }
  std::size_t meta_bytes = 0;
  {
    std::istringstream meta(read_line(in, path));
    std::string tag;
    if (!(meta >> tag >> meta_bytes) || tag != "meta") throw FormatError("bad meta line in " + path.string());
  }
  std::string meta(meta_bytes, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_bytes));
  if (static_cast<std::size_t>(in.gcount()) != meta_bytes) throw FormatError("truncated metadata in " + path.string());
  try {
    c.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt metadata in " + path.string() + ": " + e.what());
  }
  read_line(in, path);  // newline after the metadata block

  std::size_t count = 0;
  std::string checksum;
  {
    std::istringstream payload(read_line(in, path));
    std::string tag;
    if (!(payload >> tag >> count >> checksum) || tag != "payload") {
      throw FormatError("bad payload line in " + path.string());
    }
  }
  c.payload.resize(count);
  in.read(reinterpret_cast<char*>(c.payload.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
    throw FormatError("truncated payload in " + path.string());
  }
  Fnv1a h;
  h.update(std::span<const double>(c.payload));
  if (h.hex() != checksum) throw FormatError("payload checksum mismatch in " + path.string());
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in " + path.string());
  return c;
}

std::vector<double> PayloadReader::take(std::size_t n) {
  if (pos_ + n > data_.size()) throw FormatError("payload shorter than its metadata declares");
  std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                          data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return out;
}

double PayloadReader::take_one() { return take(1).front(); }

}  // namespace morphouq::io
