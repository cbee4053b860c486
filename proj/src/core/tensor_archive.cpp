#include "core/tensor_archive.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "core/errors.hpp"

namespace gemix {
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "archive I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'E', 'M', 'I', 'X', 'A', 'R', 'C'};

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint64_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<char>& bytes() { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size, std::string origin)
      : data_(data), size_(size), origin_(std::move(origin)) {}

  template <typename T>
  T pod() {
    T v;
    take(&v, sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    check(n);
    std::string s(data_ + pos_, n);
    pos_ += n;
    return s;
  }
  void take(void* out, std::size_t n) {
    check(n);
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == size_; }

 private:
  void check(std::size_t n) const {
    if (n > size_ - pos_) fail(ErrorCode::format, "truncated archive " + origin_);
  }
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string origin_;
};

std::uint32_t checksum(const std::vector<char>& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void write_archive(const fs::path& path, const Archive& archive) {
  Writer payload;
  payload.str(archive.metadata);
  payload.pod(static_cast<std::uint64_t>(archive.tensors.size()));
  for (const auto& [name, t] : archive.tensors) {
    std::int64_t numel = 1;
    for (auto d : t.shape) numel *= d;
    require(numel == static_cast<std::int64_t>(t.data.size()),
            "archive tensor '" + name + "' shape does not match its data");
    payload.str(name);
    payload.pod(static_cast<std::uint64_t>(t.shape.size()));
    for (auto d : t.shape) payload.pod(d);
    payload.raw(t.data.data(), t.data.size() * sizeof(float));
  }

  Writer file;
  file.raw(kMagic, sizeof kMagic);
  file.pod(Archive::kFormatVersion);
  file.pod(static_cast<std::uint32_t>(archive.kind.size()));
  file.raw(archive.kind.data(), archive.kind.size());
  file.pod(static_cast<std::uint64_t>(payload.bytes().size()));
  file.raw(payload.bytes().data(), payload.bytes().size());
  file.pod(checksum(payload.bytes()));

  // Write to a sibling temp file first so a failed write never leaves a
  // truncated checkpoint under the final name.
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot write " + tmp.string());
    out.write(file.bytes().data(), static_cast<std::streamsize>(file.bytes().size()));
    if (!out) fail(ErrorCode::io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::io, "cannot move " + tmp.string() + " to " + path.string());
}

Archive read_archive(const fs::path& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::missing_artifact, "cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  Reader head(bytes.data(), bytes.size(), path.string());

  char magic[8];
  head.take(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0)
    fail(ErrorCode::format, path.string() + " is not a gemix archive");
  const auto version = head.pod<std::uint32_t>();
  if (version != Archive::kFormatVersion)
    fail(ErrorCode::format, path.string() + " has archive format version " +
                                std::to_string(version) + ", this build reads version " +
                                std::to_string(Archive::kFormatVersion));
  const auto kind_len = head.pod<std::uint32_t>();
  if (kind_len > 256) fail(ErrorCode::format, "corrupt archive header in " + path.string());
  std::string kind(kind_len, '\0');
  head.take(kind.data(), kind_len);
  if (kind != expected_kind)
    fail(ErrorCode::format, path.string() + " holds a '" + kind + "' archive, expected '" +
                                expected_kind + "'");
  const auto payload_len = head.pod<std::uint64_t>();
  const std::size_t header_len = 8 + 4 + 4 + kind_len + 8;
  if (payload_len + 4 != bytes.size() - header_len)
    fail(ErrorCode::format, "archive " + path.string() + " has an unexpected size (truncated or corrupted)");
  std::vector<char> payload(bytes.begin() + static_cast<std::ptrdiff_t>(header_len),
                            bytes.begin() + static_cast<std::ptrdiff_t>(header_len + payload_len));
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + header_len + payload_len, 4);
  if (stored_crc != checksum(payload))
    fail(ErrorCode::format, "checksum mismatch in " + path.string() + " (corrupted file)");

  Archive archive;
  archive.kind = kind;
  Reader body(payload.data(), payload.size(), path.string());
  archive.metadata = body.str();
  const auto count = body.pod<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = body.str();
    ArchivedTensor t;
    const auto rank = body.pod<std::uint64_t>();
    if (rank > 8) fail(ErrorCode::format, "corrupt tensor rank in " + path.string());
    std::int64_t numel = 1;
    for (std::uint64_t r = 0; r < rank; ++r) {
      t.shape.push_back(body.pod<std::int64_t>());
      numel *= t.shape.back();
    }
    if (numel < 0 || static_cast<std::uint64_t>(numel) * 4 > payload.size())
      fail(ErrorCode::format, "corrupt tensor shape in " + path.string());
    t.data.resize(static_cast<std::size_t>(numel));
    body.take(t.data.data(), t.data.size() * sizeof(float));
    archive.tensors.emplace(std::move(name), std::move(t));
  }
  if (!body.done()) fail(ErrorCode::format, "trailing bytes in archive " + path.string());
  return archive;
}

}  // namespace gemix
