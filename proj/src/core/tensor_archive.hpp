#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gemix {

/// Named float32 blob with its shape.
struct ArchivedTensor {
  std::vector<std::int64_t> shape;
  std::vector<float> data;
};

/// Versioned, checksummed binary container used for model checkpoints.
///
/// Layout (little-endian):
///   magic "GEMIXARC" | u32 format version | u32 kind length | kind bytes |
///   u64 payload length | payload | u32 crc32(payload)
/// The payload holds a JSON metadata string followed by the named tensors.
struct Archive {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::string kind;
  std::string metadata;  // JSON text
  std::map<std::string, ArchivedTensor> tensors;
};

void write_archive(const std::filesystem::path& path, const Archive& archive);

/// Loads and verifies an archive. Any version, kind, size or checksum
/// mismatch throws before a partially filled archive escapes.
Archive read_archive(const std::filesystem::path& path, const std::string& expected_kind);

}  // namespace gemix
