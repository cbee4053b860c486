#pragma once

#include <filesystem>

#include "core/image.hpp"

namespace gemix {

/// Decodes PNG (8/16-bit, any colour type) or PFM into [0,1] floats with the
/// requested channel count (1 = luminance, 3 = RGB). Throws Error(format)
/// naming the path on failure.
ImageTensor read_image(const std::filesystem::path& path, int channels);

/// 8-bit PNG; values are clamped to [0,1] and rounded.
void write_png(const std::filesystem::path& path, const ImageTensor& image);

/// Portable float map, little-endian. Lossless for float32 values.
void write_pfm(const std::filesystem::path& path, const ImageTensor& image);
ImageTensor read_pfm(const std::filesystem::path& path);

bool is_supported_image(const std::filesystem::path& path);

}  // namespace gemix
