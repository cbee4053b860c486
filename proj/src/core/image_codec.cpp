#include "core/image_codec.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "core/errors.hpp"

namespace gemix {
namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

ImageTensor convert_channels(const ImageTensor& src, int channels) {
  if (src.channels == channels) return src;
  ImageTensor out(src.height, src.width, channels);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      if (channels == 1) {
        const int colour = std::min(src.channels, 3);
        double acc = 0.0;
        for (int c = 0; c < colour; ++c) acc += src.at(y, x, c);
        out.at(y, x) = static_cast<float>(acc / colour);
      } else {
        for (int c = 0; c < channels; ++c)
          out.at(y, x, c) = src.at(y, x, std::min(c, src.channels - 1));
      }
    }
  return out;
}

[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

ImageTensor read_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorCode::io, "cannot open image " + path.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    fail(ErrorCode::format, "not a PNG file: " + path.string());

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message,
                                           png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  ImageTensor out;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::format, "cannot decode " + path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto colour = png_get_color_type(png, info);
  if (colour == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (colour == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (png_get_bit_depth(png, info) == 16 && std::endian::native == std::endian::little)
    png_set_swap(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int stored_channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * static_cast<std::size_t>(height));
  rows.resize(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  // Alpha is dropped: colour channels only.
  const int colour_channels = (stored_channels == 2 || stored_channels == 4)
                                  ? stored_channels - 1
                                  : stored_channels;
  out = ImageTensor(height, width, colour_channels);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < colour_channels; ++c) {
        const std::size_t i = static_cast<std::size_t>(x) * stored_channels + c;
        float v;
        if (depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, rows[y] + 2 * i, 2);
          v = static_cast<float>(s) / 65535.0f;
        } else {
          v = static_cast<float>(rows[y][i]) / 255.0f;
        }
        out.at(y, x, c) = v;
      }
  return out;
}

}  // namespace

bool is_supported_image(const fs::path& path) {
  const auto e = lower_ext(path);
  return e == ".png" || e == ".pfm";
}

ImageTensor read_image(const fs::path& path, int channels) {
  require(channels == 1 || channels == 3, "channels must be 1 or 3");
  const auto e = lower_ext(path);
  ImageTensor img;
  if (e == ".png")
    img = read_png(path);
  else if (e == ".pfm")
    img = read_pfm(path);
  else
    fail(ErrorCode::format, "unsupported image format: " + path.string());
  return convert_channels(img, channels);
}

void write_png(const fs::path& path, const ImageTensor& image) {
  image.validate();
  require(image.channels == 1 || image.channels == 3,
          "PNG output supports 1 or 3 channels");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) fail(ErrorCode::io, "cannot write image " + path.string());

  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message,
                                            png_error_handler, png_warning_handler);
  png_infop info = png_create_info_struct(png);
  std::vector<png_byte> buffer(image.values.size());
  for (std::size_t i = 0; i < buffer.size(); ++i)
    buffer[i] = static_cast<png_byte>(
        std::lround(std::clamp(image.values[i], 0.0f, 1.0f) * 255.0f));
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
  for (int y = 0; y < image.height; ++y) rows[y] = buffer.data() + stride * y;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::io, "cannot encode " + path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_pfm(const fs::path& path, const ImageTensor& image) {
  image.validate();
  require(image.channels == 1 || image.channels == 3,
          "PFM output supports 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write image " + path.string());
  out << (image.channels == 1 ? "Pf" : "PF") << '\n'
      << image.width << ' ' << image.height << '\n'
      << "-1.0\n";
  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
  // PFM scanlines run bottom to top.
  for (int y = image.height - 1; y >= 0; --y) {
    const float* row = image.values.data() + stride * y;
    if constexpr (std::endian::native == std::endian::little) {
      out.write(reinterpret_cast<const char*>(row),
                static_cast<std::streamsize>(stride * sizeof(float)));
    } else {
      for (std::size_t i = 0; i < stride; ++i) {
        auto bits = std::bit_cast<std::uint32_t>(row[i]);
        bits = __builtin_bswap32(bits);
        out.write(reinterpret_cast<const char*>(&bits), 4);
      }
    }
  }
  if (!out) fail(ErrorCode::io, "short write to " + path.string());
}

ImageTensor read_pfm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open image " + path.string());
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in || (magic != "Pf" && magic != "PF") || width < 1 || height < 1 ||
      scale == 0.0)
    fail(ErrorCode::format, "malformed PFM header in " + path.string());
  in.get();  // single whitespace before raster
  const int channels = magic == "Pf" ? 1 : 3;
  const bool little = scale < 0.0;
  ImageTensor img(height, width, channels);
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  std::vector<std::uint32_t> row(stride);
  for (int y = height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(stride * 4));
    if (!in) fail(ErrorCode::format, "truncated PFM raster in " + path.string());
    for (std::size_t i = 0; i < stride; ++i) {
      std::uint32_t bits = row[i];
      if (little != (std::endian::native == std::endian::little))
        bits = __builtin_bswap32(bits);
      img.values[stride * y + i] = std::bit_cast<float>(bits);
    }
  }
  return img;
}

}  // namespace gemix
