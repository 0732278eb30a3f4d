#ifndef STEREOFORGE_PNG_CODEC_HPP
#define STEREOFORGE_PNG_CODEC_HPP

// Minimal libpng wrapper: 8-bit RGB, 8-bit gray and 16-bit gray rasters.

#include <png.h>

#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "error.hpp"

namespace stereoforge::png {

struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 or 3
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;  // row-major, interleaved
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept
  {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

inline void warning_sink(png_structp, png_const_charp) {}

} // namespace detail

/// Decodes a PNG. Palette, alpha and low bit depths are normalized to 8-bit
/// gray or RGB; 16-bit files keep full precision.
inline Raster read(const std::filesystem::path& path)
{
  detail::File file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(Errc::DecodeError, "cannot open PNG", path.string());

  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw Error(Errc::DecodeError, "not a PNG file", path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                           detail::warning_sink);
  if (!png) throw Error(Errc::DecodeError, "png_create_read_struct failed", path.string());
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(Errc::DecodeError, "png_create_info_struct failed", path.string());
  }

  Raster out;
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::DecodeError, "corrupt PNG stream", path.string());
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);  // host little-endian samples
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (out.channels != 1 && out.channels != 3)
    throw Error(Errc::DecodeError, "unsupported PNG channel layout", path.string());

  std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  if (out.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i)
      out.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = buffer[i];
  }
  return out;
}

/// Encodes interleaved 8- or 16-bit samples. `samples` holds
/// width*height*channels values; 8-bit rasters must stay below 256.
inline void write(const std::filesystem::path& path, int width, int height, int channels,
                  int bit_depth, const void* samples)
{
  detail::File file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(Errc::IoError, "cannot create PNG", path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            detail::warning_sink);
  if (!png) throw Error(Errc::IoError, "png_create_write_struct failed", path.string());
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(Errc::IoError, "png_create_info_struct failed", path.string());
  }

  std::size_t rowbytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  std::vector<png_byte> buffer(rowbytes * static_cast<std::size_t>(height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  std::size_t n = static_cast<std::size_t>(width) * height * channels;
  if (bit_depth == 16) {
    auto src = static_cast<const std::uint16_t*>(samples);
    for (std::size_t i = 0; i < n; ++i) {
      buffer[2 * i] = static_cast<png_byte>(src[i] >> 8);  // PNG is big-endian
      buffer[2 * i + 1] = static_cast<png_byte>(src[i] & 0xff);
    }
  } else {
    auto src = static_cast<const std::uint8_t*>(samples);
    std::copy(src, src + n, buffer.begin());
  }
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + rowbytes * y;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::IoError, "PNG encode failed", path.string());
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, 3);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               bit_depth, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);

  if (std::fflush(file.get()) != 0 || std::ferror(file.get()))
    throw Error(Errc::IoError, "short write", path.string());
}

} // namespace stereoforge::png

#endif // STEREOFORGE_PNG_CODEC_HPP
