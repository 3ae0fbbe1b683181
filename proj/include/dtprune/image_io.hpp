// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dtprune/error.hpp"
#include "dtprune/image.hpp"

namespace dtprune {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open file: " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

/// Writes to a sibling temp path then renames over the target.
inline void write_file_atomic(const std::filesystem::path& path,
                              const void* data, std::size_t size) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open file for writing: " + tmp.string());
    }
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) {
      throw IoError("short write: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("rename failed: " + tmp.string() + " -> " + path.string());
  }
}

struct PpmHeaderReader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      std::uint8_t c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::size_t read_number() {
    skip_space_and_comments();
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
      throw FormatError("PPM: malformed header");
    }
    std::size_t value = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1u << 30) throw FormatError("PPM: header value out of range");
      ++pos;
    }
    return value;
  }
};

inline RasterImage load_ppm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2) throw FormatError("PPM: truncated header");
  const bool gray = bytes[1] == '5';  // P5 = grayscale, P6 = RGB
  PpmHeaderReader reader{bytes, 2};
  std::size_t width = reader.read_number();
  std::size_t height = reader.read_number();
  std::size_t maxval = reader.read_number();
  if (width < 1 || height < 1) throw FormatError("PPM: bad dimensions");
  if (maxval > 255) {
    throw FormatError("PPM: 16-bit samples are not supported");
  }
  if (maxval < 1) throw FormatError("PPM: bad maxval");
  // Exactly one whitespace byte separates the header from the raster.
  if (reader.pos >= bytes.size()) throw FormatError("PPM: truncated header");
  std::uint8_t sep = bytes[reader.pos];
  if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n') {
    throw FormatError("PPM: malformed header");
  }
  ++reader.pos;

  RasterImage img;
  img.width = width;
  img.height = height;
  img.channels = gray ? 1 : 3;
  std::size_t need = width * height * img.channels;
  if (bytes.size() - reader.pos < need) {
    throw FormatError("PPM: truncated pixel data");
  }
  img.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos + need));
  return img;
}

struct PngByteSource {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

inline void png_read_from_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* src = static_cast<PngByteSource*>(png_get_io_ptr(png));
  if (src->pos + n > src->size) {
    png_error(png, "unexpected end of PNG stream");
  }
  std::memcpy(out, src->data + src->pos, n);
  src->pos += n;
}

inline void png_collect_bytes(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

inline void png_flush_noop(png_structp) {}

inline RasterImage load_png(const std::vector<std::uint8_t>& bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, nullptr);
  if (!png) throw Error("libpng: read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("libpng: info struct allocation failed");
  }

  PngByteSource src{bytes.data(), bytes.size(), 0};
  RasterImage img;
  std::vector<png_bytep> row_ptrs;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("PNG: corrupt or truncated data");
  }

  png_set_read_fn(png, &src, png_read_from_memory);
  png_read_info(png, info);

  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);

  if (bit_depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("PNG: 16-bit images are not supported");
  }

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("PNG: unsupported channel layout");
  }

  img.width = width;
  img.height = height;
  img.channels = static_cast<std::size_t>(channels);
  img.data.resize(img.width * img.height * img.channels);
  row_ptrs.resize(height);
  std::size_t stride = img.width * img.channels;
  for (png_uint_32 y = 0; y < height; ++y) {
    row_ptrs[y] = img.data.data() + y * stride;
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace detail

/// Decodes a PNG or binary PPM (P6) / PGM (P5) file. 16-bit inputs are
/// rejected, never truncated.
inline RasterImage load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("file not found: " + path.string());
  }
  std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) {
    return detail::load_png(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return detail::load_ppm(bytes);
  }
  throw FormatError("unsupported image format: " + path.string());
}

/// Writes P6 (RGB) or P5 (grayscale) binary PPM.
inline void save_ppm(const RasterImage& img, const std::filesystem::path& path) {
  img.validate();
  std::string header = (img.channels == 3 ? "P6\n" : "P5\n") +
                       std::to_string(img.width) + " " +
                       std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> bytes;
  bytes.reserve(header.size() + img.data.size());
  bytes.insert(bytes.end(), header.begin(), header.end());
  bytes.insert(bytes.end(), img.data.begin(), img.data.end());
  detail::write_file_atomic(path, bytes.data(), bytes.size());
}

/// Encodes an 8-bit grayscale or RGB PNG.
inline void save_png(const RasterImage& img, const std::filesystem::path& path) {
  img.validate();
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  if (!png) throw Error("libpng: write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng: info struct allocation failed");
  }

  std::vector<std::uint8_t> encoded;
  std::vector<png_bytep> row_ptrs(img.height);
  std::size_t stride = img.width * img.channels;
  for (std::size_t y = 0; y < img.height; ++y) {
    row_ptrs[y] = const_cast<png_bytep>(img.data.data() + y * stride);
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG: encoding failed");
  }

  png_set_write_fn(png, &encoded, detail::png_collect_bytes, detail::png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);

  detail::write_file_atomic(path, encoded.data(), encoded.size());
}

}  // namespace dtprune
