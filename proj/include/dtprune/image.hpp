// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dtprune/error.hpp"

namespace dtprune {

/// 8-bit raster page image, 1 (gray) or 3 (RGB) interleaved channels,
/// row-major.
struct RasterImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> data;

  void validate() const {
    if (width < 1 || height < 1) {
      throw ArgError("RasterImage: dimensions must be >= 1");
    }
    if (channels != 1 && channels != 3) {
      throw ArgError("RasterImage: channels must be 1 or 3");
    }
    if (data.size() != width * height * channels) {
      throw ArgError("RasterImage: data length != width*height*channels");
    }
  }
};

/// Single-channel 8-bit intensity map, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t at(std::size_t row, std::size_t col) const {
    return data[row * width + col];
  }

  void validate() const {
    if (width < 1 || height < 1) {
      throw ArgError("GrayImage: dimensions must be >= 1");
    }
    if (data.size() != width * height) {
      throw ArgError("GrayImage: data length != width*height");
    }
  }
};

/// A page tiled into non-overlapping patch_size x patch_size grayscale
/// tiles. Tiles are stored row-major over the grid; each tile is itself
/// row-major with patch_size^2 pixels.
struct PatchGrid {
  std::size_t patch_size = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> tiles;  // rows*cols tiles, contiguous

  std::size_t cell_count() const { return rows * cols; }
  std::size_t pixels_per_tile() const { return patch_size * patch_size; }

  std::span<const std::uint8_t> tile(std::size_t index) const {
    return {tiles.data() + index * pixels_per_tile(), pixels_per_tile()};
  }
  std::span<const std::uint8_t> tile(std::size_t row, std::size_t col) const {
    return tile(row * cols + col);
  }
};

/// ITU-R BT.601 luma conversion, rounded half-up. 1-channel input passes
/// through unchanged.
inline GrayImage to_grayscale(const RasterImage& img) {
  img.validate();
  GrayImage out;
  out.width = img.width;
  out.height = img.height;
  if (img.channels == 1) {
    out.data = img.data;
    return out;
  }
  out.data.resize(img.width * img.height);
  const std::uint8_t* px = img.data.data();
  for (std::size_t i = 0; i < out.data.size(); ++i, px += 3) {
    double luma = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    double rounded = std::floor(luma + 0.5);
    out.data[i] = static_cast<std::uint8_t>(rounded < 0.0     ? 0.0
                                            : rounded > 255.0 ? 255.0
                                                              : rounded);
  }
  return out;
}

/// Tiles an image into patch_size x patch_size cells. Dimensions that are
/// not multiples of patch_size are padded on the bottom/right by edge
/// replication to the next multiple.
inline PatchGrid tile_patches(const GrayImage& img, std::size_t patch_size) {
  img.validate();
  if (patch_size < 1) {
    throw ArgError("tile_patches: patch_size must be >= 1");
  }
  PatchGrid grid;
  grid.patch_size = patch_size;
  grid.rows = (img.height + patch_size - 1) / patch_size;
  grid.cols = (img.width + patch_size - 1) / patch_size;
  grid.tiles.resize(grid.rows * grid.cols * patch_size * patch_size);

  std::uint8_t* out = grid.tiles.data();
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      for (std::size_t y = 0; y < patch_size; ++y) {
        std::size_t sy = r * patch_size + y;
        if (sy >= img.height) sy = img.height - 1;  // edge replication
        for (std::size_t x = 0; x < patch_size; ++x) {
          std::size_t sx = c * patch_size + x;
          if (sx >= img.width) sx = img.width - 1;
          *out++ = img.at(sy, sx);
        }
      }
    }
  }
  return grid;
}

/// Most frequent intensity over all pixels; ties broken by the lowest
/// intensity value.
inline std::uint8_t mode_intensity(const GrayImage& img) {
  img.validate();
  std::array<std::size_t, 256> histogram{};
  for (std::uint8_t v : img.data) {
    ++histogram[v];
  }
  std::size_t best = 0;
  for (std::size_t v = 1; v < 256; ++v) {
    if (histogram[v] > histogram[best]) {
      best = v;
    }
  }
  return static_cast<std::uint8_t>(best);
}

}  // namespace dtprune
