// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dtprune/error.hpp"

namespace dtprune {

/// Pipeline stage that produced a mask.
enum class Stage : std::uint8_t { BTP, QTP, Combined, CTP };

inline std::string stage_name(Stage s) {
  switch (s) {
    case Stage::BTP: return "btp";
    case Stage::QTP: return "qtp";
    case Stage::Combined: return "combined";
    case Stage::CTP: return "ctp";
  }
  throw ArgError("unknown stage");
}

inline Stage stage_from_name(const std::string& name) {
  if (name == "btp") return Stage::BTP;
  if (name == "qtp") return Stage::QTP;
  if (name == "combined") return Stage::Combined;
  if (name == "ctp") return Stage::CTP;
  throw FormatError("unknown stage name: " + name);
}

/// Boolean keep/drop decision per grid cell, row-major.
struct TokenMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> keep;  // 0 = drop, 1 = keep
  Stage stage = Stage::BTP;

  static TokenMask filled(std::size_t rows, std::size_t cols, bool value,
                          Stage stage) {
    return TokenMask{rows, cols,
                     std::vector<std::uint8_t>(rows * cols, value ? 1 : 0),
                     stage};
  }

  std::size_t cell_count() const { return rows * cols; }
  bool at(std::size_t row, std::size_t col) const {
    return keep[row * cols + col] != 0;
  }
  void set(std::size_t row, std::size_t col, bool value) {
    keep[row * cols + col] = value ? 1 : 0;
  }

  std::size_t kept_count() const {
    return static_cast<std::size_t>(
        std::count(keep.begin(), keep.end(), std::uint8_t{1}));
  }

  void validate() const {
    if (keep.size() != rows * cols) {
      throw ArgError("TokenMask: keep length != rows*cols");
    }
  }

  bool operator==(const TokenMask& other) const {
    return rows == other.rows && cols == other.cols && keep == other.keep &&
           stage == other.stage;
  }
};

/// Cell-wise AND of two masks over the same grid.
inline TokenMask combine_masks(const TokenMask& a, const TokenMask& b) {
  a.validate();
  b.validate();
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ArgError("combine_masks: dimension mismatch (" +
                   std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                   " vs " + std::to_string(b.rows) + "x" +
                   std::to_string(b.cols) + ")");
  }
  TokenMask out = a;
  out.stage = Stage::Combined;
  for (std::size_t i = 0; i < out.keep.size(); ++i) {
    out.keep[i] = (a.keep[i] != 0 && b.keep[i] != 0) ? 1 : 0;
  }
  return out;
}

/// Aligns a mask to block x block groups: a group is kept entirely iff any
/// member was kept. Groups on a ragged edge (dims not divisible by block)
/// are padded with keep, so they come out fully kept. Never drops a kept
/// cell; idempotent at a fixed block size.
inline TokenMask block_coarsen(const TokenMask& mask, std::size_t block) {
  mask.validate();
  if (block < 1) {
    throw ArgError("block_coarsen: block must be >= 1");
  }
  if (block == 1) {
    return mask;
  }
  TokenMask out = mask;
  for (std::size_t br = 0; br < mask.rows; br += block) {
    for (std::size_t bc = 0; bc < mask.cols; bc += block) {
      bool partial = br + block > mask.rows || bc + block > mask.cols;
      bool any = partial;  // pad-keep on the ragged edge
      for (std::size_t r = br; !any && r < std::min(br + block, mask.rows); ++r) {
        for (std::size_t c = bc; !any && c < std::min(bc + block, mask.cols); ++c) {
          any = mask.at(r, c);
        }
      }
      for (std::size_t r = br; r < std::min(br + block, mask.rows); ++r) {
        for (std::size_t c = bc; c < std::min(bc + block, mask.cols); ++c) {
          out.set(r, c, any);
        }
      }
    }
  }
  return out;
}

}  // namespace dtprune
