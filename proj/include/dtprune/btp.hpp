// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdlib>
#include <span>

#include "dtprune/error.hpp"
#include "dtprune/image.hpp"
#include "dtprune/mask.hpp"

namespace dtprune {

/// Fraction of patch pixels whose intensity lies strictly within tau_e of
/// the page mode m. Comparison is done in signed arithmetic, so there is no
/// 8-bit wraparound.
inline double background_ratio(std::span<const std::uint8_t> patch,
                               std::uint8_t mode, int tau_e) {
  if (patch.empty()) {
    throw ArgError("background_ratio: empty patch");
  }
  if (tau_e < 0) {
    throw ArgError("background_ratio: tau_e must be >= 0");
  }
  std::size_t close = 0;
  const int m = mode;
  for (std::uint8_t p : patch) {
    if (std::abs(static_cast<int>(p) - m) < tau_e) {
      ++close;
    }
  }
  return static_cast<double>(close) / static_cast<double>(patch.size());
}

/// Background token pruning: a cell is kept iff its background ratio is
/// <= tau_bg. Uniform background pages therefore drop everything for any
/// tau_bg < 1.
inline TokenMask btp_mask(const PatchGrid& grid, std::uint8_t mode, int tau_e,
                          double tau_bg) {
  if (tau_bg < 0.0 || tau_bg > 1.0) {
    throw ArgError("btp_mask: tau_bg must be within [0, 1]");
  }
  TokenMask mask = TokenMask::filled(grid.rows, grid.cols, false, Stage::BTP);
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    double ratio = background_ratio(grid.tile(i), mode, tau_e);
    mask.keep[i] = ratio <= tau_bg ? 1 : 0;
  }
  return mask;
}

}  // namespace dtprune
