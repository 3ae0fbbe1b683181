// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dtprune/btp.hpp"
#include "dtprune/mask.hpp"
#include "dtprune/synthgen.hpp"

using namespace dtprune;

namespace {

TokenMask random_mask(std::size_t rows, std::size_t cols, std::mt19937& rng,
                      double p = 0.5) {
  TokenMask mask = TokenMask::filled(rows, cols, false, Stage::BTP);
  std::bernoulli_distribution keep(p);
  for (auto& cell : mask.keep) cell = keep(rng) ? 1 : 0;
  return mask;
}

}  // namespace

TEST_CASE("background_ratio counts pixels within the tolerance band") {
  std::vector<std::uint8_t> uniform(1024, 128);
  REQUIRE(background_ratio(uniform, 128, 1) == 1.0);

  // 256 of 1024 pixels at m+50, the rest at m; tau_e = 1 only matches m.
  std::vector<std::uint8_t> patch(1024, 100);
  for (std::size_t i = 0; i < 256; ++i) patch[i] = 150;
  REQUIRE(background_ratio(patch, 100, 1) == 0.75);

  // Tolerance above the intensity range matches everything.
  REQUIRE(background_ratio(patch, 100, 256) == 1.0);
  REQUIRE(background_ratio(patch, 0, 256) == 1.0);
}

TEST_CASE("background_ratio uses signed arithmetic, no 8-bit wraparound") {
  std::vector<std::uint8_t> patch = {0, 255};
  // |0 - 255| = 255, not 1; with tau_e = 2 neither pixel is near the other.
  REQUIRE(background_ratio(patch, 255, 2) == 0.5);
  REQUIRE(background_ratio(patch, 0, 2) == 0.5);
}

TEST_CASE("background_ratio rejects empty patches and negative tolerance") {
  REQUIRE_THROWS_AS(background_ratio({}, 0, 1), ArgError);
  std::vector<std::uint8_t> patch = {1};
  REQUIRE_THROWS_AS(background_ratio(patch, 0, -1), ArgError);
}

TEST_CASE("btp_mask drops uniform pages and keeps everything at tau_bg = 1") {
  GrayImage page{64, 64, std::vector<std::uint8_t>(64 * 64, 255)};
  PatchGrid grid = tile_patches(page, 32);
  TokenMask dropped = btp_mask(grid, 255, 1, 0.9);
  REQUIRE(dropped.kept_count() == 0);
  REQUIRE(dropped.stage == Stage::BTP);

  TokenMask kept = btp_mask(grid, 255, 1, 1.0);
  REQUIRE(kept.kept_count() == grid.cell_count());
}

TEST_CASE("btp_mask recovers synthetic ground truth") {
  SynthSpec spec;
  spec.page_width = 640;
  spec.page_height = 640;
  spec.patch_size = 32;
  spec.background = 255;
  spec.seed = 42;
  // Two bands covering patch rows 0-5 and 12-17: 12 of 20 patch rows,
  // i.e. 240 of 400 patches are content.
  spec.boxes.push_back({0, 0, 640, 192, 0, 0.3});
  spec.boxes.push_back({0, 384, 640, 192, 40, 0.3});
  SynthTruth truth = gen_document(spec);
  REQUIRE(truth.background_count() == 160);
  REQUIRE(truth.content_count() == 240);

  GrayImage gray = to_grayscale(truth.image);
  PatchGrid grid = tile_patches(gray, spec.patch_size);
  std::uint8_t mode = mode_intensity(gray);
  REQUIRE(mode == spec.background);

  // Strict separation: a patch is background iff its ratio is exactly 1.
  double tau_bg = 1.0 - 0.5 / (32.0 * 32.0);
  TokenMask mask = btp_mask(grid, mode, 1, tau_bg);
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    REQUIRE(mask.keep[i] == (truth.background_patches[i] ? 0 : 1));
  }

  // Dense content: every content patch here has well over 10% strokes, so
  // the default tau_bg = 0.9 recovers the same labels.
  TokenMask mask_09 = btp_mask(grid, mode, 1, 0.9);
  REQUIRE(mask_09.keep == mask.keep);
}

TEST_CASE("btp monotonicity in tau_bg and tau_e") {
  std::mt19937 rng(7);
  GrayImage page{96, 96, {}};
  page.data.resize(96 * 96);
  std::uniform_int_distribution<int> value(120, 135);
  for (auto& v : page.data) v = static_cast<std::uint8_t>(value(rng));
  PatchGrid grid = tile_patches(page, 32);
  std::uint8_t mode = mode_intensity(page);

  std::size_t previous_kept = 0;
  for (double tau_bg : {0.0, 0.2, 0.5, 0.8, 1.0}) {
    TokenMask mask = btp_mask(grid, mode, 3, tau_bg);
    REQUIRE(mask.kept_count() >= previous_kept);
    previous_kept = mask.kept_count();
  }

  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    double previous_ratio = 0.0;
    for (int tau_e : {0, 1, 4, 16, 64, 256}) {
      double ratio = background_ratio(grid.tile(i), mode, tau_e);
      REQUIRE(ratio >= previous_ratio);
      previous_ratio = ratio;
    }
  }
}

TEST_CASE("block_coarsen identity, any-rule and quadrant example") {
  std::mt19937 rng(3);
  TokenMask mask = random_mask(6, 6, rng);
  REQUIRE(block_coarsen(mask, 1) == mask);

  TokenMask single = TokenMask::filled(2, 2, false, Stage::BTP);
  single.set(1, 0, true);
  TokenMask coarse = block_coarsen(single, 2);
  REQUIRE(coarse.kept_count() == 4);

  TokenMask quad = TokenMask::filled(4, 4, false, Stage::QTP);
  quad.set(0, 0, true);
  quad.set(1, 1, true);
  TokenMask out = block_coarsen(quad, 2);
  REQUIRE(out.stage == Stage::QTP);
  REQUIRE(out.kept_count() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      REQUIRE(out.at(r, c) == (r < 2 && c < 2));
    }
  }
}

TEST_CASE("block_coarsen never drops kept cells and is idempotent") {
  std::mt19937 rng(17);
  for (int round = 0; round < 30; ++round) {
    std::uniform_int_distribution<std::size_t> dim(1, 9);
    std::uniform_int_distribution<std::size_t> block_size(1, 4);
    TokenMask mask = random_mask(dim(rng), dim(rng), rng, 0.3);
    std::size_t block = block_size(rng);
    TokenMask coarse = block_coarsen(mask, block);
    for (std::size_t i = 0; i < mask.keep.size(); ++i) {
      if (mask.keep[i]) REQUIRE(coarse.keep[i] == 1);
    }
    REQUIRE(block_coarsen(coarse, block) == coarse);
  }
}

TEST_CASE("block_coarsen keeps ragged-edge groups") {
  TokenMask mask = TokenMask::filled(3, 3, false, Stage::BTP);
  TokenMask coarse = block_coarsen(mask, 2);
  // The 2x2-aligned interior block stays dropped; every group touching the
  // ragged edge is pad-kept.
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      REQUIRE(coarse.at(r, c) == (r == 2 || c == 2));
    }
  }
}
