// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal library walkthrough: build a synthetic page, run the three
// pruning stages in memory, and print the efficiency report.

#include <iostream>

#include "dtprune/dtprune.hpp"

int main() {
  using namespace dtprune;

  // A 448x560 page: mostly background, two content regions.
  SynthSpec spec;
  spec.page_width = 448;
  spec.page_height = 560;
  spec.patch_size = 28;
  spec.background = 255;
  spec.seed = 1;
  spec.boxes.push_back({56, 56, 112, 112, 20, 0.3});
  spec.boxes.push_back({224, 280, 168, 112, 60, 0.25});
  SynthTruth page = gen_document(spec);

  PruneConfig config;  // single-page defaults
  config.patch_size = spec.patch_size;

  // Background stage.
  BtpStageResult btp = run_btp_stage(page.image, config);
  std::cout << "cells: " << btp.grid.cell_count()
            << ", kept after BTP: " << btp.coarse.kept_count() << "\n";

  // Question stage: embeddings would normally come from the retrieval
  // model; here content cells align with the question direction.
  EmbeddingMatrix doc{page.background_patches.size(), 4, {}};
  doc.values.assign(doc.count * 4, 0.0f);
  for (std::size_t i = 0; i < doc.count; ++i) {
    doc.values[i * 4 + (page.background_patches[i] ? 1 : 0)] = 1.0f;
  }
  EmbeddingMatrix qst{1, 4, {1, 0, 0, 0}};
  QtpStageResult qtp = run_qtp_stage(doc, qst, page.rows, page.cols,
                                     btp.grid.rows, btp.grid.cols, config);
  TokenMask combined = combine_masks(btp.coarse, qtp.coarse);
  std::cout << "kept after QTP+combine: " << combined.kept_count() << "\n";

  // Decoder stage: a trace sized to the combined kept count.
  std::vector<std::size_t> spikes = {0, 10, 20};
  DecoderTrace trace = gen_trace(28, 64, 20, combined.kept_count(), spikes, 2);
  CtpResult ctp = run_ctp(trace, config.criterion, config.tau_comp,
                          config.tau_att, config.ctp_window.min_layer,
                          config.ctp_window.max_layer);
  std::cout << "prune layer: "
            << (ctp.prune_layer ? std::to_string(*ctp.prune_layer) : "no_prune")
            << ", kept after CTP: " << ctp.mask.kept_count() << "\n";

  FlopsReport report = pipeline_flops(
      config.encoder_shape, config.decoder_shape, btp.grid.cell_count(),
      StagedCounts{btp.coarse.kept_count(), combined.kept_count(),
                   ctp.mask.kept_count()},
      ctp.prune_layer, config.text_overhead);
  std::cout << "encoder FLOPs: " << report.encoder_flops
            << " (drop rate " << report.encoder_drop_rate << ")\n"
            << "decoder FLOPs: " << report.decoder_flops
            << " (drop rate " << report.decoder_drop_rate << ")\n";
  return 0;
}
