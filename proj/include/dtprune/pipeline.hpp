// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dtprune/btp.hpp"
#include "dtprune/config.hpp"
#include "dtprune/ctp.hpp"
#include "dtprune/image.hpp"
#include "dtprune/mask.hpp"
#include "dtprune/metrics.hpp"
#include "dtprune/qtp.hpp"

namespace dtprune {

namespace detail {

/// Reruns a stage with its name prefixed onto any failure, preserving the
/// error category so exit-code mapping stays correct.
template <typename Fn>
auto with_stage(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    throw IoError(std::string(stage) + " stage: " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(std::string(stage) + " stage: " + e.what());
  } catch (const ArgError& e) {
    throw ArgError(std::string(stage) + " stage: " + e.what());
  } catch (const std::exception& e) {
    throw Error(std::string(stage) + " stage: " + e.what());
  }
}

}  // namespace detail

/// Background stage over one page image: tile, estimate the page mode,
/// threshold, then align the mask to merger blocks.
struct BtpStageResult {
  PatchGrid grid;
  std::uint8_t mode = 0;
  TokenMask raw;     // per-cell decisions
  TokenMask coarse;  // block-aligned, what the encoder consumes
};

inline BtpStageResult run_btp_stage(const RasterImage& image,
                                    const PruneConfig& config) {
  config.validate();
  GrayImage gray = to_grayscale(image);
  BtpStageResult result;
  result.mode = mode_intensity(gray);
  result.grid = tile_patches(gray, config.patch_size);
  result.raw = btp_mask(result.grid, result.mode, config.tau_e, config.tau_bg);
  result.coarse = block_coarsen(result.raw, config.block);
  return result;
}

/// Question-relevance stage: score, lay out on the retrieval grid, bridge
/// to the target grid, smooth, threshold, block-align.
struct QtpStageResult {
  RelevanceMap resized;
  RelevanceMap smoothed;
  TokenMask raw;
  TokenMask coarse;
};

inline QtpStageResult run_qtp_stage(const EmbeddingMatrix& doc,
                                    const EmbeddingMatrix& qst,
                                    std::size_t source_rows,
                                    std::size_t source_cols,
                                    std::size_t target_rows,
                                    std::size_t target_cols,
                                    const PruneConfig& config) {
  config.validate();
  std::vector<float> scores = relevance_scores(doc, qst);
  RelevanceMap map = reshape_to_grid(scores, source_rows, source_cols);
  QtpStageResult result;
  result.resized = bilinear_resize(map, target_rows, target_cols);
  result.smoothed = gaussian_smooth(result.resized, config.sigma);
  result.raw = qtp_mask(result.smoothed, config.tau_qst);
  result.coarse = block_coarsen(result.raw, config.block);
  return result;
}

/// End-to-end result for one page.
struct PageResult {
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  TokenMask btp;       // block-aligned BTP mask
  TokenMask qtp;       // block-aligned QTP mask
  TokenMask combined;  // cell-wise AND, the encoder input mask
  std::optional<std::size_t> prune_layer;
  std::size_t ctp_kept = 0;
  std::optional<TokenMask> ctp;  // decoder-token mask when CTP ran
  FlopsReport report;
};

/// Runs BTP -> QTP -> combine -> CTP on one page and assembles the
/// efficiency report. The decoder trace is optional; without it the report
/// covers encoder-side pruning only. When a trace is supplied its visual
/// token count must equal the combined kept count, i.e. the trace must come
/// from a decoder run over exactly the tokens this pipeline keeps.
inline PageResult run_page_pipeline(const RasterImage& image,
                                    const EmbeddingMatrix& doc_embeddings,
                                    std::size_t embedding_rows,
                                    std::size_t embedding_cols,
                                    const EmbeddingMatrix& qst_embeddings,
                                    const DecoderTrace* trace,
                                    const PruneConfig& config) {
  BtpStageResult btp_result =
      detail::with_stage("btp", [&] { return run_btp_stage(image, config); });
  QtpStageResult qtp_result = detail::with_stage("qtp", [&] {
    return run_qtp_stage(doc_embeddings, qst_embeddings, embedding_rows,
                         embedding_cols, btp_result.grid.rows,
                         btp_result.grid.cols, config);
  });

  PageResult page;
  page.grid_rows = btp_result.grid.rows;
  page.grid_cols = btp_result.grid.cols;
  page.btp = std::move(btp_result.coarse);
  page.qtp = std::move(qtp_result.coarse);
  page.combined = combine_masks(page.btp, page.qtp);

  StagedCounts staged;
  staged.btp_kept = page.btp.kept_count();
  staged.combined_kept = page.combined.kept_count();
  staged.ctp_kept = staged.combined_kept;

  if (trace != nullptr) {
    detail::with_stage("ctp", [&] {
      if (trace->visual_range.size() != staged.combined_kept) {
        throw ArgError("trace visual token count (" +
                       std::to_string(trace->visual_range.size()) +
                       ") does not match the combined kept count (" +
                       std::to_string(staged.combined_kept) + ")");
      }
      CtpResult ctp_result =
          run_ctp(*trace, config.criterion, config.tau_comp, config.tau_att,
                  config.ctp_window.min_layer, config.ctp_window.max_layer);
      page.prune_layer = ctp_result.prune_layer;
      staged.ctp_kept = ctp_result.prune_layer ? ctp_result.mask.kept_count()
                                               : staged.combined_kept;
      page.ctp = std::move(ctp_result.mask);
    });
  }
  page.ctp_kept = staged.ctp_kept;

  page.report = detail::with_stage("metrics", [&] {
    return pipeline_flops(config.encoder_shape, config.decoder_shape,
                          page.grid_rows * page.grid_cols, staged,
                          page.prune_layer, config.text_overhead);
  });
  return page;
}

inline nlohmann::json report_to_json(const FlopsReport& report) {
  nlohmann::json doc;
  doc["encoder_flops"] = report.encoder_flops;
  doc["decoder_flops"] = report.decoder_flops;
  doc["encoder_drop_rate"] = report.encoder_drop_rate;
  doc["decoder_drop_rate"] = report.decoder_drop_rate;
  if (report.prune_layer) {
    doc["prune_layer"] = *report.prune_layer;
  } else {
    doc["prune_layer"] = "no_prune";
  }
  nlohmann::json stages = nlohmann::json::array();
  for (const StageTokens& stage : report.tokens_per_stage) {
    stages.push_back({{"stage", stage.stage}, {"kept", stage.kept}});
  }
  doc["tokens_per_stage"] = stages;
  if (report.measured_encoder_throughput) {
    doc["measured_encoder_throughput"] = *report.measured_encoder_throughput;
  }
  if (report.measured_decoder_throughput) {
    doc["measured_decoder_throughput"] = *report.measured_decoder_throughput;
  }
  return doc;
}

/// CSV rows for Pareto-style plots: each stage with its kept count, the
/// cumulative drop rate versus the raw count, and the total pipeline FLOPs
/// as if that stage were the last one applied.
inline std::string report_to_csv(const FlopsReport& report,
                                 const ModelShape& encoder,
                                 const ModelShape& decoder,
                                 std::uint64_t text_overhead) {
  if (report.tokens_per_stage.size() != 4) {
    throw ArgError("report_to_csv: expected raw/btp/qtp/ctp stage counts");
  }
  std::uint64_t raw = report.tokens_per_stage[0].kept;
  std::uint64_t btp = report.tokens_per_stage[1].kept;
  std::uint64_t qtp = report.tokens_per_stage[2].kept;

  auto total_without_ctp = [&](std::uint64_t btp_kept, std::uint64_t kept) {
    FlopsReport r = pipeline_flops(encoder, decoder, raw,
                                   StagedCounts{btp_kept, kept, kept},
                                   std::nullopt, text_overhead);
    return r.encoder_flops + r.decoder_flops;
  };

  std::ostringstream out;
  out << "stage,kept,drop_rate,total_flops\n";
  out.precision(17);
  out << "raw," << raw << "," << 0.0 << "," << total_without_ctp(raw, raw) << "\n";
  out << "btp," << btp << "," << drop_rate(raw, btp) << ","
      << total_without_ctp(btp, btp) << "\n";
  out << "qtp," << qtp << "," << drop_rate(raw, qtp) << ","
      << total_without_ctp(btp, qtp) << "\n";
  out << "ctp," << report.tokens_per_stage[3].kept << ","
      << drop_rate(raw, report.tokens_per_stage[3].kept) << ","
      << report.encoder_flops + report.decoder_flops << "\n";
  return out.str();
}

}  // namespace dtprune
