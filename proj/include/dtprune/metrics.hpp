// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtprune/error.hpp"

namespace dtprune {

/// Transformer shape parameters for the FLOPs model. Defaults match a
/// 7B-class decoder.
struct ModelShape {
  std::uint64_t d_model = 3584;
  std::uint64_t d_ff = 18944;
  std::size_t num_layers = 28;
  std::uint64_t num_heads = 28;
  std::uint64_t vocab = 0;  // optional, unused by the FLOPs model
  std::string name = "decoder-7b";

  void validate() const {
    if (d_model < 1 || d_ff < 1 || num_layers < 1 || num_heads < 1) {
      throw ArgError("ModelShape: all dimensions must be positive");
    }
    if (d_model % num_heads != 0) {
      throw ArgError("ModelShape: d_model must be divisible by num_heads");
    }
  }

  static ModelShape decoder_7b() { return ModelShape{}; }
  static ModelShape encoder_vit() {
    return ModelShape{1280, 5120, 32, 16, 0, "encoder-vit"};
  }
};

/// Fraction of tokens removed.
inline double drop_rate(std::uint64_t initial, std::uint64_t kept) {
  if (initial == 0) {
    throw ArgError("drop_rate: initial token count must be > 0");
  }
  if (kept > initial) {
    throw ArgError("drop_rate: kept exceeds initial");
  }
  return static_cast<double>(initial - kept) / static_cast<double>(initial);
}

/// Layer-weighted decoder drop rate for a single mid-network prune: layers
/// [0, l_star) run at n_visual tokens and [l_star, L) at kept_after, so the
/// one-number summary is 1 - [l*·n + (L-l*)·kept] / (L·n). No prune layer
/// means nothing was dropped.
inline double decoder_drop_rate_progressive(std::uint64_t n_visual,
                                            std::optional<std::size_t> l_star,
                                            std::uint64_t kept_after,
                                            std::size_t num_layers) {
  if (!l_star) {
    return 0.0;
  }
  if (n_visual == 0 || num_layers == 0) {
    throw ArgError("decoder_drop_rate_progressive: empty model or token set");
  }
  if (*l_star >= num_layers) {
    throw ArgError("decoder_drop_rate_progressive: l_star must be < L");
  }
  if (kept_after > n_visual) {
    throw ArgError("decoder_drop_rate_progressive: kept_after > n_visual");
  }
  double token_layers = static_cast<double>(*l_star) * n_visual +
                        static_cast<double>(num_layers - *l_star) * kept_after;
  return 1.0 - token_layers / (static_cast<double>(num_layers) * n_visual);
}

/// Forward-pass FLOPs of a transformer stack at a per-layer sequence length,
/// counting a multiply-accumulate as 2 FLOPs:
///   - QKV + output projections: 4 matmuls       -> 8·N·d^2
///   - causal attention scores + weighted values  -> 2·N^2·d
///   - gated FFN (up, gate, down: 3 matmuls)      -> 6·N·d·d_ff
/// Embeddings, layer norms and the logit head are excluded; they are
/// sub-percent at document scale.
inline std::uint64_t transformer_flops(const ModelShape& shape,
                                       std::span<const std::uint64_t> token_counts) {
  shape.validate();
  if (token_counts.size() != shape.num_layers) {
    throw ArgError("transformer_flops: token_counts length (" +
                   std::to_string(token_counts.size()) +
                   ") != num_layers (" + std::to_string(shape.num_layers) + ")");
  }
  std::uint64_t total = 0;
  for (std::uint64_t n : token_counts) {
    std::uint64_t projections = 8 * n * shape.d_model * shape.d_model;
    std::uint64_t attention = 2 * n * n * shape.d_model;
    std::uint64_t ffn = 6 * n * shape.d_model * shape.d_ff;
    total += projections + attention + ffn;
  }
  return total;
}

/// Kept token count after each pipeline stage, in pipeline order.
struct StageTokens {
  std::string stage;
  std::uint64_t kept = 0;
};

/// Efficiency accounting for one page run.
struct FlopsReport {
  std::uint64_t encoder_flops = 0;
  std::uint64_t decoder_flops = 0;
  double encoder_drop_rate = 0.0;
  double decoder_drop_rate = 0.0;
  std::vector<StageTokens> tokens_per_stage;
  std::optional<std::size_t> prune_layer;
  // Slots for externally measured throughput (img/s); never modeled here.
  std::optional<double> measured_encoder_throughput;
  std::optional<double> measured_decoder_throughput;
};

/// Kept counts after each pruning stage, all in the same token unit.
struct StagedCounts {
  std::uint64_t btp_kept = 0;
  std::uint64_t combined_kept = 0;  // after BTP and QTP, block-aligned
  std::uint64_t ctp_kept = 0;       // ignored when l_star is empty
};

/// Composes the per-stage accounting: the encoder runs every layer at the
/// post-BTP/QTP combined count; the decoder runs layers [0, l*) at that
/// count and [l*, L) at the CTP-kept count. A constant text/prompt token
/// overhead is added to every layer of both stacks (set it to 0 for a pure
/// vision encoder). Drop rates cover visual tokens only.
inline FlopsReport pipeline_flops(const ModelShape& encoder,
                                  const ModelShape& decoder,
                                  std::uint64_t raw_tokens,
                                  const StagedCounts& staged,
                                  std::optional<std::size_t> l_star,
                                  std::uint64_t text_overhead = 0) {
  encoder.validate();
  decoder.validate();
  if (raw_tokens == 0) {
    throw ArgError("pipeline_flops: raw token count must be > 0");
  }
  std::uint64_t ctp_kept = l_star ? staged.ctp_kept : staged.combined_kept;
  if (staged.btp_kept > raw_tokens || staged.combined_kept > staged.btp_kept ||
      ctp_kept > staged.combined_kept) {
    throw ArgError("pipeline_flops: staged counts must be non-increasing");
  }
  if (l_star && *l_star >= decoder.num_layers) {
    throw ArgError("pipeline_flops: l_star must be < decoder layers");
  }

  std::vector<std::uint64_t> encoder_counts(encoder.num_layers,
                                            staged.combined_kept + text_overhead);
  std::vector<std::uint64_t> decoder_counts(decoder.num_layers,
                                            staged.combined_kept + text_overhead);
  if (l_star) {
    for (std::size_t l = *l_star; l < decoder.num_layers; ++l) {
      decoder_counts[l] = ctp_kept + text_overhead;
    }
  }

  FlopsReport report;
  report.encoder_flops = transformer_flops(encoder, encoder_counts);
  report.decoder_flops = transformer_flops(decoder, decoder_counts);
  report.encoder_drop_rate = drop_rate(raw_tokens, staged.combined_kept);
  report.decoder_drop_rate =
      staged.combined_kept == 0
          ? 0.0
          : decoder_drop_rate_progressive(staged.combined_kept, l_star,
                                          ctp_kept, decoder.num_layers);
  report.prune_layer = l_star;
  report.tokens_per_stage = {{"raw", raw_tokens},
                             {"btp", staged.btp_kept},
                             {"qtp", staged.combined_kept},
                             {"ctp", ctp_kept}};
  return report;
}

/// Fraction of total attention mass carried by the ceil(k*N) highest
/// scores.
inline double top_k_attention_mass(std::span<const float> attention, double k) {
  if (attention.empty()) {
    throw ArgError("top_k_attention_mass: empty attention vector");
  }
  if (!(k > 0.0) || k > 1.0) {
    throw ArgError("top_k_attention_mass: k must be within (0, 1]");
  }
  double total = 0.0;
  for (float v : attention) {
    if (!(v >= 0.0f) || !std::isfinite(v)) {
      throw ArgError("top_k_attention_mass: attention must be non-negative");
    }
    total += v;
  }
  if (total == 0.0) {
    throw ArgError("top_k_attention_mass: attention sums to zero");
  }
  std::size_t take = static_cast<std::size_t>(
      std::ceil(k * static_cast<double>(attention.size())));
  take = std::min(take, attention.size());
  std::vector<float> sorted(attention.begin(), attention.end());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(take),
                    sorted.end(), std::greater<float>());
  double mass = 0.0;
  for (std::size_t i = 0; i < take; ++i) mass += sorted[i];
  return mass / total;
}

}  // namespace dtprune
