// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtprune/error.hpp"
#include "dtprune/mask.hpp"

namespace dtprune {

/// Comprehension signal used to pick the decoder pruning layer.
enum class Criterion : std::uint8_t { L2Norm, Entropy, FeatureDelta };

inline std::string criterion_name(Criterion c) {
  switch (c) {
    case Criterion::L2Norm: return "l2_norm";
    case Criterion::Entropy: return "entropy";
    case Criterion::FeatureDelta: return "feature_delta";
  }
  throw ArgError("unknown criterion");
}

inline Criterion criterion_from_name(const std::string& name) {
  if (name == "l2_norm") return Criterion::L2Norm;
  if (name == "entropy") return Criterion::Entropy;
  if (name == "feature_delta") return Criterion::FeatureDelta;
  throw FormatError("unknown criterion name: " + name);
}

/// Half-open token index range [start, end) of the visual tokens inside the
/// decoder sequence.
struct VisualRange {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end > start ? end - start : 0; }
};

/// Exported per-layer last-token state of one decoder run: hidden vectors
/// always, attention over visual tokens and vocabulary logits optionally.
/// All matrices are row-major with one row per layer.
struct DecoderTrace {
  std::size_t num_layers = 0;
  std::size_t hidden_dim = 0;
  std::vector<float> hidden;  // num_layers * hidden_dim

  VisualRange visual_range;
  std::vector<float> attention;  // num_layers * visual_range.size(), or empty

  std::size_t vocab = 0;
  std::vector<float> logits;  // num_layers * vocab, or empty

  bool has_attention() const { return !attention.empty(); }
  bool has_logits() const { return !logits.empty(); }

  std::span<const float> hidden_at(std::size_t layer) const {
    return {hidden.data() + layer * hidden_dim, hidden_dim};
  }
  std::span<const float> attention_at(std::size_t layer) const {
    return {attention.data() + layer * visual_range.size(),
            visual_range.size()};
  }
  std::span<const float> logits_at(std::size_t layer) const {
    return {logits.data() + layer * vocab, vocab};
  }

  void validate() const {
    if (num_layers < 1 || hidden_dim < 1) {
      throw ArgError("DecoderTrace: num_layers and hidden_dim must be >= 1");
    }
    if (hidden.size() != num_layers * hidden_dim) {
      throw ArgError("DecoderTrace: hidden length != num_layers*hidden_dim");
    }
    for (float v : hidden) {
      if (!std::isfinite(v)) {
        throw ArgError("DecoderTrace: non-finite hidden entry");
      }
    }
    if (has_attention()) {
      if (visual_range.size() == 0) {
        throw ArgError("DecoderTrace: attention present but visual_range empty");
      }
      if (attention.size() != num_layers * visual_range.size()) {
        throw ArgError("DecoderTrace: attention length mismatch");
      }
      for (float v : attention) {
        if (!(v >= 0.0f) || !std::isfinite(v)) {
          throw ArgError("DecoderTrace: attention must be non-negative");
        }
      }
    }
    if (has_logits() && logits.size() != num_layers * vocab) {
      throw ArgError("DecoderTrace: logits length != num_layers*vocab");
    }
  }
};

/// Per-layer scalar comprehension proxy.
struct ComprehensionSeries {
  Criterion criterion = Criterion::L2Norm;
  std::vector<double> values;  // one per layer
};

/// Euclidean norm of the last-token hidden state at each layer.
inline ComprehensionSeries comprehension_l2(const DecoderTrace& trace) {
  trace.validate();
  ComprehensionSeries series{Criterion::L2Norm, {}};
  series.values.reserve(trace.num_layers);
  for (std::size_t l = 0; l < trace.num_layers; ++l) {
    double sum = 0.0;
    for (float v : trace.hidden_at(l)) sum += static_cast<double>(v) * v;
    series.values.push_back(std::sqrt(sum));
  }
  return series;
}

/// Shannon entropy (natural log) of the softmax of each layer's logits.
/// Lower entropy means more comprehension; select_prune_layer flips the
/// comparison direction for this criterion.
inline ComprehensionSeries comprehension_entropy(const DecoderTrace& trace) {
  trace.validate();
  if (!trace.has_logits()) {
    throw Error("comprehension_entropy: trace carries no logits");
  }
  ComprehensionSeries series{Criterion::Entropy, {}};
  series.values.reserve(trace.num_layers);
  for (std::size_t l = 0; l < trace.num_layers; ++l) {
    std::span<const float> logits = trace.logits_at(l);
    double max_logit = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (float v : logits) z += std::exp(static_cast<double>(v) - max_logit);
    double entropy = 0.0;
    for (float v : logits) {
      double p = std::exp(static_cast<double>(v) - max_logit) / z;
      if (p > 0.0) entropy -= p * std::log(p);
    }
    series.values.push_back(entropy);
  }
  return series;
}

/// Norm of the difference between successive last-token hidden states;
/// layer 0 is defined as 0.
inline ComprehensionSeries comprehension_feature_delta(
    const DecoderTrace& trace) {
  trace.validate();
  if (trace.num_layers < 2) {
    throw ArgError("comprehension_feature_delta: needs at least 2 layers");
  }
  ComprehensionSeries series{Criterion::FeatureDelta, {}};
  series.values.assign(trace.num_layers, 0.0);
  for (std::size_t l = 1; l < trace.num_layers; ++l) {
    std::span<const float> curr = trace.hidden_at(l);
    std::span<const float> prev = trace.hidden_at(l - 1);
    double sum = 0.0;
    for (std::size_t k = 0; k < trace.hidden_dim; ++k) {
      double d = static_cast<double>(curr[k]) - prev[k];
      sum += d * d;
    }
    series.values[l] = std::sqrt(sum);
  }
  return series;
}

/// First layer inside [min_layer, max_layer] whose comprehension value
/// crosses tau_comp (value >= tau_comp; for the entropy criterion,
/// value <= tau_comp). std::nullopt means no layer qualifies and pruning
/// is skipped entirely. Layers are 0-indexed.
inline std::optional<std::size_t> select_prune_layer(
    const ComprehensionSeries& series, double tau_comp, std::size_t min_layer,
    std::size_t max_layer) {
  if (min_layer > max_layer || max_layer >= series.values.size()) {
    throw ArgError("select_prune_layer: window must satisfy 0 <= min <= max < L");
  }
  const bool lower_is_better = series.criterion == Criterion::Entropy;
  for (std::size_t l = min_layer; l <= max_layer; ++l) {
    double v = series.values[l];
    if (lower_is_better ? v <= tau_comp : v >= tau_comp) {
      return l;
    }
  }
  return std::nullopt;
}

/// Thresholds last-token attention over visual tokens. The vector is first
/// normalized by its maximum, so tau_att lives on a [0, 1] scale regardless
/// of sequence length; a token is kept iff its normalized value is
/// >= tau_att. The argmax token is always kept for tau_att <= 1.
inline TokenMask ctp_mask(std::span<const float> attention, double tau_att) {
  if (attention.empty()) {
    throw ArgError("ctp_mask: empty attention vector");
  }
  if (tau_att < 0.0 || tau_att > 1.0) {
    throw ArgError("ctp_mask: tau_att must be within [0, 1]");
  }
  float max_value = 0.0f;
  for (float v : attention) {
    if (!(v >= 0.0f) || !std::isfinite(v)) {
      throw ArgError("ctp_mask: attention must be non-negative and finite");
    }
    max_value = std::max(max_value, v);
  }
  if (max_value == 0.0f) {
    throw ArgError("ctp_mask: all-zero attention");
  }
  TokenMask mask = TokenMask::filled(1, attention.size(), false, Stage::CTP);
  for (std::size_t i = 0; i < attention.size(); ++i) {
    double normalized = static_cast<double>(attention[i]) / max_value;
    mask.keep[i] = normalized >= tau_att ? 1 : 0;
  }
  return mask;
}

/// Outcome of comprehension-aware pruning on one trace. When no layer
/// crosses the comprehension threshold, prune_layer is empty and the mask
/// keeps every visual token.
struct CtpResult {
  std::optional<std::size_t> prune_layer;
  TokenMask mask;
};

inline ComprehensionSeries comprehension_series(const DecoderTrace& trace,
                                                Criterion criterion) {
  switch (criterion) {
    case Criterion::L2Norm: return comprehension_l2(trace);
    case Criterion::Entropy: return comprehension_entropy(trace);
    case Criterion::FeatureDelta: return comprehension_feature_delta(trace);
  }
  throw ArgError("unknown criterion");
}

/// Selects the pruning layer with the chosen criterion, then thresholds the
/// attention recorded at that layer. The search window is clamped to the
/// trace depth. Pruning happens exactly once at the selected layer.
inline CtpResult run_ctp(const DecoderTrace& trace, Criterion criterion,
                         double tau_comp, double tau_att,
                         std::size_t min_layer, std::size_t max_layer) {
  trace.validate();
  ComprehensionSeries series = comprehension_series(trace, criterion);
  std::size_t last = trace.num_layers - 1;
  std::optional<std::size_t> l_star = select_prune_layer(
      series, tau_comp, std::min(min_layer, last), std::min(max_layer, last));
  if (!l_star) {
    return CtpResult{std::nullopt,
                     TokenMask::filled(1, trace.visual_range.size(), true,
                                       Stage::CTP)};
  }
  if (!trace.has_attention()) {
    throw Error("run_ctp: trace carries no attention for the selected layer");
  }
  return CtpResult{l_star, ctp_mask(trace.attention_at(*l_star), tau_att)};
}

}  // namespace dtprune
