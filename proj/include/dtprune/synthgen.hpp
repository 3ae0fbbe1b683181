// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "dtprune/ctp.hpp"
#include "dtprune/error.hpp"
#include "dtprune/image.hpp"

namespace dtprune {

/// Axis-aligned content region filled with pseudo-random stroke pixels.
struct ContentBox {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;
  std::uint8_t stroke = 0;
  double density = 0.2;  // fraction of box pixels carrying strokes
};

/// Recipe for a synthetic page with exactly known background/content patch
/// labels.
struct SynthSpec {
  std::size_t page_width = 0;
  std::size_t page_height = 0;
  std::size_t patch_size = 28;
  std::uint8_t background = 255;
  std::vector<ContentBox> boxes;
  std::uint64_t seed = 0;

  void validate() const {
    if (page_width < 1 || page_height < 1 || patch_size < 1) {
      throw ArgError("SynthSpec: page dims and patch_size must be >= 1");
    }
    for (const ContentBox& box : boxes) {
      if (box.w < 1 || box.h < 1) {
        throw ArgError("SynthSpec: zero-area content box");
      }
      if (box.x + box.w > page_width || box.y + box.h > page_height) {
        throw ArgError("SynthSpec: content box outside page bounds");
      }
      if (box.stroke == background) {
        throw ArgError("SynthSpec: stroke intensity equals background");
      }
      if (!(box.density > 0.0) || box.density > 1.0) {
        throw ArgError("SynthSpec: density must be within (0, 1]");
      }
    }
  }

  static SynthSpec from_json(const nlohmann::json& doc) {
    SynthSpec spec;
    try {
      spec.page_width = doc.at("page_width").get<std::size_t>();
      spec.page_height = doc.at("page_height").get<std::size_t>();
      spec.patch_size = doc.value("patch_size", std::size_t{28});
      spec.background = doc.value("background", std::uint8_t{255});
      spec.seed = doc.value("seed", std::uint64_t{0});
      for (const auto& b : doc.value("boxes", nlohmann::json::array())) {
        ContentBox box;
        box.x = b.at("x").get<std::size_t>();
        box.y = b.at("y").get<std::size_t>();
        box.w = b.at("w").get<std::size_t>();
        box.h = b.at("h").get<std::size_t>();
        box.stroke = b.value("stroke", std::uint8_t{0});
        box.density = b.value("density", 0.2);
        spec.boxes.push_back(box);
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string{"SynthSpec: bad JSON: "} + e.what());
    }
    spec.validate();
    return spec;
  }
};

/// A generated page together with its exact patch labels over the padded
/// tiling grid (1 = pure-background patch). A matching decoder trace can
/// ride along when the fixture covers the full pipeline.
struct SynthTruth {
  RasterImage image;  // 3-channel, r = g = b
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> background_patches;
  std::optional<DecoderTrace> trace;

  std::size_t background_count() const {
    return static_cast<std::size_t>(std::count(
        background_patches.begin(), background_patches.end(), std::uint8_t{1}));
  }
  std::size_t content_count() const {
    return background_patches.size() - background_count();
  }
};

/// Renders a page from a spec. Deterministic under a fixed seed. Every
/// patch whose (clamp-padded) pixel region intersects a content box is
/// guaranteed at least one stroke pixel inside that intersection, so the
/// geometric labels match the pixel content exactly; patches fully outside
/// all boxes stay uniformly at the background value.
inline SynthTruth gen_document(const SynthSpec& spec) {
  spec.validate();
  const std::size_t W = spec.page_width;
  const std::size_t H = spec.page_height;
  const std::size_t P = spec.patch_size;

  std::vector<std::uint8_t> gray(W * H, spec.background);
  std::mt19937_64 rng(spec.seed);

  // Pseudo-random scatter: exactly round(density * area) distinct stroke
  // pixels per box, via a partial Fisher-Yates shuffle.
  for (const ContentBox& box : spec.boxes) {
    const std::size_t area = box.w * box.h;
    std::size_t target = static_cast<std::size_t>(
        std::llround(box.density * static_cast<double>(area)));
    target = std::min(std::max<std::size_t>(target, 1), area);
    std::vector<std::uint32_t> cells(area);
    for (std::size_t i = 0; i < area; ++i) cells[i] = static_cast<std::uint32_t>(i);
    for (std::size_t i = 0; i < target; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, area - 1);
      std::swap(cells[i], cells[pick(rng)]);
      std::size_t px = box.x + cells[i] % box.w;
      std::size_t py = box.y + cells[i] / box.w;
      gray[py * W + px] = box.stroke;
    }
  }

  SynthTruth truth;
  truth.rows = (H + P - 1) / P;
  truth.cols = (W + P - 1) / P;
  truth.background_patches.assign(truth.rows * truth.cols, 1);

  // Label patches and enforce the one-stroke-per-intersection floor. The
  // patch region is clamped to the page the same way edge-replication
  // padding samples it.
  for (std::size_t r = 0; r < truth.rows; ++r) {
    std::size_t y0 = r * P;
    std::size_t y1 = std::min(y0 + P, H);  // exclusive, after clamping
    for (std::size_t c = 0; c < truth.cols; ++c) {
      std::size_t x0 = c * P;
      std::size_t x1 = std::min(x0 + P, W);
      for (const ContentBox& box : spec.boxes) {
        std::size_t ix0 = std::max(x0, box.x);
        std::size_t ix1 = std::min(x1, box.x + box.w);
        std::size_t iy0 = std::max(y0, box.y);
        std::size_t iy1 = std::min(y1, box.y + box.h);
        if (ix0 >= ix1 || iy0 >= iy1) continue;
        truth.background_patches[r * truth.cols + c] = 0;
        bool has_stroke = false;
        for (std::size_t y = iy0; y < iy1 && !has_stroke; ++y) {
          for (std::size_t x = ix0; x < ix1 && !has_stroke; ++x) {
            has_stroke = gray[y * W + x] == box.stroke;
          }
        }
        if (!has_stroke) {
          std::uniform_int_distribution<std::size_t> fx(ix0, ix1 - 1);
          std::uniform_int_distribution<std::size_t> fy(iy0, iy1 - 1);
          gray[fy(rng) * W + fx(rng)] = box.stroke;
        }
      }
    }
  }

  truth.image.width = W;
  truth.image.height = H;
  truth.image.channels = 3;
  truth.image.data.resize(W * H * 3);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    truth.image.data[3 * i] = gray[i];
    truth.image.data[3 * i + 1] = gray[i];
    truth.image.data[3 * i + 2] = gray[i];
  }
  return truth;
}

/// Builds a decoder trace whose L2 comprehension series is strictly
/// increasing and first reaches tau_comp exactly at crossing_layer.
/// Passing crossing_layer == num_layers produces a series that never
/// crosses. Attention at every layer places spike_mass uniformly on
/// spike_indices and the remainder uniformly elsewhere. Logits sharpen
/// with depth so the entropy criterion is exercised by the same fixture.
inline DecoderTrace gen_trace(std::size_t num_layers, std::size_t hidden_dim,
                              std::size_t crossing_layer, std::size_t n_visual,
                              std::span<const std::size_t> spike_indices,
                              std::uint64_t seed, double spike_mass = 0.9,
                              double tau_comp = 65.0) {
  if (num_layers < 2 || hidden_dim < 1 || n_visual < 1) {
    throw ArgError("gen_trace: need num_layers >= 2, hidden_dim >= 1, n_visual >= 1");
  }
  if (crossing_layer > num_layers) {
    throw ArgError("gen_trace: crossing_layer must be <= num_layers");
  }
  if (!(spike_mass > 0.0) || spike_mass > 1.0) {
    throw ArgError("gen_trace: spike_mass must be within (0, 1]");
  }
  for (std::size_t idx : spike_indices) {
    if (idx >= n_visual) {
      throw ArgError("gen_trace: spike index out of range");
    }
  }
  if (!(tau_comp > 0.0)) {
    throw ArgError("gen_trace: tau_comp must be > 0");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  DecoderTrace trace;
  trace.num_layers = num_layers;
  trace.hidden_dim = hidden_dim;
  trace.hidden.resize(num_layers * hidden_dim);
  trace.visual_range = {0, n_visual};

  // Target norms: strictly increasing, kept clear of tau_comp on either
  // side so float rounding of the stored components cannot flip the
  // crossing.
  const bool never_crosses = crossing_layer == num_layers;
  for (std::size_t l = 0; l < num_layers; ++l) {
    double target;
    if (never_crosses) {
      target = tau_comp * (0.1 + 0.8 * static_cast<double>(l + 1) / (num_layers + 1));
    } else if (l < crossing_layer) {
      target = tau_comp * (0.1 + 0.8 * static_cast<double>(l + 1) /
                                     static_cast<double>(crossing_layer + 1));
    } else {
      target = tau_comp * (1.01 + 0.2 * static_cast<double>(l - crossing_layer) /
                                      static_cast<double>(num_layers));
    }
    std::vector<double> direction(hidden_dim);
    double norm_sq = 0.0;
    for (double& v : direction) {
      v = gauss(rng);
      norm_sq += v * v;
    }
    if (norm_sq == 0.0) {
      direction[0] = 1.0;
      norm_sq = 1.0;
    }
    double scale = target / std::sqrt(norm_sq);
    for (std::size_t k = 0; k < hidden_dim; ++k) {
      trace.hidden[l * hidden_dim + k] = static_cast<float>(direction[k] * scale);
    }
  }

  // Self-check the crossing contract on the realized f32 values.
  {
    ComprehensionSeries series = comprehension_l2(trace);
    double previous = -1.0;
    for (std::size_t l = 0; l < num_layers; ++l) {
      double v = series.values[l];
      if (v <= previous) {
        throw Error("gen_trace: constructed series is not strictly increasing");
      }
      bool crossed = v >= tau_comp;
      bool expected = !never_crosses && l >= crossing_layer;
      if (crossed != expected) {
        throw Error("gen_trace: constructed series violates the crossing contract");
      }
      previous = v;
    }
  }

  // Attention: spike_mass spread over the spikes, remainder over the rest.
  trace.attention.resize(num_layers * n_visual);
  std::vector<std::uint8_t> is_spike(n_visual, 0);
  for (std::size_t idx : spike_indices) is_spike[idx] = 1;
  const std::size_t n_spikes = spike_indices.size();
  float spike_value =
      n_spikes > 0 ? static_cast<float>(spike_mass / static_cast<double>(n_spikes))
                   : 0.0f;
  float rest_value =
      n_spikes < n_visual
          ? static_cast<float>((n_spikes > 0 ? 1.0 - spike_mass : 1.0) /
                               static_cast<double>(n_visual - n_spikes))
          : 0.0f;
  for (std::size_t l = 0; l < num_layers; ++l) {
    for (std::size_t i = 0; i < n_visual; ++i) {
      trace.attention[l * n_visual + i] = is_spike[i] ? spike_value : rest_value;
    }
  }

  // Logits: a single component grows with depth, so entropy decreases.
  trace.vocab = 32;
  trace.logits.assign(num_layers * trace.vocab, 0.0f);
  for (std::size_t l = 0; l < num_layers; ++l) {
    trace.logits[l * trace.vocab] = 0.5f * static_cast<float>(l + 1);
  }

  trace.validate();
  return trace;
}

}  // namespace dtprune
