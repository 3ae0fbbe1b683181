// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dtprune/error.hpp"
#include "dtprune/mask.hpp"

namespace dtprune {

/// Dense row-major matrix of token embeddings, one row per token.
struct EmbeddingMatrix {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }

  void validate() const {
    if (values.size() != count * dim) {
      throw ArgError("EmbeddingMatrix: values length != count*dim");
    }
    for (float v : values) {
      if (!std::isfinite(v)) {
        throw ArgError("EmbeddingMatrix: non-finite entry");
      }
    }
  }
};

/// 2-D grid of question-token relevance scores.
struct RelevanceMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> scores;

  float at(std::size_t row, std::size_t col) const {
    return scores[row * cols + col];
  }

  void validate() const {
    if (rows < 1 || cols < 1) {
      throw ArgError("RelevanceMap: dimensions must be >= 1");
    }
    if (scores.size() != rows * cols) {
      throw ArgError("RelevanceMap: scores length != rows*cols");
    }
    for (float v : scores) {
      if (!std::isfinite(v)) {
        throw ArgError("RelevanceMap: non-finite entry");
      }
    }
  }
};

/// Per-document-token relevance: the sum over question tokens of the cosine
/// similarity to that token. Zero-norm rows contribute 0 to the sum instead
/// of producing NaN.
inline std::vector<float> relevance_scores(const EmbeddingMatrix& doc,
                                           const EmbeddingMatrix& qst) {
  doc.validate();
  qst.validate();
  if (doc.dim != qst.dim) {
    throw ArgError("relevance_scores: embedding dim mismatch (" +
                   std::to_string(doc.dim) + " vs " + std::to_string(qst.dim) +
                   ")");
  }
  auto row_norm = [](std::span<const float> row) {
    double sum = 0.0;
    for (float v : row) sum += static_cast<double>(v) * v;
    return std::sqrt(sum);
  };
  std::vector<double> qst_norms(qst.count);
  for (std::size_t j = 0; j < qst.count; ++j) {
    qst_norms[j] = row_norm(qst.row(j));
  }

  std::vector<float> scores(doc.count, 0.0f);
  for (std::size_t i = 0; i < doc.count; ++i) {
    std::span<const float> d = doc.row(i);
    double d_norm = row_norm(d);
    if (d_norm == 0.0) {
      continue;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < qst.count; ++j) {
      if (qst_norms[j] == 0.0) continue;
      std::span<const float> q = qst.row(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < doc.dim; ++k) {
        dot += static_cast<double>(d[k]) * q[k];
      }
      total += dot / (d_norm * qst_norms[j]);
    }
    scores[i] = static_cast<float>(total);
  }
  return scores;
}

/// Row-major placement of a flat score vector onto an h x w grid.
inline RelevanceMap reshape_to_grid(std::span<const float> scores,
                                    std::size_t rows, std::size_t cols) {
  if (scores.size() != rows * cols) {
    throw ArgError("reshape_to_grid: " + std::to_string(scores.size()) +
                   " scores cannot fill a " + std::to_string(rows) + "x" +
                   std::to_string(cols) + " grid");
  }
  RelevanceMap map{rows, cols, {scores.begin(), scores.end()}};
  map.validate();
  return map;
}

/// Align-corners bilinear resampling: grid corners map onto grid corners,
/// so page borders stay aligned across feature resolutions. Output values
/// stay within [min(input), max(input)].
inline RelevanceMap bilinear_resize(const RelevanceMap& map, std::size_t rows,
                                    std::size_t cols) {
  map.validate();
  if (rows < 1 || cols < 1) {
    throw ArgError("bilinear_resize: target dims must be >= 1");
  }
  if (rows == map.rows && cols == map.cols) {
    return map;
  }
  RelevanceMap out{rows, cols, std::vector<float>(rows * cols)};
  double row_scale = rows > 1 ? static_cast<double>(map.rows - 1) / (rows - 1) : 0.0;
  double col_scale = cols > 1 ? static_cast<double>(map.cols - 1) / (cols - 1) : 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double sy = r * row_scale;
    std::size_t y0 = static_cast<std::size_t>(sy);
    std::size_t y1 = std::min(y0 + 1, map.rows - 1);
    double fy = sy - static_cast<double>(y0);
    for (std::size_t c = 0; c < cols; ++c) {
      double sx = c * col_scale;
      std::size_t x0 = static_cast<std::size_t>(sx);
      std::size_t x1 = std::min(x0 + 1, map.cols - 1);
      double fx = sx - static_cast<double>(x0);
      double top = map.at(y0, x0) * (1.0 - fx) + map.at(y0, x1) * fx;
      double bottom = map.at(y1, x0) * (1.0 - fx) + map.at(y1, x1) * fx;
      out.scores[r * cols + c] =
          static_cast<float>(top * (1.0 - fy) + bottom * fy);
    }
  }
  return out;
}

namespace detail {

/// Folds an index into [0, n) by symmetric reflection (edge repeated):
/// -1 -> 0, -2 -> 1, n -> n-1, ...
inline std::size_t reflect_index(long long i, std::size_t n) {
  const long long size = static_cast<long long>(n);
  while (i < 0 || i >= size) {
    if (i < 0) i = -i - 1;
    if (i >= size) i = 2 * size - 1 - i;
  }
  return static_cast<std::size_t>(i);
}

inline std::vector<double> gaussian_kernel(double sigma) {
  const long long radius = static_cast<long long>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (long long t = -radius; t <= radius; ++t) {
    double w = std::exp(-static_cast<double>(t * t) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(t + radius)] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;
  return kernel;
}

}  // namespace detail

/// Separable Gaussian convolution with a normalized 1-D kernel of radius
/// ceil(3*sigma), reflect-padded at the borders. sigma below 1e-6 returns
/// the input unchanged.
inline RelevanceMap gaussian_smooth(const RelevanceMap& map, double sigma) {
  map.validate();
  if (sigma < 0.0) {
    throw ArgError("gaussian_smooth: sigma must be >= 0");
  }
  if (sigma < 1e-6) {
    return map;
  }
  std::vector<double> kernel = detail::gaussian_kernel(sigma);
  const long long radius = static_cast<long long>(kernel.size() / 2);

  // Horizontal pass into a double buffer, then vertical pass.
  std::vector<double> horizontal(map.rows * map.cols);
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      double acc = 0.0;
      for (long long t = -radius; t <= radius; ++t) {
        std::size_t sc = detail::reflect_index(static_cast<long long>(c) + t,
                                               map.cols);
        acc += kernel[static_cast<std::size_t>(t + radius)] * map.at(r, sc);
      }
      horizontal[r * map.cols + c] = acc;
    }
  }
  RelevanceMap out{map.rows, map.cols, std::vector<float>(map.rows * map.cols)};
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      double acc = 0.0;
      for (long long t = -radius; t <= radius; ++t) {
        std::size_t sr = detail::reflect_index(static_cast<long long>(r) + t,
                                               map.rows);
        acc += kernel[static_cast<std::size_t>(t + radius)] *
               horizontal[sr * map.cols + c];
      }
      out.scores[r * map.cols + c] = static_cast<float>(acc);
    }
  }
  return out;
}

/// Thresholds a smoothed relevance map. The map is min-max normalized to
/// [0, 1] per page first; a cell is kept iff its normalized score is
/// >= tau_qst. Constant maps normalize to all-1, so everything is kept.
inline TokenMask qtp_mask(const RelevanceMap& smoothed, double tau_qst) {
  smoothed.validate();
  if (tau_qst < 0.0 || tau_qst > 1.0) {
    throw ArgError("qtp_mask: tau_qst must be within [0, 1]");
  }
  float lo = *std::min_element(smoothed.scores.begin(), smoothed.scores.end());
  float hi = *std::max_element(smoothed.scores.begin(), smoothed.scores.end());
  TokenMask mask =
      TokenMask::filled(smoothed.rows, smoothed.cols, false, Stage::QTP);
  if (lo == hi) {
    std::fill(mask.keep.begin(), mask.keep.end(), std::uint8_t{1});
    return mask;
  }
  const double range = static_cast<double>(hi) - lo;
  for (std::size_t i = 0; i < smoothed.scores.size(); ++i) {
    double normalized = (static_cast<double>(smoothed.scores[i]) - lo) / range;
    mask.keep[i] = normalized >= tau_qst ? 1 : 0;
  }
  return mask;
}

}  // namespace dtprune
