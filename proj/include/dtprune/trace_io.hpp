// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0
//
// Tensor blob format (schema_version 1), all integers little-endian:
//
//   offset 0   magic, 4 ASCII bytes
//   offset 4   version, u32 (= 1)
//   offset 8   ndims, u32 (1..8)
//   offset 12  ndims x u32 extents, row-major order
//   then       payload byte length, u64 (= product(extents) * 4)
//   then       payload: IEEE-754 binary32, little-endian, row-major
//
// Magics: "DPEM" embeddings [count, dim] or [rows, cols, dim];
//         "DPLT" per-layer last-token hidden states [layers, dim];
//         "DPAT" per-layer attention over visual tokens [layers, n_visual];
//         "DPLG" per-layer logits [layers, vocab];
//         "DPRM" relevance map [rows, cols].
//
// Masks and trace manifests are JSON; see write_mask / write_trace below.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtprune/ctp.hpp"
#include "dtprune/error.hpp"
#include "dtprune/image_io.hpp"
#include "dtprune/mask.hpp"
#include "dtprune/qtp.hpp"

namespace dtprune {

inline constexpr std::uint32_t kSchemaVersion = 1;

inline constexpr std::array<char, 4> kMagicEmbedding{'D', 'P', 'E', 'M'};
inline constexpr std::array<char, 4> kMagicHidden{'D', 'P', 'L', 'T'};
inline constexpr std::array<char, 4> kMagicAttention{'D', 'P', 'A', 'T'};
inline constexpr std::array<char, 4> kMagicLogits{'D', 'P', 'L', 'G'};
inline constexpr std::array<char, 4> kMagicRelevance{'D', 'P', 'R', 'M'};

/// One tensor file: a magic-tagged header plus a row-major f32 payload.
struct Blob {
  std::array<char, 4> magic{};
  std::uint32_t version = kSchemaVersion;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return n;
  }
};

namespace detail {

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

inline void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 |
         static_cast<std::uint32_t>(p[3]) << 24;
}

inline std::uint64_t get_u64le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline bool known_magic(const std::array<char, 4>& m) {
  return m == kMagicEmbedding || m == kMagicHidden || m == kMagicAttention ||
         m == kMagicLogits || m == kMagicRelevance;
}

}  // namespace detail

/// Serializes a blob; payloads with non-finite entries are rejected here,
/// not at read time. The file is written to a temp path and renamed.
inline void write_blob(const Blob& blob, const std::filesystem::path& path) {
  if (!detail::known_magic(blob.magic)) {
    throw ArgError("write_blob: unknown magic");
  }
  if (blob.dims.empty() || blob.dims.size() > 8) {
    throw ArgError("write_blob: ndims must be within 1..8");
  }
  for (std::uint32_t d : blob.dims) {
    if (d == 0) throw ArgError("write_blob: zero extent");
  }
  if (blob.element_count() != blob.data.size()) {
    throw ArgError("write_blob: payload length != product(dims)");
  }
  for (float v : blob.data) {
    if (!std::isfinite(v)) {
      throw ArgError("write_blob: non-finite payload entry");
    }
  }

  std::vector<std::uint8_t> bytes;
  bytes.reserve(24 + blob.data.size() * 4);
  bytes.insert(bytes.end(), blob.magic.begin(), blob.magic.end());
  detail::put_u32le(bytes, blob.version);
  detail::put_u32le(bytes, static_cast<std::uint32_t>(blob.dims.size()));
  for (std::uint32_t d : blob.dims) detail::put_u32le(bytes, d);
  detail::put_u64le(bytes, static_cast<std::uint64_t>(blob.data.size()) * 4);
  for (float v : blob.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    detail::put_u32le(bytes, bits);
  }
  detail::write_file_atomic(path, bytes.data(), bytes.size());
}

/// Parses a blob file. The declared payload length, the dims product and
/// the actual byte count must all agree before anything is allocated.
inline Blob read_blob(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("file not found: " + path.string());
  }
  std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
  if (bytes.size() < 12) {
    throw FormatError("blob: short read in header: " + path.string());
  }
  Blob blob;
  std::memcpy(blob.magic.data(), bytes.data(), 4);
  if (!detail::known_magic(blob.magic)) {
    throw FormatError("blob: bad magic in " + path.string());
  }
  blob.version = detail::get_u32le(bytes.data() + 4);
  if (blob.version != kSchemaVersion) {
    throw FormatError("blob: unsupported version " +
                      std::to_string(blob.version) + " in " + path.string());
  }
  std::uint32_t ndims = detail::get_u32le(bytes.data() + 8);
  if (ndims < 1 || ndims > 8) {
    throw FormatError("blob: ndims out of range in " + path.string());
  }
  std::size_t header_size = 12 + std::size_t{ndims} * 4 + 8;
  if (bytes.size() < header_size) {
    throw FormatError("blob: short read in header: " + path.string());
  }
  blob.dims.resize(ndims);
  std::uint64_t product = 1;
  for (std::uint32_t i = 0; i < ndims; ++i) {
    blob.dims[i] = detail::get_u32le(bytes.data() + 12 + 4 * i);
    if (blob.dims[i] == 0) {
      throw FormatError("blob: zero extent in " + path.string());
    }
    product *= blob.dims[i];
    if (product > (std::uint64_t{1} << 32)) {
      throw FormatError("blob: extents overflow in " + path.string());
    }
  }
  std::uint64_t declared = detail::get_u64le(bytes.data() + header_size - 8);
  if (declared != product * 4) {
    throw FormatError("blob: payload length does not match dims in " +
                      path.string());
  }
  if (bytes.size() - header_size != declared) {
    throw FormatError("blob: short read in payload: " + path.string());
  }
  blob.data.resize(static_cast<std::size_t>(product));
  for (std::size_t i = 0; i < blob.data.size(); ++i) {
    std::uint32_t bits = detail::get_u32le(bytes.data() + header_size + 4 * i);
    std::memcpy(&blob.data[i], &bits, 4);
  }
  return blob;
}

/// Convenience check for loaders that expect a specific tensor kind.
inline Blob read_blob(const std::filesystem::path& path,
                      const std::array<char, 4>& expected_magic) {
  Blob blob = read_blob(path);
  if (blob.magic != expected_magic) {
    throw FormatError("blob: expected magic " +
                      std::string(expected_magic.begin(), expected_magic.end()) +
                      ", got " + std::string(blob.magic.begin(), blob.magic.end()) +
                      " in " + path.string());
  }
  return blob;
}

/// Writes a token mask as JSON with sorted kept-cell indices. patch_size
/// records the pixel footprint of one cell (0 for decoder-token masks).
inline void write_mask(const TokenMask& mask, std::uint32_t patch_size,
                       const std::filesystem::path& path) {
  mask.validate();
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["stage"] = stage_name(mask.stage);
  doc["rows"] = mask.rows;
  doc["cols"] = mask.cols;
  doc["patch_size"] = patch_size;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < mask.keep.size(); ++i) {
    if (mask.keep[i]) kept.push_back(i);
  }
  doc["kept"] = kept;
  std::string text = doc.dump(2);
  text.push_back('\n');
  detail::write_file_atomic(path, text.data(), text.size());
}

struct LoadedMask {
  TokenMask mask;
  std::uint32_t patch_size = 0;
};

inline LoadedMask read_mask(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("file not found: " + path.string());
  }
  nlohmann::json doc;
  try {
    std::ifstream in(path);
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("mask: invalid JSON in " + path.string() + ": " + e.what());
  }
  try {
    if (doc.at("schema_version").get<std::uint32_t>() != kSchemaVersion) {
      throw FormatError("mask: unsupported schema_version in " + path.string());
    }
    LoadedMask out;
    out.patch_size = doc.at("patch_size").get<std::uint32_t>();
    out.mask.rows = doc.at("rows").get<std::size_t>();
    out.mask.cols = doc.at("cols").get<std::size_t>();
    out.mask.stage = stage_from_name(doc.at("stage").get<std::string>());
    out.mask.keep.assign(out.mask.rows * out.mask.cols, 0);
    std::size_t previous = 0;
    bool first = true;
    for (const auto& entry : doc.at("kept")) {
      std::size_t index = entry.get<std::size_t>();
      if (index >= out.mask.keep.size()) {
        throw FormatError("mask: kept index out of range in " + path.string());
      }
      if (!first && index <= previous) {
        throw FormatError("mask: kept indices must be strictly ascending in " +
                          path.string());
      }
      out.mask.keep[index] = 1;
      previous = index;
      first = false;
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("mask: missing or mistyped field in " + path.string() +
                      ": " + e.what());
  }
}

/// Describes one exported decoder run: tensor files plus the geometry and
/// conventions needed to interpret them. norm_point records whether hidden
/// states were captured before or after the layer's normalization block;
/// attention must be head-averaged by the producer.
struct TraceManifest {
  std::uint32_t schema_version = kSchemaVersion;
  std::string model_name;
  std::size_t num_layers = 0;
  std::size_t hidden_dim = 0;
  VisualRange visual_range;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::string hidden_file;
  std::optional<std::string> attention_file;
  std::optional<std::string> logits_file;
  std::string norm_point = "post_norm";  // "pre_norm" | "post_norm"
  std::string head_aggregation = "mean";

  void validate() const {
    if (schema_version != kSchemaVersion) {
      throw FormatError("manifest: unsupported schema_version " +
                        std::to_string(schema_version));
    }
    if (num_layers < 1 || hidden_dim < 1) {
      throw FormatError("manifest: num_layers and hidden_dim must be >= 1");
    }
    if (visual_range.end < visual_range.start) {
      throw FormatError("manifest: visual_range end before start");
    }
    if (grid_rows < 1 || grid_cols < 1) {
      throw FormatError("manifest: grid dims must be >= 1");
    }
    if (hidden_file.empty()) {
      throw FormatError("manifest: hidden file missing");
    }
    if (norm_point != "pre_norm" && norm_point != "post_norm") {
      throw FormatError("manifest: norm_point must be pre_norm or post_norm");
    }
    if (head_aggregation != "mean") {
      throw FormatError("manifest: head_aggregation must be mean");
    }
  }
};

inline void write_manifest(const TraceManifest& manifest,
                           const std::filesystem::path& path) {
  manifest.validate();
  nlohmann::json doc;
  doc["schema_version"] = manifest.schema_version;
  doc["model_name"] = manifest.model_name;
  doc["num_layers"] = manifest.num_layers;
  doc["hidden_dim"] = manifest.hidden_dim;
  doc["visual_range"] = {manifest.visual_range.start, manifest.visual_range.end};
  doc["grid"] = {{"rows", manifest.grid_rows}, {"cols", manifest.grid_cols}};
  nlohmann::json files;
  files["hidden"] = manifest.hidden_file;
  if (manifest.attention_file) files["attention"] = *manifest.attention_file;
  if (manifest.logits_file) files["logits"] = *manifest.logits_file;
  doc["files"] = files;
  doc["norm_point"] = manifest.norm_point;
  doc["head_aggregation"] = manifest.head_aggregation;
  std::string text = doc.dump(2);
  text.push_back('\n');
  detail::write_file_atomic(path, text.data(), text.size());
}

inline TraceManifest read_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("file not found: " + path.string());
  }
  nlohmann::json doc;
  try {
    std::ifstream in(path);
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest: invalid JSON in " + path.string() + ": " +
                      e.what());
  }
  TraceManifest manifest;
  try {
    manifest.schema_version = doc.at("schema_version").get<std::uint32_t>();
    manifest.model_name = doc.value("model_name", std::string{});
    manifest.num_layers = doc.at("num_layers").get<std::size_t>();
    manifest.hidden_dim = doc.at("hidden_dim").get<std::size_t>();
    const auto& range = doc.at("visual_range");
    manifest.visual_range.start = range.at(0).get<std::size_t>();
    manifest.visual_range.end = range.at(1).get<std::size_t>();
    manifest.grid_rows = doc.at("grid").at("rows").get<std::size_t>();
    manifest.grid_cols = doc.at("grid").at("cols").get<std::size_t>();
    const auto& files = doc.at("files");
    manifest.hidden_file = files.at("hidden").get<std::string>();
    if (files.contains("attention")) {
      manifest.attention_file = files.at("attention").get<std::string>();
    }
    if (files.contains("logits")) {
      manifest.logits_file = files.at("logits").get<std::string>();
    }
    manifest.norm_point = doc.value("norm_point", std::string{"post_norm"});
    manifest.head_aggregation = doc.value("head_aggregation", std::string{"mean"});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest: missing or mistyped field in " +
                      path.string() + ": " + e.what());
  }
  manifest.validate();
  return manifest;
}

/// Assembles a DecoderTrace from a manifest, cross-checking every declared
/// geometry against the referenced blobs before the trace is returned.
inline std::pair<TraceManifest, DecoderTrace> load_manifest(
    const std::filesystem::path& path) {
  TraceManifest manifest = read_manifest(path);
  std::filesystem::path dir = path.parent_path();

  DecoderTrace trace;
  trace.num_layers = manifest.num_layers;
  trace.hidden_dim = manifest.hidden_dim;
  trace.visual_range = manifest.visual_range;

  Blob hidden = read_blob(dir / manifest.hidden_file, kMagicHidden);
  if (hidden.dims.size() != 2 || hidden.dims[0] != manifest.num_layers ||
      hidden.dims[1] != manifest.hidden_dim) {
    throw FormatError("manifest: hidden blob geometry does not match (" +
                      manifest.hidden_file + ")");
  }
  trace.hidden = std::move(hidden.data);

  if (manifest.attention_file) {
    Blob attention = read_blob(dir / *manifest.attention_file, kMagicAttention);
    if (attention.dims.size() != 2 || attention.dims[0] != manifest.num_layers) {
      throw FormatError("manifest: attention blob geometry does not match (" +
                        *manifest.attention_file + ")");
    }
    if (attention.dims[1] != manifest.visual_range.size()) {
      throw FormatError(
          "manifest: visual_range spans " +
          std::to_string(manifest.visual_range.size()) +
          " tokens but attention blob provides " +
          std::to_string(attention.dims[1]));
    }
    trace.attention = std::move(attention.data);
  }

  if (manifest.logits_file) {
    Blob logits = read_blob(dir / *manifest.logits_file, kMagicLogits);
    if (logits.dims.size() != 2 || logits.dims[0] != manifest.num_layers) {
      throw FormatError("manifest: logits blob geometry does not match (" +
                        *manifest.logits_file + ")");
    }
    trace.vocab = logits.dims[1];
    trace.logits = std::move(logits.data);
  }

  trace.validate();
  return {std::move(manifest), std::move(trace)};
}

/// Writes a trace as blobs plus a manifest into dir. Returns the manifest
/// path. File names are fixed so fixtures stay reproducible.
inline std::filesystem::path write_trace(const DecoderTrace& trace,
                                         const std::string& model_name,
                                         std::size_t grid_rows,
                                         std::size_t grid_cols,
                                         const std::filesystem::path& dir) {
  trace.validate();
  std::filesystem::create_directories(dir);

  TraceManifest manifest;
  manifest.model_name = model_name;
  manifest.num_layers = trace.num_layers;
  manifest.hidden_dim = trace.hidden_dim;
  manifest.visual_range = trace.visual_range;
  manifest.grid_rows = grid_rows;
  manifest.grid_cols = grid_cols;
  manifest.hidden_file = "hidden.dpb";

  Blob hidden{kMagicHidden,
              kSchemaVersion,
              {static_cast<std::uint32_t>(trace.num_layers),
               static_cast<std::uint32_t>(trace.hidden_dim)},
              trace.hidden};
  write_blob(hidden, dir / manifest.hidden_file);

  if (trace.has_attention()) {
    manifest.attention_file = "attention.dpb";
    Blob attention{kMagicAttention,
                   kSchemaVersion,
                   {static_cast<std::uint32_t>(trace.num_layers),
                    static_cast<std::uint32_t>(trace.visual_range.size())},
                   trace.attention};
    write_blob(attention, dir / *manifest.attention_file);
  }
  if (trace.has_logits()) {
    manifest.logits_file = "logits.dpb";
    Blob logits{kMagicLogits,
                kSchemaVersion,
                {static_cast<std::uint32_t>(trace.num_layers),
                 static_cast<std::uint32_t>(trace.vocab)},
                trace.logits};
    write_blob(logits, dir / *manifest.logits_file);
  }

  std::filesystem::path manifest_path = dir / "manifest.json";
  write_manifest(manifest, manifest_path);
  return manifest_path;
}

/// Embeddings helpers over the DPEM blob kind. Accepts [count, dim] or
/// [rows, cols, dim]; the 3-D form also declares the retrieval feature
/// grid.
struct LoadedEmbeddings {
  EmbeddingMatrix matrix;
  std::optional<std::pair<std::size_t, std::size_t>> grid;  // rows, cols
};

inline LoadedEmbeddings read_embeddings(const std::filesystem::path& path) {
  Blob blob = read_blob(path, kMagicEmbedding);
  LoadedEmbeddings out;
  if (blob.dims.size() == 2) {
    out.matrix.count = blob.dims[0];
    out.matrix.dim = blob.dims[1];
  } else if (blob.dims.size() == 3) {
    out.matrix.count = std::size_t{blob.dims[0]} * blob.dims[1];
    out.matrix.dim = blob.dims[2];
    out.grid = {{blob.dims[0], blob.dims[1]}};
  } else {
    throw FormatError("embeddings: expected 2 or 3 dims in " + path.string());
  }
  out.matrix.values = std::move(blob.data);
  out.matrix.validate();
  return out;
}

inline void write_embeddings(const EmbeddingMatrix& matrix,
                             const std::filesystem::path& path) {
  matrix.validate();
  Blob blob{kMagicEmbedding,
            kSchemaVersion,
            {static_cast<std::uint32_t>(matrix.count),
             static_cast<std::uint32_t>(matrix.dim)},
            matrix.values};
  write_blob(blob, path);
}

inline void write_embeddings_grid(const EmbeddingMatrix& matrix,
                                  std::size_t rows, std::size_t cols,
                                  const std::filesystem::path& path) {
  matrix.validate();
  if (rows * cols != matrix.count) {
    throw ArgError("write_embeddings_grid: rows*cols != count");
  }
  Blob blob{kMagicEmbedding,
            kSchemaVersion,
            {static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols),
             static_cast<std::uint32_t>(matrix.dim)},
            matrix.values};
  write_blob(blob, path);
}

}  // namespace dtprune
