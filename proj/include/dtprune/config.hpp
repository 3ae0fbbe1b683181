// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "dtprune/ctp.hpp"
#include "dtprune/error.hpp"
#include "dtprune/metrics.hpp"

namespace dtprune {

/// Decoder layer window searched for the comprehension crossing. Attention
/// before layer 15 is not yet a reliable saliency signal, hence the default
/// lower bound.
struct CtpWindow {
  std::size_t min_layer = 15;
  std::size_t max_layer = 27;
};

/// All pruning thresholds and geometry in one place. Defaults are the
/// single-page setting; presets for 2 and 4 pages are available via
/// preset_for_pages.
struct PruneConfig {
  std::size_t patch_size = 28;
  int tau_e = 1;
  double tau_bg = 0.9;
  double sigma = 1.0;
  double tau_qst = 0.3;
  Criterion criterion = Criterion::L2Norm;
  double tau_comp = 65.0;
  double tau_att = 0.5;
  std::size_t block = 2;
  CtpWindow ctp_window;
  std::size_t pages = 1;

  // FLOPs accounting knobs.
  std::uint64_t text_overhead = 0;
  ModelShape encoder_shape = ModelShape::encoder_vit();
  ModelShape decoder_shape = ModelShape::decoder_7b();

  void validate() const {
    if (patch_size < 1) throw ArgError("config: patch_size must be >= 1");
    if (tau_e < 0) throw ArgError("config: tau_e must be >= 0");
    if (tau_bg < 0.0 || tau_bg > 1.0) throw ArgError("config: tau_bg must be in [0, 1]");
    if (sigma < 0.0) throw ArgError("config: sigma must be >= 0");
    if (tau_qst < 0.0 || tau_qst > 1.0) throw ArgError("config: tau_qst must be in [0, 1]");
    if (tau_att < 0.0 || tau_att > 1.0) throw ArgError("config: tau_att must be in [0, 1]");
    if (block < 1) throw ArgError("config: block must be >= 1");
    if (ctp_window.min_layer > ctp_window.max_layer) {
      throw ArgError("config: ctp_window min_layer > max_layer");
    }
    if (pages < 1) throw ArgError("config: pages must be >= 1");
    encoder_shape.validate();
    decoder_shape.validate();
  }

  /// Tuned threshold sets per retrieved-page count.
  static PruneConfig preset_for_pages(std::size_t pages) {
    PruneConfig config;
    config.pages = pages;
    switch (pages) {
      case 1:
        // Defaults already hold the 1-page values.
        break;
      case 2:
        config.tau_bg = 1.0;
        config.tau_qst = 0.3;
        config.tau_comp = 60.0;
        config.tau_att = 0.25;
        break;
      case 4:
        config.tau_bg = 0.8;
        config.tau_qst = 0.4;
        config.tau_comp = 45.0;
        config.tau_att = 0.075;
        break;
      default:
        throw ArgError("config: no preset for " + std::to_string(pages) +
                       " pages (1, 2 and 4 are available)");
    }
    return config;
  }

  /// Applies only the keys present in the JSON document on top of *this.
  void apply_json(const nlohmann::json& doc) {
    try {
      if (doc.contains("pages")) {
        // The page count selects a preset; explicit keys still win below.
        PruneConfig preset = preset_for_pages(doc.at("pages").get<std::size_t>());
        pages = preset.pages;
        tau_bg = preset.tau_bg;
        tau_qst = preset.tau_qst;
        tau_comp = preset.tau_comp;
        tau_att = preset.tau_att;
      }
      if (doc.contains("patch_size")) patch_size = doc.at("patch_size").get<std::size_t>();
      if (doc.contains("tau_e")) tau_e = doc.at("tau_e").get<int>();
      if (doc.contains("tau_bg")) tau_bg = doc.at("tau_bg").get<double>();
      if (doc.contains("sigma")) sigma = doc.at("sigma").get<double>();
      if (doc.contains("tau_qst")) tau_qst = doc.at("tau_qst").get<double>();
      if (doc.contains("criterion")) {
        criterion = criterion_from_name(doc.at("criterion").get<std::string>());
      }
      if (doc.contains("tau_comp")) tau_comp = doc.at("tau_comp").get<double>();
      if (doc.contains("tau_att")) tau_att = doc.at("tau_att").get<double>();
      if (doc.contains("block")) block = doc.at("block").get<std::size_t>();
      if (doc.contains("ctp_window")) {
        ctp_window.min_layer = doc.at("ctp_window").at(0).get<std::size_t>();
        ctp_window.max_layer = doc.at("ctp_window").at(1).get<std::size_t>();
      }
      if (doc.contains("text_overhead")) {
        text_overhead = doc.at("text_overhead").get<std::uint64_t>();
      }
      if (doc.contains("encoder_shape")) apply_shape(encoder_shape, doc.at("encoder_shape"));
      if (doc.contains("decoder_shape")) apply_shape(decoder_shape, doc.at("decoder_shape"));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string{"config: bad JSON: "} + e.what());
    }
    validate();
  }

  nlohmann::json to_json() const {
    nlohmann::json doc;
    doc["patch_size"] = patch_size;
    doc["tau_e"] = tau_e;
    doc["tau_bg"] = tau_bg;
    doc["sigma"] = sigma;
    doc["tau_qst"] = tau_qst;
    doc["criterion"] = criterion_name(criterion);
    doc["tau_comp"] = tau_comp;
    doc["tau_att"] = tau_att;
    doc["block"] = block;
    doc["ctp_window"] = {ctp_window.min_layer, ctp_window.max_layer};
    doc["pages"] = pages;
    doc["text_overhead"] = text_overhead;
    doc["encoder_shape"] = shape_json(encoder_shape);
    doc["decoder_shape"] = shape_json(decoder_shape);
    return doc;
  }

 private:
  static void apply_shape(ModelShape& shape, const nlohmann::json& doc) {
    if (doc.contains("d_model")) shape.d_model = doc.at("d_model").get<std::uint64_t>();
    if (doc.contains("d_ff")) shape.d_ff = doc.at("d_ff").get<std::uint64_t>();
    if (doc.contains("num_layers")) shape.num_layers = doc.at("num_layers").get<std::size_t>();
    if (doc.contains("num_heads")) shape.num_heads = doc.at("num_heads").get<std::uint64_t>();
    if (doc.contains("vocab")) shape.vocab = doc.at("vocab").get<std::uint64_t>();
    if (doc.contains("name")) shape.name = doc.at("name").get<std::string>();
  }

  static nlohmann::json shape_json(const ModelShape& shape) {
    nlohmann::json doc;
    doc["d_model"] = shape.d_model;
    doc["d_ff"] = shape.d_ff;
    doc["num_layers"] = shape.num_layers;
    doc["num_heads"] = shape.num_heads;
    doc["vocab"] = shape.vocab;
    doc["name"] = shape.name;
    return doc;
  }
};

}  // namespace dtprune
