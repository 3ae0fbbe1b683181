// Copyright (c) 2026 the dtprune authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 success, 1 computation error,
// 2 usage or I/O error. Machine-readable output goes to stdout as a single
// JSON line per command; details land in the requested output files.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtprune/dtprune.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void emit_line(const json& doc) { std::cout << doc.dump() << "\n"; }

void emit_error(const std::string& message) {
  emit_line(json{{"error", message}});
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  dtprune::detail::write_file_atomic(path, text.data(), text.size());
}

void write_json_file(const fs::path& path, const json& doc) {
  std::string text = doc.dump(2);
  text.push_back('\n');
  write_text_atomic(path, text);
}

json read_json_file(const fs::path& path) {
  if (!fs::exists(path)) {
    throw dtprune::IoError("file not found: " + path.string());
  }
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw dtprune::FormatError("invalid JSON in " + path.string() + ": " +
                               e.what());
  }
}

// ---------------------------------------------------------------------------
// Config plumbing: CLI flag > config file (JSON) > built-in defaults. The
// DTPRUNE_CONFIG environment variable supplies the config path when --config
// is absent.

struct ConfigOverrides {
  std::string config_file;
  std::size_t preset_pages = 0;
  std::optional<std::size_t> patch_size;
  std::optional<int> tau_e;
  std::optional<double> tau_bg;
  std::optional<double> sigma;
  std::optional<double> tau_qst;
  std::optional<std::string> criterion;
  std::optional<double> tau_comp;
  std::optional<double> tau_att;
  std::optional<std::size_t> block;
  std::optional<std::size_t> ctp_min;
  std::optional<std::size_t> ctp_max;
  std::optional<std::uint64_t> text_overhead;
};

void add_config_options(CLI::App* cmd, ConfigOverrides& o) {
  cmd->add_option("--config", o.config_file,
                  "JSON config file (default: $DTPRUNE_CONFIG)");
  cmd->add_option("--preset-pages", o.preset_pages,
                  "Start from the tuned preset for 1, 2 or 4 retrieved pages");
  cmd->add_option("--patch-size", o.patch_size, "Patch side in pixels");
  cmd->add_option("--tau-e", o.tau_e, "Background intensity tolerance");
  cmd->add_option("--tau-bg", o.tau_bg, "Background ratio threshold");
  cmd->add_option("--sigma", o.sigma, "Gaussian smoothing std-dev in cells");
  cmd->add_option("--tau-qst", o.tau_qst, "Relevance threshold in [0,1]");
  cmd->add_option("--criterion", o.criterion,
                  "Comprehension criterion: l2_norm | entropy | feature_delta");
  cmd->add_option("--tau-comp", o.tau_comp, "Comprehension threshold");
  cmd->add_option("--tau-att", o.tau_att, "Attention threshold in [0,1]");
  cmd->add_option("--block", o.block, "Merger block size in cells");
  cmd->add_option("--ctp-min-layer", o.ctp_min, "CTP search window lower bound");
  cmd->add_option("--ctp-max-layer", o.ctp_max, "CTP search window upper bound");
  cmd->add_option("--text-overhead", o.text_overhead,
                  "Constant text-token count added per layer in the FLOPs model");
}

dtprune::PruneConfig resolve_config(const ConfigOverrides& o) {
  dtprune::PruneConfig config =
      o.preset_pages != 0 ? dtprune::PruneConfig::preset_for_pages(o.preset_pages)
                          : dtprune::PruneConfig{};
  std::string path = o.config_file;
  if (path.empty()) {
    if (const char* env = std::getenv("DTPRUNE_CONFIG")) path = env;
  }
  if (!path.empty()) {
    config.apply_json(read_json_file(path));
  }
  if (o.patch_size) config.patch_size = *o.patch_size;
  if (o.tau_e) config.tau_e = *o.tau_e;
  if (o.tau_bg) config.tau_bg = *o.tau_bg;
  if (o.sigma) config.sigma = *o.sigma;
  if (o.tau_qst) config.tau_qst = *o.tau_qst;
  if (o.criterion) config.criterion = dtprune::criterion_from_name(*o.criterion);
  if (o.tau_comp) config.tau_comp = *o.tau_comp;
  if (o.tau_att) config.tau_att = *o.tau_att;
  if (o.block) config.block = *o.block;
  if (o.ctp_min) config.ctp_window.min_layer = *o.ctp_min;
  if (o.ctp_max) config.ctp_window.max_layer = *o.ctp_max;
  if (o.text_overhead) config.text_overhead = *o.text_overhead;
  config.validate();
  return config;
}

// ---------------------------------------------------------------------------
// btp

struct BtpArgs {
  std::string image;
  std::string out_mask;
  ConfigOverrides overrides;
};

int run_btp(const BtpArgs& args) {
  dtprune::PruneConfig config = resolve_config(args.overrides);
  dtprune::RasterImage image = dtprune::load_image(args.image);
  dtprune::BtpStageResult stage = dtprune::run_btp_stage(image, config);
  const dtprune::TokenMask& mask = stage.coarse;
  if (!args.out_mask.empty()) {
    dtprune::write_mask(mask, static_cast<std::uint32_t>(config.patch_size),
                        args.out_mask);
  }
  std::size_t total = mask.cell_count();
  std::size_t kept = mask.kept_count();
  emit_line(json{{"kept", kept},
                 {"total", total},
                 {"drop_rate", dtprune::drop_rate(total, kept)},
                 {"mode_intensity", stage.mode}});
  return 0;
}

// ---------------------------------------------------------------------------
// qtp

struct QtpArgs {
  std::string doc_emb;
  std::string qst_emb;
  std::vector<std::size_t> grid;         // rows cols of the retrieval map
  std::vector<std::size_t> target_grid;  // rows cols of the QA grid
  std::string out_mask;
  ConfigOverrides overrides;
};

int run_qtp(const QtpArgs& args) {
  dtprune::PruneConfig config = resolve_config(args.overrides);
  dtprune::LoadedEmbeddings doc = dtprune::read_embeddings(args.doc_emb);
  dtprune::LoadedEmbeddings qst = dtprune::read_embeddings(args.qst_emb);

  std::size_t rows = 0;
  std::size_t cols = 0;
  if (!args.grid.empty()) {
    rows = args.grid[0];
    cols = args.grid[1];
  } else if (doc.grid) {
    rows = doc.grid->first;
    cols = doc.grid->second;
  } else {
    throw dtprune::ArgError(
        "qtp: retrieval grid unknown; pass --grid or use a 3-D embedding blob");
  }
  std::size_t target_rows = args.target_grid.empty() ? rows : args.target_grid[0];
  std::size_t target_cols = args.target_grid.empty() ? cols : args.target_grid[1];

  dtprune::QtpStageResult stage = dtprune::run_qtp_stage(
      doc.matrix, qst.matrix, rows, cols, target_rows, target_cols, config);
  const dtprune::TokenMask& mask = stage.coarse;
  if (!args.out_mask.empty()) {
    dtprune::write_mask(mask, static_cast<std::uint32_t>(config.patch_size),
                        args.out_mask);
  }
  std::size_t total = mask.cell_count();
  std::size_t kept = mask.kept_count();
  emit_line(json{{"kept", kept},
                 {"total", total},
                 {"drop_rate", dtprune::drop_rate(total, kept)}});
  return 0;
}

// ---------------------------------------------------------------------------
// ctp

struct CtpArgs {
  std::string trace_manifest;
  std::string out_decision;
  ConfigOverrides overrides;
};

int run_ctp_command(const CtpArgs& args) {
  dtprune::PruneConfig config = resolve_config(args.overrides);
  auto [manifest, trace] = dtprune::load_manifest(args.trace_manifest);
  dtprune::CtpResult result = dtprune::run_ctp(
      trace, config.criterion, config.tau_comp, config.tau_att,
      config.ctp_window.min_layer, config.ctp_window.max_layer);

  std::size_t total = trace.visual_range.size();
  std::size_t kept = result.prune_layer ? result.mask.kept_count() : total;
  double progressive = dtprune::decoder_drop_rate_progressive(
      total, result.prune_layer, kept, trace.num_layers);

  json summary{{"criterion", dtprune::criterion_name(config.criterion)},
               {"kept", kept},
               {"total", total},
               {"drop_rate_progressive", progressive}};
  if (result.prune_layer) {
    summary["l_star"] = *result.prune_layer;
  } else {
    summary["l_star"] = "no_prune";
  }

  if (!args.out_decision.empty()) {
    json decision = summary;
    decision["schema_version"] = dtprune::kSchemaVersion;
    decision["config"] = config.to_json();
    std::vector<std::size_t> kept_indices;
    for (std::size_t i = 0; i < result.mask.keep.size(); ++i) {
      if (result.mask.keep[i]) kept_indices.push_back(i);
    }
    decision["kept_indices"] = kept_indices;
    write_json_file(args.out_decision, decision);
  }
  emit_line(summary);
  return 0;
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineArgs {
  std::vector<std::string> images;
  std::vector<std::string> doc_embs;
  std::string qst_emb;
  std::vector<std::string> trace_manifests;
  std::vector<std::size_t> grid;  // optional retrieval grid for 2-D blobs
  std::string out_report;
  std::string out_csv;
  std::string out_mask_dir;
  bool no_ctp = false;
  std::size_t jobs = 1;
  ConfigOverrides overrides;
};

json page_to_json(const dtprune::PageResult& page, const std::string& image) {
  json doc;
  doc["image"] = image;
  doc["grid"] = {{"rows", page.grid_rows}, {"cols", page.grid_cols}};
  doc.update(dtprune::report_to_json(page.report));
  return doc;
}

int run_pipeline(const PipelineArgs& args) {
  dtprune::PruneConfig config = resolve_config(args.overrides);
  const std::size_t n_pages = args.images.size();
  if (n_pages == 0) {
    throw dtprune::ArgError("pipeline: at least one --image is required");
  }
  if (args.doc_embs.size() != n_pages) {
    throw dtprune::ArgError("pipeline: need one --doc-emb per --image");
  }
  const bool ctp_enabled = !args.no_ctp;
  if (ctp_enabled && args.trace_manifests.size() != n_pages) {
    throw dtprune::ArgError(
        "pipeline: need one --trace-manifest per --image (or pass --no-ctp)");
  }

  dtprune::LoadedEmbeddings qst = dtprune::read_embeddings(args.qst_emb);

  std::vector<dtprune::PageResult> pages(n_pages);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto run_one = [&](std::size_t i) {
    dtprune::RasterImage image = dtprune::load_image(args.images[i]);
    dtprune::LoadedEmbeddings doc = dtprune::read_embeddings(args.doc_embs[i]);
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!args.grid.empty()) {
      rows = args.grid[0];
      cols = args.grid[1];
    } else if (doc.grid) {
      rows = doc.grid->first;
      cols = doc.grid->second;
    } else {
      throw dtprune::ArgError(
          "pipeline: retrieval grid unknown for " + args.doc_embs[i] +
          "; pass --grid or use a 3-D embedding blob");
    }
    std::optional<dtprune::DecoderTrace> trace;
    if (ctp_enabled) {
      trace = dtprune::load_manifest(args.trace_manifests[i]).second;
    }
    pages[i] = dtprune::run_page_pipeline(image, doc.matrix, rows, cols,
                                          qst.matrix,
                                          trace ? &*trace : nullptr, config);
  };

  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= n_pages) return;
      try {
        run_one(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  std::size_t thread_count = std::max<std::size_t>(1, std::min(args.jobs, n_pages));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Aggregate counts and FLOPs over pages.
  std::uint64_t raw = 0, btp = 0, qtp = 0, ctp = 0;
  std::uint64_t enc_flops = 0, dec_flops = 0;
  json page_reports = json::array();
  for (std::size_t i = 0; i < n_pages; ++i) {
    const dtprune::FlopsReport& r = pages[i].report;
    raw += r.tokens_per_stage[0].kept;
    btp += r.tokens_per_stage[1].kept;
    qtp += r.tokens_per_stage[2].kept;
    ctp += r.tokens_per_stage[3].kept;
    enc_flops += r.encoder_flops;
    dec_flops += r.decoder_flops;
    page_reports.push_back(page_to_json(pages[i], args.images[i]));
    if (!args.out_mask_dir.empty()) {
      fs::create_directories(args.out_mask_dir);
      fs::path base = fs::path(args.out_mask_dir) /
                      ("page_" + std::to_string(i));
      dtprune::write_mask(pages[i].combined,
                          static_cast<std::uint32_t>(config.patch_size),
                          base.string() + "_combined.json");
      if (pages[i].ctp) {
        dtprune::write_mask(*pages[i].ctp, 0, base.string() + "_ctp.json");
      }
    }
  }

  // Aggregate decoder drop rate: weighted by each page's decoder-side
  // visual token count, so it equals the drop rate of the concatenated run.
  double decoder_rate = 0.0;
  {
    double dropped = 0.0, weight_total = 0.0;
    for (const dtprune::PageResult& page : pages) {
      double weight =
          static_cast<double>(page.report.tokens_per_stage[2].kept);
      dropped += page.report.decoder_drop_rate * weight;
      weight_total += weight;
    }
    decoder_rate = weight_total == 0.0 ? 0.0 : dropped / weight_total;
  }

  json aggregate{{"pages", n_pages},
                 {"tokens_per_stage",
                  json::array({json{{"stage", "raw"}, {"kept", raw}},
                               json{{"stage", "btp"}, {"kept", btp}},
                               json{{"stage", "qtp"}, {"kept", qtp}},
                               json{{"stage", "ctp"}, {"kept", ctp}}})},
                 {"encoder_flops", enc_flops},
                 {"decoder_flops", dec_flops},
                 {"encoder_drop_rate", dtprune::drop_rate(raw, qtp)},
                 {"decoder_drop_rate", decoder_rate}};

  json report{{"schema_version", dtprune::kSchemaVersion},
              {"config", config.to_json()},
              {"pages", page_reports},
              {"aggregate", aggregate}};
  if (!args.out_report.empty()) {
    write_json_file(args.out_report, report);
  }
  if (!args.out_csv.empty()) {
    std::string csv;
    for (std::size_t i = 0; i < n_pages; ++i) {
      std::string rows = dtprune::report_to_csv(
          pages[i].report, config.encoder_shape, config.decoder_shape,
          config.text_overhead);
      if (i == 0) {
        csv += "page," + rows.substr(0, rows.find('\n') + 1);
      }
      std::istringstream lines(rows);
      std::string line;
      std::getline(lines, line);  // skip header
      while (std::getline(lines, line)) {
        csv += std::to_string(i) + "," + line + "\n";
      }
    }
    write_text_atomic(args.out_csv, csv);
  }
  emit_line(aggregate);
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string spec_path;
  std::string out_dir;
  ConfigOverrides overrides;
};

// Builds a deterministic embedding fixture: content cells point along one
// basis direction, background cells along an orthogonal one, and the
// question embedding matches the content direction.
void build_fixture_embeddings(const dtprune::SynthTruth& truth,
                              dtprune::EmbeddingMatrix& doc,
                              dtprune::EmbeddingMatrix& qst) {
  constexpr std::size_t kDim = 8;
  doc.count = truth.background_patches.size();
  doc.dim = kDim;
  doc.values.assign(doc.count * kDim, 0.0f);
  for (std::size_t i = 0; i < doc.count; ++i) {
    if (truth.background_patches[i]) {
      doc.values[i * kDim + 1] = 1.0f;
    } else {
      doc.values[i * kDim] = 1.0f;
    }
  }
  qst.count = 1;
  qst.dim = kDim;
  qst.values.assign(kDim, 0.0f);
  qst.values[0] = 1.0f;
}

int run_synth(const SynthArgs& args) {
  dtprune::PruneConfig config = resolve_config(args.overrides);
  dtprune::SynthSpec spec = dtprune::SynthSpec::from_json(read_json_file(args.spec_path));
  config.patch_size = spec.patch_size;  // fixture geometry wins
  dtprune::SynthTruth truth = dtprune::gen_document(spec);

  fs::path dir(args.out_dir);
  fs::create_directories(dir);
  dtprune::save_ppm(truth.image, dir / "image.ppm");
  dtprune::save_png(truth.image, dir / "image.png");

  json truth_doc{{"schema_version", dtprune::kSchemaVersion},
                 {"rows", truth.rows},
                 {"cols", truth.cols},
                 {"patch_size", spec.patch_size},
                 {"background_count", truth.background_count()}};
  std::vector<std::size_t> background_cells;
  for (std::size_t i = 0; i < truth.background_patches.size(); ++i) {
    if (truth.background_patches[i]) background_cells.push_back(i);
  }
  truth_doc["background_cells"] = background_cells;
  write_json_file(dir / "truth.json", truth_doc);

  dtprune::EmbeddingMatrix doc_emb, qst_emb;
  build_fixture_embeddings(truth, doc_emb, qst_emb);
  dtprune::write_embeddings_grid(doc_emb, truth.rows, truth.cols,
                                 dir / "doc_emb.dpb");
  dtprune::write_embeddings(qst_emb, dir / "qst_emb.dpb");

  // Decoder trace sized to the combined kept count under this config, so
  // the full pipeline runs end to end on the fixture.
  dtprune::BtpStageResult btp_stage = dtprune::run_btp_stage(truth.image, config);
  dtprune::QtpStageResult qtp_stage = dtprune::run_qtp_stage(
      doc_emb, qst_emb, truth.rows, truth.cols, btp_stage.grid.rows,
      btp_stage.grid.cols, config);
  dtprune::TokenMask combined = dtprune::combine_masks(btp_stage.coarse,
                                                       qtp_stage.coarse);
  std::size_t kept = combined.kept_count();

  std::optional<fs::path> manifest_path;
  if (kept > 0) {
    std::vector<std::size_t> spikes;
    for (std::size_t i = 0; i < kept; i += 10) spikes.push_back(i);
    std::size_t num_layers = std::max<std::size_t>(config.decoder_shape.num_layers, 2);
    std::size_t crossing = std::min(config.ctp_window.min_layer + 5, num_layers - 1);
    truth.trace = dtprune::gen_trace(num_layers, 64, crossing, kept, spikes,
                                     spec.seed + 1, 0.9, config.tau_comp);
    manifest_path = dtprune::write_trace(*truth.trace, "synthetic", truth.rows,
                                         truth.cols, dir / "trace");
  }

  write_json_file(dir / "config.json", config.to_json());
  json fixture{{"image", "image.ppm"},
               {"doc_embeddings", "doc_emb.dpb"},
               {"qst_embeddings", "qst_emb.dpb"},
               {"truth", "truth.json"},
               {"config", "config.json"}};
  if (manifest_path) fixture["trace_manifest"] = "trace/manifest.json";
  write_json_file(dir / "fixture.json", fixture);

  emit_line(json{{"out_dir", args.out_dir},
                 {"cells", truth.background_patches.size()},
                 {"background_cells", truth.background_count()},
                 {"combined_kept", kept}});
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  std::string traces_dir;
  std::string out_csv;
  double k = 0.1;
};

int run_analyze(const AnalyzeArgs& args) {
  if (!fs::exists(args.traces_dir)) {
    throw dtprune::IoError("trace directory not found: " + args.traces_dir);
  }
  std::vector<fs::path> manifests;
  for (const auto& entry : fs::recursive_directory_iterator(args.traces_dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "manifest.json") {
      manifests.push_back(entry.path());
    }
  }
  std::sort(manifests.begin(), manifests.end());

  std::ostringstream csv;
  csv.precision(17);
  csv << "trace,layer,l2_norm,feature_delta,entropy,top_decile_mass\n";
  std::size_t row_count = 0;
  for (const fs::path& manifest_path : manifests) {
    auto [manifest, trace] = dtprune::load_manifest(manifest_path);
    dtprune::ComprehensionSeries l2 = dtprune::comprehension_l2(trace);
    std::optional<dtprune::ComprehensionSeries> delta;
    if (trace.num_layers >= 2) {
      delta = dtprune::comprehension_feature_delta(trace);
    }
    std::optional<dtprune::ComprehensionSeries> entropy;
    if (trace.has_logits()) {
      entropy = dtprune::comprehension_entropy(trace);
    }
    std::string id = fs::relative(manifest_path.parent_path(), args.traces_dir)
                         .generic_string();
    for (std::size_t l = 0; l < trace.num_layers; ++l) {
      csv << id << "," << l << "," << l2.values[l] << ",";
      if (delta) csv << delta->values[l];
      csv << ",";
      if (entropy) csv << entropy->values[l];
      csv << ",";
      if (trace.has_attention()) {
        csv << dtprune::top_k_attention_mass(trace.attention_at(l), args.k);
      }
      csv << "\n";
      ++row_count;
    }
  }
  if (!args.out_csv.empty()) {
    write_text_atomic(args.out_csv, csv.str());
  } else {
    std::cout << csv.str();
  }
  emit_line(json{{"traces", manifests.size()}, {"rows", row_count}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dtprune: document token pruning and efficiency accounting"};
  app.require_subcommand(1);

  BtpArgs btp_args;
  CLI::App* btp_cmd = app.add_subcommand(
      "btp", "Background token pruning over a page image");
  btp_cmd->add_option("--image", btp_args.image, "Page image (PNG or PPM)")
      ->required();
  btp_cmd->add_option("--out-mask", btp_args.out_mask, "Mask JSON output path");
  add_config_options(btp_cmd, btp_args.overrides);

  QtpArgs qtp_args;
  CLI::App* qtp_cmd = app.add_subcommand(
      "qtp", "Question-aware token pruning from retrieval embeddings");
  qtp_cmd->add_option("--doc-emb", qtp_args.doc_emb, "Document embeddings blob")
      ->required();
  qtp_cmd->add_option("--qst-emb", qtp_args.qst_emb, "Question embeddings blob")
      ->required();
  qtp_cmd->add_option("--grid", qtp_args.grid,
                      "Retrieval feature grid: rows cols")
      ->expected(2);
  qtp_cmd->add_option("--target-grid", qtp_args.target_grid,
                      "QA feature grid: rows cols")
      ->expected(2);
  qtp_cmd->add_option("--out-mask", qtp_args.out_mask, "Mask JSON output path");
  add_config_options(qtp_cmd, qtp_args.overrides);

  CtpArgs ctp_args;
  CLI::App* ctp_cmd = app.add_subcommand(
      "ctp", "Comprehension-aware pruning decision from a decoder trace");
  ctp_cmd->add_option("--trace-manifest", ctp_args.trace_manifest,
                      "Trace manifest JSON")
      ->required();
  ctp_cmd->add_option("--out-decision", ctp_args.out_decision,
                      "Decision record output path");
  add_config_options(ctp_cmd, ctp_args.overrides);

  PipelineArgs pipeline_args;
  CLI::App* pipeline_cmd = app.add_subcommand(
      "pipeline", "Full BTP -> QTP -> CTP run with efficiency report");
  pipeline_cmd->add_option("--image", pipeline_args.images,
                           "Page image(s), one per page")
      ->required();
  pipeline_cmd->add_option("--doc-emb", pipeline_args.doc_embs,
                           "Document embeddings blob(s), one per page")
      ->required();
  pipeline_cmd->add_option("--qst-emb", pipeline_args.qst_emb,
                           "Question embeddings blob")
      ->required();
  pipeline_cmd->add_option("--trace-manifest", pipeline_args.trace_manifests,
                           "Trace manifest(s), one per page");
  pipeline_cmd->add_option("--grid", pipeline_args.grid,
                           "Retrieval feature grid: rows cols")
      ->expected(2);
  pipeline_cmd->add_option("--out-report", pipeline_args.out_report,
                           "Report JSON output path");
  pipeline_cmd->add_option("--out-csv", pipeline_args.out_csv,
                           "Per-stage CSV output path "
                           "(columns: page,stage,kept,drop_rate,total_flops)");
  pipeline_cmd->add_option("--out-mask-dir", pipeline_args.out_mask_dir,
                           "Directory for per-page mask files");
  pipeline_cmd->add_flag("--no-ctp", pipeline_args.no_ctp,
                         "Encoder-side pruning only; no trace required");
  pipeline_cmd->add_option("--jobs", pipeline_args.jobs,
                           "Max pages processed concurrently");
  add_config_options(pipeline_cmd, pipeline_args.overrides);

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Generate a synthetic page fixture with exact labels");
  synth_cmd->add_option("--spec", synth_args.spec_path, "SynthSpec JSON path")
      ->required();
  synth_cmd->add_option("--out-dir", synth_args.out_dir, "Fixture directory")
      ->required();
  add_config_options(synth_cmd, synth_args.overrides);

  AnalyzeArgs analyze_args;
  CLI::App* analyze_cmd = app.add_subcommand(
      "analyze",
      "Per-layer comprehension and attention-mass CSV over a trace corpus "
      "(columns: trace,layer,l2_norm,feature_delta,entropy,top_decile_mass)");
  analyze_cmd->add_option("--traces", analyze_args.traces_dir,
                          "Directory scanned recursively for manifest.json")
      ->required();
  analyze_cmd->add_option("--out-csv", analyze_args.out_csv, "CSV output path");
  analyze_cmd->add_option("--k", analyze_args.k,
                          "Top fraction for the attention-mass column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (btp_cmd->parsed()) return run_btp(btp_args);
    if (qtp_cmd->parsed()) return run_qtp(qtp_args);
    if (ctp_cmd->parsed()) return run_ctp_command(ctp_args);
    if (pipeline_cmd->parsed()) return run_pipeline(pipeline_args);
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (analyze_cmd->parsed()) return run_analyze(analyze_args);
  } catch (const dtprune::IoError& e) {
    emit_error(e.what());
    return 2;
  } catch (const dtprune::FormatError& e) {
    emit_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error(e.what());
    return 1;
  }
  return 2;
}
