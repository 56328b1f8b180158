#include "srprom/cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "srprom/fusion.hpp"
#include "srprom/heatmaps.hpp"
#include "srprom/io.hpp"
#include "srprom/masks.hpp"
#include "srprom/prominence.hpp"
#include "srprom/raster.hpp"
#include "srprom/reference.hpp"
#include "srprom/reports.hpp"
#include "srprom/scoring.hpp"

#ifndef SRPROM_VERSION
#define SRPROM_VERSION "0.0.0"
#endif

namespace srprom::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

const char* version() { return SRPROM_VERSION; }

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

namespace {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  Json doc = Json::object();
  std::string hash;  // sha256 of the config file bytes ("{}" when absent)
  fs::path base;     // relative config paths resolve against this

  std::optional<fs::path> path_of(const std::string& key) const {
    if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
    if (!doc[key].is_string()) throw ValidationError("config key '" + key + "' must be a path string");
    fs::path p = doc[key].get<std::string>();
    return p.is_relative() ? base / p : p;
  }

  template <typename T>
  T value(const std::string& section, const std::string& key, T fallback) const {
    if (!doc.contains(section) || !doc[section].is_object()) return fallback;
    const auto& s = doc[section];
    if (!s.contains(key)) return fallback;
    try {
      return s[key].get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("config key '" + section + "." + key + "' has the wrong type");
    }
  }
};

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) {
    cfg.hash = sha256_hex("{}");
    cfg.base = fs::current_path();
    return cfg;
  }
  const std::string bytes = io::read_file_bytes(path);
  try {
    cfg.doc = Json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("run config " + path + ": " + e.what());
  }
  if (!cfg.doc.is_object()) throw ValidationError("run config must be a JSON object");
  cfg.hash = sha256_hex(bytes);
  cfg.base = fs::absolute(path).parent_path();
  return cfg;
}

heatmaps::ProviderRegistry registry_from(const RunConfig& cfg) {
  const auto defaults = heatmaps::ProviderRegistry::defaults();
  if (!cfg.doc.contains("providers")) return defaults;
  heatmaps::ProviderRegistry custom;
  if (cfg.doc["providers"].is_string()) {
    custom = heatmaps::ProviderRegistry::from_file(*cfg.path_of("providers"));
  } else {
    custom = heatmaps::ProviderRegistry::from_json(cfg.doc["providers"].dump());
  }
  std::vector<heatmaps::ProviderSpec> merged;
  for (const auto& name : defaults.names())
    if (!custom.contains(name)) merged.push_back(defaults.at(name));
  for (const auto& name : custom.names()) merged.push_back(custom.at(name));
  return heatmaps::ProviderRegistry(std::move(merged));
}

std::optional<reference::ReferenceConfig> references_from(const RunConfig& cfg) {
  if (!cfg.doc.contains("references")) return std::nullopt;
  if (cfg.doc["references"].is_string()) return reference::ReferenceConfig::from_file(*cfg.path_of("references"));
  return reference::ReferenceConfig::from_json(cfg.doc["references"].dump(), cfg.base);
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

void write_json(const fs::path& path, const Json& j) { io::write_file_bytes(path, j.dump(2) + "\n"); }

void write_run_manifest(const fs::path& out, const std::string& command, const RunConfig& cfg, std::uint64_t seed) {
  Json m;
  m["tool"] = "srprom";
  m["version"] = version();
  m["command"] = command;
  m["config_sha256"] = cfg.hash;
  m["seed"] = seed;
  write_json(out / "run_manifest.json", m);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

/// Runs fn(i) for i in [0, n) on up to `workers` threads; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  const std::size_t pool = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (pool <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < pool; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("expected a comma-separated list of positive integers, got '" + s + "'");
    }
  }
  return out;
}

Size image_size(const ImageBuffer& img) { return {img.width(), img.height()}; }

Json rect_json(const Rect& r) { return Json::array({r.x0, r.y0, r.x1, r.y1}); }

// ---------------------------------------------------------------------------
// Heatmap computation shared by `heatmap` and `propose`
// ---------------------------------------------------------------------------

struct HeatmapInputs {
  std::string ref;
  std::string test;
  std::string bic;
  std::string lr;
  std::string lpips;
  std::string input;
  std::string component;
  std::string source;
  std::string sr;
};

heatmaps::SsmJupParams ssm_params(const RunConfig& cfg) {
  heatmaps::SsmJupParams p;
  p.window = cfg.value("ssm_jup", "window", p.window);
  p.sigma = cfg.value("ssm_jup", "sigma", p.sigma);
  p.exponent = cfg.value("ssm_jup", "exponent", p.exponent);
  p.residual_scale = cfg.value("ssm_jup", "residual_scale", p.residual_scale);
  return p;
}

struct ComputedHeatmap {
  Heatmap map;
  std::optional<io::GridLayout> grid;  // set when `map` is a block grid
};

ImageBuffer load_reference(const HeatmapInputs& in, const RunConfig& cfg, Size target) {
  if (!in.ref.empty()) {
    ImageBuffer ref = io::read_image(in.ref);
    if (image_size(ref) != target) ref = raster::resize(ref, target.width, target.height, raster::ResizeMode::Bicubic);
    return ref;
  }
  const auto refs = references_from(cfg);
  if (!refs || in.component.empty() || in.source.empty()) {
    throw ValidationError("a reference is required: pass --ref, or --component/--source/--sr with config references");
  }
  ArtifactRecord rec;
  rec.component = in.component;
  rec.source = in.source;
  rec.sr = in.sr;
  return reference::resolve_reference(rec, *refs, target);
}

ImageBuffer load_bicubic(const HeatmapInputs& in, Size target) {
  if (!in.bic.empty()) {
    ImageBuffer bic = io::read_image(in.bic);
    if (image_size(bic) != target) throw ValidationError("--bic must match the SR image size");
    return bic;
  }
  if (in.lr.empty()) throw ValidationError("ssm_jup needs --bic or --lr");
  return raster::resize(io::read_image(in.lr), target.width, target.height, raster::ResizeMode::Bicubic);
}

ComputedHeatmap compute_heatmap(const std::string& provider, const HeatmapInputs& in, const RunConfig& cfg,
                                const heatmaps::ProviderRegistry& registry) {
  if (!in.input.empty()) {
    const auto content = io::read_srph(in.input);
    const auto& spec = registry.at(provider);
    Size target = content.grid ? content.grid->image : Size{content.field.width(), content.field.height()};
    if (!in.test.empty()) target = image_size(io::read_image(in.test));
    Heatmap h = heatmaps::ingest_block_heatmap(content, spec, target);
    h.set_provider(provider);
    return {std::move(h), std::nullopt};
  }
  if (in.test.empty()) throw ValidationError("--test (the SR image) is required");
  const ImageBuffer test = io::read_image(in.test);
  const Size size = image_size(test);
  const ImageBuffer ref = load_reference(in, cfg, size);
  if (provider == "ssim") return {heatmaps::ssim_map(ref, test), std::nullopt};
  if (provider == "ssm_jup") return {heatmaps::ssm_jup(ref, test, load_bicubic(in, size), ssm_params(cfg)), std::nullopt};
  if (provider == "erqa") {
    const auto grid = heatmaps::erqa_map(ref, test);
    Heatmap h(grid.cols, grid.rows, Polarity::SimilarityHigh, grid.scores);
    h.set_provider("erqa");
    return {std::move(h), io::GridLayout{grid.block, grid.stride, grid.image}};
  }
  if (provider == "bd_jup") {
    if (in.lpips.empty()) throw ValidationError("bd_jup needs --lpips (block grid SRPH)");
    const auto content = io::read_srph(in.lpips);
    const io::GridLayout layout = content.grid ? *content.grid : io::GridLayout{32, 16, size};
    if (layout.image != size) throw ValidationError("LPIPS grid was computed on a different image size");
    const auto lpips = heatmaps::BlockGrid::from_heatmap(content.field, layout);
    return {heatmaps::bd_jup(lpips, heatmaps::erqa_map(ref, test)), std::nullopt};
  }
  throw ValidationError("provider '" + provider +
                        "' is not computed here; pass its SRPH file with --input (computed: ssim, ssm_jup, erqa, bd_jup)");
}

void add_heatmap_inputs(CLI::App* sub, HeatmapInputs& in) {
  sub->add_option("--ref", in.ref, "Reference image (PNG)");
  sub->add_option("--test", in.test, "SR image (PNG)");
  sub->add_option("--bic", in.bic, "Bicubic upscale of the LR input (ssm_jup)");
  sub->add_option("--lr", in.lr, "Low-resolution input; bicubic-upscaled when --bic is absent");
  sub->add_option("--lpips", in.lpips, "LPIPS block grid SRPH (bd_jup)");
  sub->add_option("--input", in.input, "Precomputed SRPH heatmap to ingest");
  sub->add_option("--component", in.component, "Dataset component (reference lookup)");
  sub->add_option("--source", in.source, "Source image id (reference lookup)");
  sub->add_option("--sr", in.sr, "SR method id (reference lookup)");
}

// ---------------------------------------------------------------------------
// Records and heatmaps used by scoring
// ---------------------------------------------------------------------------

std::vector<ArtifactRecord> load_manifest(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return io::read_manifest(flag);
  const auto p = cfg.path_of("manifest");
  if (!p) throw ValidationError("no manifest: pass --manifest or set \"manifest\" in the config");
  return io::read_manifest(*p);
}

fs::path resolve_under(const fs::path& root, const std::string& p) {
  fs::path path = p;
  return path.is_relative() ? root / path : path;
}

std::string expand_heatmap_template(std::string templ, const std::string& provider, const ArtifactRecord& r) {
  const std::string key = "{provider}";
  for (auto pos = templ.find(key); pos != std::string::npos; pos = templ.find(key)) templ.replace(pos, key.size(), provider);
  return reference::expand_path_template(templ, r);
}

std::vector<stats::Assignment> load_votes(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return stats::read_votes(flag);
  const auto p = cfg.path_of("votes");
  if (!p) throw ValidationError("no votes: pass --votes or set \"votes\" in the config");
  return stats::read_votes(*p);
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int workers = 0;
};

std::uint64_t run_seed(const Common& c, const RunConfig& cfg) {
  if (c.seed) return *c.seed;
  if (cfg.doc.contains("seed")) {
    try {
      return cfg.doc["seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("config seed must be a non-negative integer");
    }
  }
  return 0;
}

int run_workers(const Common& c, const RunConfig& cfg) {
  if (c.workers > 0) return c.workers;
  if (cfg.doc.contains("workers") && cfg.doc["workers"].is_number_integer()) return std::max(1, cfg.doc["workers"].get<int>());
  return 1;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Artifact heatmaps, crowd prominence aggregation and detector scoring", "srprom"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Run-config JSON");
    sub->add_option("--out", common.out, "Output directory")->required();
    sub->add_option("--seed", common.seed, "Run seed (overrides the config)");
    sub->add_option("--workers", common.workers, "Worker threads");
  };

  // heatmap
  auto* heatmap_cmd = app.add_subcommand("heatmap", "Compute or ingest a provider heatmap (SRPH)");
  std::string provider;
  std::string name;
  HeatmapInputs hin;
  heatmap_cmd->add_option("--provider", provider, "ssim, ssm_jup, erqa, bd_jup or a registry name with --input")->required();
  heatmap_cmd->add_option("--name", name, "Output file name (default <provider>.srph)");
  add_heatmap_inputs(heatmap_cmd, hin);
  add_common(heatmap_cmd);

  // propose
  auto* propose_cmd = app.add_subcommand("propose", "Threshold a heatmap and keep the strongest components");
  std::optional<double> threshold;
  int k = masks::kDefaultCandidatesPerMetric;
  std::size_t min_pixels = masks::kMinCandidatePixels;
  std::string heatmap_path;
  propose_cmd->add_option("--provider", provider, "Provider name in the registry")->required();
  propose_cmd->add_option("--t", threshold, "Threshold (default: registry value)");
  propose_cmd->add_option("--k", k, "Candidates to keep")->check(CLI::PositiveNumber);
  propose_cmd->add_option("--min-pixels", min_pixels, "Smallest component kept");
  propose_cmd->add_option("--heatmap", heatmap_path, "Pixel-level SRPH heatmap (else computed from images)");
  add_heatmap_inputs(propose_cmd, hin);
  add_common(propose_cmd);

  // prep-view
  auto* prep_cmd = app.add_subcommand("prep-view", "Viewer preprocessing: open 25, dilate disk 64, close 25");
  std::string mask_path;
  prep_cmd->add_option("--mask", mask_path, "Mask PNG")->required();
  prep_cmd->add_option("--name", name, "Output file name (default view.png)");
  add_common(prep_cmd);

  // render-pair
  auto* render_cmd = app.add_subcommand("render-pair", "Render the annotation pair shown to workers");
  std::string lr_path;
  std::string sr_path;
  bool crop = false;
  int crop_pad = masks::kDefaultCropPad;
  render_cmd->add_option("--lr", lr_path, "Low-resolution input")->required();
  render_cmd->add_option("--sr", sr_path, "SR output")->required();
  render_cmd->add_option("--mask", mask_path, "Display mask PNG (SR size)")->required();
  render_cmd->add_flag("--crop", crop, "Crop to the mask bounding box plus padding");
  render_cmd->add_option("--crop-pad", crop_pad, "Crop padding in SR pixels");
  add_common(render_cmd);

  // aggregate
  auto* aggregate_cmd = app.add_subcommand("aggregate", "QC-filter votes and compute prominence per mask");
  std::string votes_path;
  std::string manifest_path;
  std::string qc_scope = "assignment";
  aggregate_cmd->add_option("--votes", votes_path, "Vote JSON lines");
  aggregate_cmd->add_option("--manifest", manifest_path, "Records to update (question id = mask path)");
  aggregate_cmd->add_option("--qc-scope", qc_scope, "assignment or worker");
  add_common(aggregate_cmd);

  // bootstrap
  auto* bootstrap_cmd = app.add_subcommand("bootstrap", "Bootstrap confidence intervals of prominence");
  int assessors = 0;
  int resamples = 0;
  double level = 0.0;
  bootstrap_cmd->add_option("--votes", votes_path, "Vote JSON lines");
  bootstrap_cmd->add_option("--k", assessors, "Votes drawn per resample")->check(CLI::PositiveNumber);
  bootstrap_cmd->add_option("--n", resamples, "Resamples")->check(CLI::PositiveNumber);
  bootstrap_cmd->add_option("--level", level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  bootstrap_cmd->add_option("--qc-scope", qc_scope, "assignment or worker");
  add_common(bootstrap_cmd);

  // score
  auto* score_cmd = app.add_subcommand("score", "Threshold-free prominence score of one provider");
  std::string component;
  std::string heatmap_template;
  std::string masks_root;
  score_cmd->add_option("--component", component, "Dataset component")->required();
  score_cmd->add_option("--provider", provider, "Provider name")->required();
  score_cmd->add_option("--manifest", manifest_path, "Annotated records");
  score_cmd->add_option("--heatmaps", heatmap_template, "Heatmap path template ({provider},{component},{source},{sr})");
  score_cmd->add_option("--masks-root", masks_root, "Directory that mask paths are relative to");
  add_common(score_cmd);

  // tables
  auto* tables_cmd = app.add_subcommand("tables", "Dataset, detector and SR tables");
  std::string srcc_path;
  tables_cmd->add_option("--manifest", manifest_path, "Annotated records");
  tables_cmd->add_option("--votes", votes_path, "Vote JSON lines (worker counts)");
  tables_cmd->add_option("--srcc", srcc_path, "JSON {metric: srcc} for the Prom x Conf agreement");
  tables_cmd->add_option("--qc-scope", qc_scope, "assignment or worker");
  add_common(tables_cmd);

  // calibrate
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Precision x Recall threshold calibration");
  std::string set_path;
  calibrate_cmd->add_option("--provider", provider, "Provider name")->required();
  calibrate_cmd->add_option("--set", set_path, "JSON list of {heatmap, masks[]}")->required();
  add_common(calibrate_cmd);

  // fuse-train
  auto* train_cmd = app.add_subcommand("fuse-train", "Train the per-pixel fusion baseline");
  std::string examples_path;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::string hidden;
  std::optional<std::size_t> pixel_sample;
  train_cmd->add_option("--examples", examples_path, "JSON list of {dists, ssm_jup, bd_jup, mask, prominence}")->required();
  train_cmd->add_option("--epochs", epochs, "Epochs");
  train_cmd->add_option("--lr", lr, "Adam learning rate");
  train_cmd->add_option("--hidden", hidden, "Hidden widths, e.g. 128,128");
  train_cmd->add_option("--pixel-sample", pixel_sample, "Pixels sampled per region and step (0 = all)");
  add_common(train_cmd);

  // fuse-predict
  auto* predict_cmd = app.add_subcommand("fuse-predict", "Apply a trained fusion model");
  std::string model_path;
  std::string dists_path;
  std::string ssm_path;
  std::string bd_path;
  double display_threshold = fusion::kDisplayThreshold;
  predict_cmd->add_option("--model", model_path, "Model file")->required();
  predict_cmd->add_option("--dists", dists_path, "DISTS SRPH")->required();
  predict_cmd->add_option("--ssm", ssm_path, "ssm_jup SRPH")->required();
  predict_cmd->add_option("--bd", bd_path, "bd_jup SRPH")->required();
  predict_cmd->add_option("--threshold", display_threshold, "Mask threshold");
  add_common(predict_cmd);

  // compare-ref
  auto* compare_cmd = app.add_subcommand("compare-ref", "Original-HR vs pseudo-GT score comparison");
  std::string hr_path;
  std::string pseudo_path;
  compare_cmd->add_option("--hr", hr_path, "JSON {provider: srcc} from the original-HR run")->required();
  compare_cmd->add_option("--pseudo", pseudo_path, "JSON {provider: srcc} from the pseudo-GT run")->required();
  add_common(compare_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  try {
    const RunConfig cfg = load_config(common.config);
    const fs::path out = common.out;
    const std::uint64_t seed = run_seed(common, cfg);
    const int workers = run_workers(common, cfg);
    const auto* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();

    if (sub == heatmap_cmd) {
      const auto registry = registry_from(cfg);
      const auto result = compute_heatmap(provider, hin, cfg, registry);
      io::write_heatmap(out / (name.empty() ? provider + ".srph" : name), result.map, result.grid);
    } else if (sub == propose_cmd) {
      const auto registry = registry_from(cfg);
      auto spec = registry.at(provider);
      if (threshold) spec.threshold = *threshold;
      spec.validate();
      Heatmap h = heatmap_path.empty() ? compute_heatmap(provider, hin, cfg, registry).map
                                       : io::read_heatmap(heatmap_path);
      if (h.width() == 0 || h.height() == 0) throw ValidationError("empty heatmap");
      h.set_polarity(spec.polarity);
      const auto cands = masks::extract_candidates(masks::threshold_heatmap(h, spec), h, k, min_pixels);
      Json list = Json::array();
      for (std::size_t i = 0; i < cands.size(); ++i) {
        char file[64];
        std::snprintf(file, sizeof(file), "candidate_%02zu.png", i);
        io::write_mask(out / "candidates" / file, cands[i].mask);
        list.push_back({{"rank", i},
                        {"file", std::string("candidates/") + file},
                        {"score", cands[i].score},
                        {"pixels", cands[i].pixels},
                        {"bbox", rect_json(cands[i].bbox)}});
      }
      write_json(out / "candidates.json",
                 Json{{"provider", provider}, {"threshold", spec.threshold},
                      {"comparator", heatmaps::to_string(spec.comparator)}, {"candidates", list}});
    } else if (sub == prep_cmd) {
      const auto view = masks::prep_view(io::read_mask(mask_path));
      Json report{{"displayable", view.has_value()}, {"pixels", view ? view->count() : 0}};
      if (view) {
        const std::string file = name.empty() ? "view.png" : name;
        io::write_mask(out / file, *view);
        report["file"] = file;
        report["display_dilated"] = true;
      } else {
        report["reason"] = "no displayable artifact";
      }
      write_json(out / "prep_view.json", report);
    } else if (sub == render_cmd) {
      const ImageBuffer lr_img = io::read_image(lr_path);
      const ImageBuffer sr_img = io::read_image(sr_path);
      const BinaryMask mask = io::read_mask(mask_path);
      io::check_mask_matches(mask, image_size(sr_img));
      std::optional<Rect> box;
      if (crop && !mask.empty()) box = raster::padded_bbox(mask, crop_pad, image_size(sr_img));
      const auto pair = masks::render_annotation_pair(lr_img, sr_img, mask, box);
      io::write_image(out / "original.png", pair.original);
      io::write_image(out / "upscaled.png", pair.upscaled);
    } else if (sub == aggregate_cmd) {
      const auto all = load_votes(votes_path, cfg);
      const auto scope = stats::qc_scope_from_string(qc_scope);
      const auto valid = stats::filter_assignments(all, scope);
      const auto tallies = stats::tally(stats::collect_votes(valid));
      const auto workers_count = stats::count_workers(all, valid);
      Json rows = Json::array();
      for (const auto& [q, t] : tallies) {
        rows.push_back({{"question", q},
                        {"votes_pos", t.positive},
                        {"votes_total", t.total},
                        {"prominence", t.total ? Json(static_cast<double>(t.positive) / t.total) : Json(nullptr)}});
      }
      write_json(out / "prominence.json",
                 Json{{"qc_scope", stats::to_string(scope)},
                      {"assignments_total", all.size()},
                      {"assignments_valid", valid.size()},
                      {"workers_total", workers_count.total},
                      {"workers_valid", workers_count.valid},
                      {"questions", rows}});
      if (!manifest_path.empty() || cfg.doc.contains("manifest")) {
        auto records = load_manifest(manifest_path, cfg);
        std::size_t matched = 0;
        for (auto& r : records) {
          const auto it = tallies.find(r.mask);
          if (it == tallies.end()) continue;
          r.votes_positive = it->second.positive;
          r.votes_total = it->second.total;
          r.update_prominence();
          ++matched;
        }
        io::write_manifest(out / "manifest.json", records);
        std::map<std::string, std::vector<ArtifactRecord>> by_component;
        for (const auto& r : records) by_component[r.component].push_back(r);
        std::vector<reports::DatasetRow> dataset;
        Json dj = Json::array();
        for (const auto& [c, rs] : by_component) {
          dataset.push_back(reports::dataset_row(c, rs));
          dj.push_back(reports::to_json(dataset.back()));
        }
        write_json(out / "dataset.json", Json{{"matched_records", matched}, {"components", dj}});
        io::write_file_bytes(out / "dataset.md", reports::dataset_markdown(dataset));
      }
    } else if (sub == bootstrap_cmd) {
      const auto valid = stats::qc_filter(load_votes(votes_path, cfg), stats::qc_scope_from_string(qc_scope));
      stats::BootstrapParams params;
      params.assessors = assessors > 0 ? assessors : cfg.value("bootstrap", "assessors", params.assessors);
      params.resamples = resamples > 0 ? resamples : cfg.value("bootstrap", "resamples", params.resamples);
      params.level = level > 0.0 ? level : cfg.value("bootstrap", "level", params.level);
      params.seed = seed;
      std::map<std::string, std::vector<bool>> by_question;
      for (const auto& v : valid) by_question[v.question_id].push_back(v.positive);
      std::vector<std::pair<std::string, std::vector<bool>>> items(by_question.begin(), by_question.end());
      std::vector<stats::ConfidenceInterval> cis(items.size());
      parallel_for(items.size(), workers, [&](std::size_t i) {
        // Each question gets its own stream derived from the run seed and its position.
        stats::BootstrapParams p = params;
        p.seed = params.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(i);
        cis[i] = stats::bootstrap_ci(items[i].second, p);
      });
      Json rows = Json::array();
      std::vector<double> half;
      for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& votes = items[i].second;
        rows.push_back({{"question", items[i].first},
                        {"votes_total", votes.size()},
                        {"prominence", optional_json(stats::prominence(votes))},
                        {"low", cis[i].low},
                        {"high", cis[i].high},
                        {"half_width", cis[i].half_width()}});
        half.push_back(cis[i].half_width());
      }
      write_json(out / "bootstrap.json",
                 Json{{"assessors", params.assessors},
                      {"resamples", params.resamples},
                      {"level", params.level},
                      {"seed", params.seed},
                      {"median_half_width", half.empty() ? Json(nullptr) : Json(scoring::median(half))},
                      {"questions", rows}});
    } else if (sub == score_cmd) {
      const auto registry = registry_from(cfg);
      const auto& spec = registry.at(provider);
      auto records = load_manifest(manifest_path, cfg);
      records.erase(std::remove_if(records.begin(), records.end(),
                                   [&](const ArtifactRecord& r) { return r.component != component; }),
                    records.end());
      if (records.empty()) throw ValidationError("no records for component '" + component + "'");
      if (heatmap_template.empty()) {
        if (!cfg.doc.contains("heatmaps")) throw ValidationError("no heatmap template: pass --heatmaps or set \"heatmaps\"");
        heatmap_template = cfg.path_of("heatmaps")->string();
      }
      const fs::path root = !masks_root.empty()                ? fs::path(masks_root)
                            : cfg.path_of("masks_root")        ? *cfg.path_of("masks_root")
                            : !manifest_path.empty()           ? fs::absolute(manifest_path).parent_path()
                                                               : cfg.path_of("manifest")->parent_path();
      std::vector<BinaryMask> masks(records.size());
      std::vector<Heatmap> maps(records.size());
      parallel_for(records.size(), workers, [&](std::size_t i) {
        const auto& r = records[i];
        masks[i] = io::read_mask(resolve_under(root, r.mask));
        masks[i].set_display_dilated(r.display_dilated);
        const Size size{masks[i].width(), masks[i].height()};
        maps[i] = heatmaps::ingest_block_heatmap(fs::path(expand_heatmap_template(heatmap_template, provider, r)), spec, size);
      });
      std::vector<scoring::ScoredMask> items;
      for (std::size_t i = 0; i < records.size(); ++i) items.push_back({&records[i], &maps[i], &masks[i]});
      const auto scores = scoring::prominence_score(items);
      const auto& s = scores.front();
      Json skipped = Json::array();
      for (const auto& sk : s.skipped) {
        skipped.push_back({{"index", sk.index}, {"mask", records[sk.index].mask}, {"reason", sk.reason}});
      }
      Json j;
      j["component"] = component;
      j["provider"] = provider;
      j["srcc"] = optional_json(s.srcc);
      if (!s.srcc) j["srcc_status"] = "undefined";
      j["used"] = s.used;
      j["skipped"] = skipped;
      j["warning"] = s.warning;
      write_json(out / "score.json", j);
      if (s.warning) std::cerr << "warning: more than 10% of records were skipped\n";
    } else if (sub == tables_cmd) {
      const auto records = load_manifest(manifest_path, cfg);
      const auto detector = scoring::detector_table(records);
      const auto srs = scoring::sr_table(records);
      Json dj = Json::array();
      for (const auto& r : detector) dj.push_back(reports::to_json(r));
      Json sj = Json::array();
      for (const auto& r : srs) sj.push_back(reports::to_json(r));
      write_json(out / "detector_table.json", dj);
      write_json(out / "sr_table.json", sj);
      io::write_file_bytes(out / "detector_table.md", reports::detector_markdown(detector));
      io::write_file_bytes(out / "sr_table.md", reports::sr_markdown(srs));

      std::optional<stats::WorkerCounts> wc;
      if (!votes_path.empty()) {
        const auto all = stats::read_votes(votes_path);
        wc = stats::count_workers(all, stats::filter_assignments(all, stats::qc_scope_from_string(qc_scope)));
      }
      std::map<std::string, std::vector<ArtifactRecord>> by_component;
      for (const auto& r : records) by_component[r.component].push_back(r);
      std::vector<reports::DatasetRow> dataset;
      Json rows = Json::array();
      for (const auto& [c, rs] : by_component) {
        dataset.push_back(reports::dataset_row(c, rs));
        rows.push_back(reports::to_json(dataset.back()));
      }
      Json all_row;
      if (by_component.size() > 1 || wc) {
        dataset.push_back(reports::dataset_row("All", records, wc));
        all_row = reports::to_json(dataset.back());
      }
      write_json(out / "dataset.json", Json{{"components", rows}, {"all", all_row}});
      io::write_file_bytes(out / "dataset.md", reports::dataset_markdown(dataset));

      if (!srcc_path.empty()) {
        std::map<std::string, double> srcc;
        std::map<std::string, double> pxc;
        try {
          srcc = Json::parse(io::read_file_bytes(srcc_path)).get<std::map<std::string, double>>();
        } catch (const nlohmann::json::exception& e) {
          throw ValidationError("--srcc must be a JSON object of numbers: " + std::string(e.what()));
        }
        for (const auto& r : detector) pxc[r.key] = r.prom_x_conf;
        std::size_t shared = 0;
        for (const auto& [key, v] : srcc) shared += pxc.count(key);
        write_json(out / "agreement.json",
                   Json{{"shared_metrics", shared}, {"spearman", optional_json(scoring::rank_agreement(pxc, srcc))}});
      }
    } else if (sub == calibrate_cmd) {
      const auto registry = registry_from(cfg);
      const auto& spec = registry.at(provider);
      Json set;
      try {
        set = Json::parse(io::read_file_bytes(set_path));
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("calibration set: " + std::string(e.what()));
      }
      if (!set.is_array()) throw ValidationError("calibration set must be a JSON array");
      const fs::path root = fs::absolute(set_path).parent_path();
      std::vector<Heatmap> maps(set.size());
      std::vector<std::vector<BinaryMask>> gts(set.size());
      parallel_for(set.size(), workers, [&](std::size_t i) {
        const auto& e = set[i];
        if (!e.is_object() || !e.contains("heatmap") || !e.contains("masks"))
          throw ValidationError("calibration set entry " + std::to_string(i) + " needs heatmap and masks");
        for (const auto& m : e["masks"]) gts[i].push_back(io::read_mask(resolve_under(root, m.get<std::string>())));
        const auto content = io::read_srph(resolve_under(root, e["heatmap"].get<std::string>()));
        Size size = gts[i].empty() ? Size{content.field.width(), content.field.height()}
                                   : Size{gts[i].front().width(), gts[i].front().height()};
        maps[i] = heatmaps::ingest_block_heatmap(content, spec, size);
      });
      std::vector<scoring::CalibrationImage> images;
      for (std::size_t i = 0; i < maps.size(); ++i) {
        scoring::CalibrationImage img{&maps[i], {}};
        for (const auto& m : gts[i]) img.gt_masks.push_back(&m);
        images.push_back(img);
      }
      scoring::CalibrationParams params;
      params.max_grid = cfg.value("calibration", "max_grid", params.max_grid);
      params.recall_overlap = cfg.value("calibration", "recall_overlap", params.recall_overlap);
      auto j = reports::to_json(scoring::calibrate_threshold(spec, images, params));
      j["provider"] = provider;
      j["comparator"] = heatmaps::to_string(spec.comparator);
      write_json(out / "calibration.json", j);
    } else if (sub == train_cmd) {
      Json list;
      try {
        list = Json::parse(io::read_file_bytes(examples_path));
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("training examples: " + std::string(e.what()));
      }
      if (!list.is_array()) throw ValidationError("training examples must be a JSON array");
      const auto registry = registry_from(cfg);
      const fs::path root = fs::absolute(examples_path).parent_path();
      std::vector<fusion::TrainingExample> examples(list.size());
      parallel_for(list.size(), workers, [&](std::size_t i) {
        const auto& e = list[i];
        try {
          BinaryMask mask = io::read_mask(resolve_under(root, e.at("mask").get<std::string>()));
          const Size size{mask.width(), mask.height()};
          auto feature = [&](const char* key, const std::string& prov) {
            Heatmap h = heatmaps::ingest_block_heatmap(resolve_under(root, e.at(key).get<std::string>()),
                                                       registry.at(prov), size);
            h.set_provider(prov);
            return h;
          };
          examples[i].features = fusion::stack_features(feature("dists", "dists"), feature("ssm_jup", "ssm_jup"),
                                                        feature("bd_jup", "bd_jup"));
          examples[i].mask = std::move(mask);
          examples[i].prominence = e.at("prominence").get<double>();
        } catch (const nlohmann::json::exception& ex) {
          throw ValidationError("training example " + std::to_string(i) + ": " + ex.what());
        }
      });
      fusion::TrainOptions opts;
      opts.seed = seed;
      opts.epochs = epochs ? *epochs : cfg.value("fusion", "epochs", opts.epochs);
      opts.learning_rate = lr ? *lr : cfg.value("fusion", "learning_rate", opts.learning_rate);
      opts.hidden = !hidden.empty() ? parse_int_list(hidden) : cfg.value("fusion", "hidden", opts.hidden);
      opts.pixel_sample = pixel_sample ? *pixel_sample : cfg.value("fusion", "pixel_sample", opts.pixel_sample);
      const auto result = fusion::train(examples, opts);
      fusion::write_model(out / "model.srpm", result.model);
      write_json(out / "training_log.json",
                 Json{{"epochs", opts.epochs},
                      {"learning_rate", opts.learning_rate},
                      {"hidden", opts.hidden},
                      {"pixel_sample", opts.pixel_sample},
                      {"epoch_loss", result.log.epoch_loss},
                      {"skipped_examples", result.log.skipped_examples}});
    } else if (sub == predict_cmd) {
      const auto model = fusion::read_model(model_path);
      Heatmap d = io::read_heatmap(dists_path);
      Heatmap s = io::read_heatmap(ssm_path);
      Heatmap b = io::read_heatmap(bd_path);
      d.set_provider("dists");
      s.set_provider("ssm_jup");
      b.set_provider("bd_jup");
      const auto h = fusion::forward(model, fusion::stack_features(d, s, b));
      io::write_heatmap(out / "baseline.srph", h);
      io::write_mask(out / "baseline_mask.png", masks::threshold_heatmap(h, display_threshold, heatmaps::Comparator::Above));
    } else if (sub == compare_cmd) {
      auto load_scores = [](const std::string& path) {
        std::map<std::string, std::optional<double>> m;
        Json j;
        try {
          j = Json::parse(io::read_file_bytes(path));
        } catch (const nlohmann::json::exception& e) {
          throw ValidationError(path + ": " + e.what());
        }
        if (!j.is_object()) throw ValidationError(path + ": expected a JSON object {provider: srcc}");
        for (const auto& [k2, v] : j.items()) {
          if (v.is_null())
            m[k2] = std::nullopt;
          else if (v.is_number())
            m[k2] = v.get<double>();
          else
            throw ValidationError(path + ": score of '" + k2 + "' must be a number or null");
        }
        return m;
      };
      const auto rows = reference::compare_reference_runs(load_scores(hr_path), load_scores(pseudo_path));
      Json j = Json::array();
      std::ostringstream md;
      md << "| Provider | Original-HR | Pseudo-GT | Delta | Rank HR | Rank pseudo | Rank change |\n";
      md << "|---|---:|---:|---:|---:|---:|---:|\n";
      auto cell = [](const std::optional<double>& v) { return v ? reports::fixed(*v, 3) : std::string("-"); };
      for (const auto& r : rows) {
        j.push_back({{"provider", r.provider},
                     {"srcc_hr", optional_json(r.srcc_hr)},
                     {"srcc_pseudo", optional_json(r.srcc_pseudo)},
                     {"delta", optional_json(r.delta)},
                     {"rank_hr", r.rank_hr},
                     {"rank_pseudo", r.rank_pseudo},
                     {"rank_change", r.rank_change}});
        md << "| " << r.provider << " | " << cell(r.srcc_hr) << " | " << cell(r.srcc_pseudo) << " | " << cell(r.delta)
           << " | " << reports::fixed(r.rank_hr, 1) << " | " << reports::fixed(r.rank_pseudo, 1) << " | "
           << reports::fixed(r.rank_change, 1) << " |\n";
      }
      write_json(out / "comparison.json", j);
      io::write_file_bytes(out / "comparison.md", md.str());
    }

    write_run_manifest(out, command, cfg, seed);
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace srprom::cli
