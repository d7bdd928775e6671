// Command-line front end for the mound counting pipeline.
//
// Subcommands mirror the pipeline stages and communicate exclusively through
// files, so any stage can be swapped for externally produced data (e.g. CNN
// detections dropped into a detections directory):
//
//   tile          patch grid for one block -> grid.csv
//   augment       randomized box augmentation for a label directory
//   simulate      synthetic fleet with ground truth -> blocks/ + manifest.csv
//   detect        run a detector backend over a manifest -> detection files
//   features      per-block feature vectors from a manifest -> features.csv
//   train-global  fit the global count-correction model -> model.txt
//   count         count one block: detect, aggregate, correct -> report.json
//   evaluate      kfold | loocv | table-check protocols
//
// Every command writes into --out: its results, config.json (the effective
// configuration), and run.log (the only file carrying timestamps). Given
// identical inputs and --seed, all other outputs are byte-identical across
// runs. Exit codes: 0 success, 1 validation error, 2 data error.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mound/augment.hpp"
#include "mound/backend.hpp"
#include "mound/crossval.hpp"
#include "mound/errors.hpp"
#include "mound/features.hpp"
#include "mound/goldentables.hpp"
#include "mound/labels.hpp"
#include "mound/metrics.hpp"
#include "mound/raster.hpp"
#include "mound/ridge.hpp"
#include "mound/rng.hpp"
#include "mound/simulate.hpp"
#include "mound/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mound;

namespace {

// --- small utilities ---------------------------------------------------------

// Shortest round-trip decimal form; matches the library's file formats.
std::string fmt_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string pct(double fraction) { return fmt_fixed(fraction * 100.0, 1) + "%"; }

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw DataError("failed while writing " + path.string());
}

// --- effective configuration echo ---------------------------------------------

// Everything that shaped one command invocation, echoed to <out>/config.json
// so a run documents how it was produced and can be repeated.
struct PipelineConfig {
  std::string command;
  std::int64_t patch_size_px = 416;
  std::string edge_policy = "partial";
  double confidence_threshold = 0.25;
  double lambda = 10.0;
  bool intercept = false;
  bool standardize = false;
  double iou_threshold = 0.5;
  std::uint64_t seed = 0;
  std::optional<AugmentationConfig> augmentation;
  std::map<std::string, std::string> paths; // inputs/outputs by role
  json extras = json::object();             // command-specific knobs
};

void echo_config(const PipelineConfig& cfg, const fs::path& out_dir) {
  json j{{"command", cfg.command},
         {"patch_size_px", cfg.patch_size_px},
         {"edge_policy", cfg.edge_policy},
         {"confidence_threshold", cfg.confidence_threshold},
         {"lambda", cfg.lambda},
         {"intercept", cfg.intercept},
         {"standardize", cfg.standardize},
         {"iou_threshold", cfg.iou_threshold},
         {"seed", cfg.seed},
         {"paths", cfg.paths}};
  if (cfg.augmentation) {
    const auto& a = *cfg.augmentation;
    j["augmentation"] = {{"z_min", a.z_min},
                         {"z_max", a.z_max},
                         {"l_min", a.l_min},
                         {"l_max", a.l_max},
                         {"alpha_min", a.alpha_min},
                         {"alpha_max", a.alpha_max},
                         {"boxes_per_source", a.boxes_per_source},
                         {"seed", a.seed}};
  }
  j.update(cfg.extras);
  write_text(out_dir / "config.json", j.dump(1) + "\n");
}

// The one output that may carry wall-clock state.
void write_run_log(const fs::path& out_dir, const std::string& command) {
  const std::time_t now = std::time(nullptr);
  char stamp[32] = "unknown";
  if (std::tm tm{}; gmtime_r(&now, &tm) != nullptr)
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
  std::ofstream log(out_dir / "run.log", std::ios::app);
  log << stamp << " " << command << " completed\n";
}

// --- manifest ------------------------------------------------------------------

// One block per row. Path cells are resolved relative to the manifest's own
// directory, so a manifest travels with its data tree. gt_count is optional
// (absent for blocks that only need counting, required for training).
struct ManifestRow {
  std::string block_id;
  std::string sidecar;        // required
  std::string labels_dir;     // fine-tuning labels; may be empty
  std::string detections_dir; // may be empty until `detect` ran
  std::optional<double> gt_count;
};

constexpr std::string_view kManifestHeader =
    "block_id,sidecar,labels_dir,detections_dir,gt_count";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("manifest " + path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader)
    throw DataError("manifest " + path.string() + ": expected header '" +
                    std::string(kManifestHeader) + "'");
  std::vector<ManifestRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 5)
      throw ParseError("manifest row needs 5 cells, got " + std::to_string(cells.size()),
                       line_no);
    ManifestRow row{cells[0], cells[1], cells[2], cells[3], std::nullopt};
    if (row.block_id.empty()) throw ParseError("manifest row has an empty block_id", line_no);
    if (row.sidecar.empty())
      throw ParseError("block '" + row.block_id + "': manifest row has no sidecar", line_no);
    if (!cells[4].empty()) {
      double gt = 0.0;
      const char* first = cells[4].data();
      const char* last = first + cells[4].size();
      auto [p, ec] = std::from_chars(first, last, gt);
      if (ec != std::errc() || p != last)
        throw ParseError("block '" + row.block_id + "': bad gt_count '" + cells[4] + "'",
                         line_no);
      row.gt_count = gt;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("manifest " + path.string() + " lists no blocks");
  return rows;
}

void write_manifest(const std::vector<ManifestRow>& rows, const fs::path& path) {
  std::string text(kManifestHeader);
  text += '\n';
  for (const auto& r : rows) {
    text += r.block_id;
    text += ',';
    text += r.sidecar;
    text += ',';
    text += r.labels_dir;
    text += ',';
    text += r.detections_dir;
    text += ',';
    if (r.gt_count) text += fmt_double(*r.gt_count);
    text += '\n';
  }
  write_text(path, text);
}

fs::path resolve_cell(const fs::path& manifest_path, const std::string& cell) {
  const fs::path p(cell);
  return p.is_absolute() ? p : manifest_path.parent_path() / p;
}

// Path cell for a manifest living in base_dir, preferring a relative form.
std::string relative_cell(const fs::path& target, const fs::path& base_dir) {
  std::error_code ec;
  const auto rel = fs::relative(target, base_dir, ec);
  if (ec || rel.empty())
    return fs::absolute(target).lexically_normal().generic_string();
  return rel.generic_string();
}

// --- shared stage plumbing -------------------------------------------------------

struct StageOptions {
  std::int64_t patch_size = 416;
  std::string edge_policy = "partial";
  double conf_threshold = 0.25;
  bool strict = false;
};

EdgePolicy policy_of(const StageOptions& o) { return parse_edge_policy(o.edge_policy); }

void add_grid_options(CLI::App* cmd, StageOptions& o) {
  cmd->add_option("--patch-size", o.patch_size, "Patch size, px")->capture_default_str();
  cmd->add_option("--edge-policy", o.edge_policy, "Edge policy: pad | partial | drop")
      ->capture_default_str();
}

void add_detection_options(CLI::App* cmd, StageOptions& o) {
  cmd->add_option("--conf-threshold", o.conf_threshold, "Detection confidence threshold")
      ->capture_default_str();
  cmd->add_flag("--strict", o.strict, "Treat missing detection files as errors");
}

void add_ridge_options(CLI::App* cmd, RidgeOptions& o) {
  cmd->add_option("--lambda", o.lambda, "Ridge penalty")->capture_default_str();
  cmd->add_flag("--intercept", o.intercept, "Fit an unpenalized intercept");
  cmd->add_flag("--standardize", o.standardize, "Z-score features before fitting");
}

OrthomosaicMeta load_block_meta(const fs::path& manifest_path, const ManifestRow& row) {
  const auto meta = load_sidecar(resolve_cell(manifest_path, row.sidecar));
  if (meta.id != row.block_id)
    throw DataError("block '" + row.block_id + "': sidecar id '" + meta.id +
                    "' does not match the manifest");
  return meta;
}

// detect -> aggregate -> extract_features for one manifest block.
BlockFeatureVector manifest_block_features(const fs::path& manifest_path,
                                           const ManifestRow& row,
                                           const StageOptions& opts) {
  const auto meta = load_block_meta(manifest_path, row);
  const auto grid = build_grid(meta, opts.patch_size, policy_of(opts));
  if (row.detections_dir.empty())
    throw DataError("block '" + row.block_id +
                    "': manifest row has no detections_dir (run `detect` first)");
  const FileBackend backend({resolve_cell(manifest_path, row.detections_dir),
                             opts.conf_threshold, opts.strict});
  const auto counts = count_by_detection(detect_block(backend, grid, meta.id));
  AnnotationSet ft;
  ft.block_id = meta.id;
  if (!row.labels_dir.empty())
    ft = load_annotation_dir(resolve_cell(manifest_path, row.labels_dir), meta.id, grid);
  auto features = extract_features(meta, grid, counts, ft);
  features.gt_count = row.gt_count;
  return features;
}

std::vector<BlockFeatureVector> manifest_features(const fs::path& manifest_path,
                                                  const std::vector<ManifestRow>& rows,
                                                  const StageOptions& opts) {
  std::vector<BlockFeatureVector> out;
  out.reserve(rows.size());
  for (const auto& row : rows)
    out.push_back(manifest_block_features(manifest_path, row, opts));
  return out;
}

struct OracleArgs {
  double miss_rate = 0.0;
  double fp_rate = 0.0;
  double jitter = 0.0;
  std::string confidence = "constant";
};

void add_oracle_options(CLI::App* cmd, OracleArgs& o) {
  cmd->add_option("--miss-rate", o.miss_rate, "Oracle: drop probability per truth box")
      ->capture_default_str();
  cmd->add_option("--fp-rate", o.fp_rate, "Oracle: expected false positives per patch")
      ->capture_default_str();
  cmd->add_option("--jitter", o.jitter, "Oracle: center jitter sigma, px")
      ->capture_default_str();
  cmd->add_option("--confidence", o.confidence, "Oracle confidences: constant | noisy")
      ->capture_default_str();
}

OracleBackendConfig oracle_config(const OracleArgs& args, std::uint64_t seed,
                                  std::string_view block_id) {
  OracleBackendConfig cfg;
  cfg.miss_rate = args.miss_rate;
  cfg.fp_rate_per_patch = args.fp_rate;
  cfg.center_jitter_px = args.jitter;
  if (args.confidence == "constant") {
    cfg.confidence_model = ConfidenceModel::constant;
  } else if (args.confidence == "noisy") {
    cfg.confidence_model = ConfidenceModel::noisy;
  } else {
    throw ValidationError("unknown confidence model '" + args.confidence +
                          "' (use constant or noisy)");
  }
  // One substream per block, independent of manifest order.
  cfg.seed = derive_seed(seed, fnv1a64(block_id));
  return cfg;
}

json oracle_extras(const OracleArgs& o) {
  return {{"miss_rate", o.miss_rate},
          {"fp_rate_per_patch", o.fp_rate},
          {"center_jitter_px", o.jitter},
          {"confidence", o.confidence}};
}

// One file per patch, empty files included, so strict consumers see full
// coverage and absence of a detection is distinguishable from absent data.
void write_detection_files(const PatchGrid& grid, const BlockDetections& dets,
                           const fs::path& dir) {
  ensure_dir(dir);
  static const std::vector<DetectionRecord> kNone;
  for (const auto& patch : all_patches(grid)) {
    const auto it = dets.patches.find(PatchKey{patch.row, patch.col});
    const auto& records = it == dets.patches.end() ? kNone : it->second;
    write_text(dir / label_filename(dets.block_id, patch.row, patch.col),
               format_detections(records, patch));
  }
}

// --- tile ------------------------------------------------------------------------

struct TileArgs {
  std::string sidecar;
  std::int64_t width = 0;
  std::int64_t height = 0;
  double gsd = 3.0;
  std::string id = "block";
  StageOptions stage;
  std::uint64_t seed = 0;
  std::string out;
};

int run_tile(const TileArgs& a) {
  OrthomosaicMeta meta;
  if (!a.sidecar.empty()) {
    meta = load_sidecar(a.sidecar);
  } else {
    if (a.width <= 0 || a.height <= 0)
      throw ValidationError("tile needs --sidecar, or --width and --height");
    meta.id = a.id;
    meta.width_px = a.width;
    meta.height_px = a.height;
    // Area from the ground sampling distance; tiling itself only needs dims.
    const double m_per_px = a.gsd / 100.0;
    meta.area_ha = static_cast<double>(a.width) * static_cast<double>(a.height) *
                   m_per_px * m_per_px / 10000.0;
    meta.gsd_cm_per_px = a.gsd;
  }
  const auto grid = build_grid(meta, a.stage.patch_size, policy_of(a.stage));
  const fs::path out(a.out);
  ensure_dir(out);
  std::string csv = "row,col,x,y,width,height\n";
  for (const auto& p : all_patches(grid)) {
    csv += std::to_string(p.row) + ',' + std::to_string(p.col) + ',' +
           std::to_string(p.origin_x) + ',' + std::to_string(p.origin_y) + ',' +
           std::to_string(p.w) + ',' + std::to_string(p.h) + '\n';
  }
  write_text(out / "grid.csv", csv);

  PipelineConfig cfg;
  cfg.command = "tile";
  cfg.patch_size_px = a.stage.patch_size;
  cfg.edge_policy = a.stage.edge_policy;
  cfg.seed = a.seed;
  if (!a.sidecar.empty()) cfg.paths["sidecar"] = a.sidecar;
  cfg.paths["out"] = a.out;
  cfg.extras = {{"block", meta.id},
                {"width_px", meta.width_px},
                {"height_px", meta.height_px}};
  echo_config(cfg, out);
  write_run_log(out, "tile");

  std::cout << "block " << meta.id << ": " << grid.rows << "x" << grid.cols << " grid, "
            << grid.patch_count() << " patches (" << to_string(grid.edge_policy)
            << " edges)\n";
  return 0;
}

// --- augment ------------------------------------------------------------------------

struct AugmentArgs {
  std::string sidecar;
  std::string labels;
  std::string out;
  StageOptions stage;
  AugmentationConfig aug;
  std::uint64_t seed = 0;
};

int run_augment(const AugmentArgs& a) {
  const auto meta = load_sidecar(a.sidecar);
  const auto grid = build_grid(meta, a.stage.patch_size, policy_of(a.stage));
  const auto sources = load_annotation_dir(a.labels, meta.id, grid);
  AugmentationConfig cfg = a.aug;
  cfg.seed = a.seed;
  validate(cfg);

  AnnotationSet augmented;
  augmented.block_id = meta.id;
  std::int64_t kept = 0;
  std::int64_t discarded = 0;
  for (const auto& [key, boxes] : sources.patches) {
    auto result = augment_patch(boxes, cfg, patch_at(grid, key.row, key.col));
    kept += static_cast<std::int64_t>(result.boxes.size());
    discarded += result.discarded;
    augmented.patches[key] = std::move(result.boxes);
  }
  const fs::path out(a.out);
  ensure_dir(out);
  save_annotation_dir(augmented, grid, out / "labels");

  PipelineConfig echo;
  echo.command = "augment";
  echo.patch_size_px = a.stage.patch_size;
  echo.edge_policy = a.stage.edge_policy;
  echo.seed = a.seed;
  echo.augmentation = cfg;
  echo.paths = {{"sidecar", a.sidecar}, {"labels", a.labels}, {"out", a.out}};
  echo_config(echo, out);
  write_run_log(out, "augment");

  std::cout << "augmented " << sources.total_count() << " source boxes in "
            << sources.patches.size() << " patches: kept " << kept << ", discarded "
            << discarded << "\n";
  return 0;
}

// --- simulate ------------------------------------------------------------------------

struct SimulateArgs {
  FleetSpec fleet;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  if (a.fleet.n_blocks < 1) throw ValidationError("simulate needs --n >= 1");
  const auto blocks = generate_fleet(a.fleet);
  const fs::path out(a.out);
  ensure_dir(out);

  std::vector<ManifestRow> manifest;
  manifest.reserve(blocks.size());
  for (const auto& block : blocks) {
    const fs::path block_dir = out / "blocks" / block.meta.id;
    ensure_dir(block_dir);
    save_sidecar(block.meta, block_dir / (block.meta.id + ".json"));
    save_annotation_dir(block.visible, block.grid, block_dir / "truth");
    save_annotation_dir(block.ft_sample, block.grid, block_dir / "ft");
    const std::string rel = "blocks/" + block.meta.id;
    manifest.push_back({block.meta.id, rel + "/" + block.meta.id + ".json", rel + "/ft",
                        "", static_cast<double>(block.gt_count)});
    std::cout << block.meta.id << ": " << fmt_fixed(block.meta.area_ha, 2) << " ha, grid "
              << block.grid.rows << "x" << block.grid.cols << ", gt " << block.gt_count
              << " (" << block.invisible_count << " invisible), ft patches "
              << block.ft_sample.patches.size() << "\n";
  }
  write_manifest(manifest, out / "manifest.csv");

  PipelineConfig cfg;
  cfg.command = "simulate";
  cfg.patch_size_px = a.fleet.patch_size_px;
  cfg.seed = a.fleet.seed;
  cfg.paths["out"] = a.out;
  cfg.extras = {{"n_blocks", a.fleet.n_blocks},
                {"area_min_ha", a.fleet.area_min_ha},
                {"area_max_ha", a.fleet.area_max_ha},
                {"density_min_per_ha", a.fleet.density_min_per_ha},
                {"density_max_per_ha", a.fleet.density_max_per_ha},
                {"invisible_min", a.fleet.invisible_min},
                {"invisible_max", a.fleet.invisible_max},
                {"gradient_limit", a.fleet.gradient_limit},
                {"mound_size_mean_px", a.fleet.mound_size_mean_px},
                {"mound_size_std_px", a.fleet.mound_size_std_px},
                {"border_margin_px", a.fleet.border_margin_px},
                {"gsd_cm_per_px", a.fleet.gsd_cm_per_px},
                {"ft_patch_count", a.fleet.ft_patch_count},
                {"pin_reference_areas", a.fleet.pin_reference_areas}};
  echo_config(cfg, out);
  write_run_log(out, "simulate");
  return 0;
}

// --- detect ------------------------------------------------------------------------

struct DetectArgs {
  std::string manifest;
  std::string out;
  std::string backend = "oracle";
  std::string truth_subdir = "truth";
  OracleArgs oracle;
  StageOptions stage;
  std::uint64_t seed = 0;
};

int run_detect(const DetectArgs& a) {
  const fs::path manifest_path(a.manifest);
  const auto rows = read_manifest(manifest_path);
  const fs::path out(a.out);
  ensure_dir(out);

  std::vector<ManifestRow> updated;
  updated.reserve(rows.size());
  for (const auto& row : rows) {
    const auto sidecar = resolve_cell(manifest_path, row.sidecar);
    const auto meta = load_block_meta(manifest_path, row);
    const auto grid = build_grid(meta, a.stage.patch_size, policy_of(a.stage));

    std::unique_ptr<DetectorBackend> backend;
    if (a.backend == "oracle") {
      // Truth labels live next to each block's sidecar (simulate's layout).
      auto truth = load_annotation_dir(sidecar.parent_path() / a.truth_subdir, meta.id, grid);
      backend = std::make_unique<OracleBackend>(oracle_config(a.oracle, a.seed, meta.id),
                                                std::move(truth));
    } else if (a.backend == "file") {
      if (row.detections_dir.empty())
        throw DataError("block '" + row.block_id +
                        "': the file backend needs detections_dir in the manifest");
      backend = std::make_unique<FileBackend>(
          FileBackendConfig{resolve_cell(manifest_path, row.detections_dir),
                            a.stage.conf_threshold, a.stage.strict});
    } else {
      throw ValidationError("unknown backend '" + a.backend + "' (use oracle or file)");
    }

    const auto dets = detect_block(*backend, grid, meta.id);
    write_detection_files(grid, dets, out / "detections" / meta.id);
    const auto total = count_by_detection(dets).total;

    ManifestRow copy = row;
    copy.sidecar = relative_cell(sidecar, out);
    if (!row.labels_dir.empty())
      copy.labels_dir = relative_cell(resolve_cell(manifest_path, row.labels_dir), out);
    copy.detections_dir = "detections/" + meta.id;
    updated.push_back(std::move(copy));

    std::cout << meta.id << ": " << total << " detections over " << grid.patch_count()
              << " patches";
    if (dets.missing_files > 0) std::cout << " (" << dets.missing_files << " missing files)";
    std::cout << "\n";
  }
  write_manifest(updated, out / "manifest.csv");

  PipelineConfig cfg;
  cfg.command = "detect";
  cfg.patch_size_px = a.stage.patch_size;
  cfg.edge_policy = a.stage.edge_policy;
  cfg.confidence_threshold = a.stage.conf_threshold;
  cfg.seed = a.seed;
  cfg.paths = {{"manifest", a.manifest}, {"out", a.out}};
  cfg.extras = {{"backend", a.backend},
                {"truth_subdir", a.truth_subdir},
                {"strict", a.stage.strict},
                {"oracle", oracle_extras(a.oracle)}};
  echo_config(cfg, out);
  write_run_log(out, "detect");
  return 0;
}

// --- features ------------------------------------------------------------------------

struct FeaturesArgs {
  std::string manifest;
  std::string out;
  StageOptions stage;
  std::uint64_t seed = 0;
};

int run_features(const FeaturesArgs& a) {
  const fs::path manifest_path(a.manifest);
  const auto rows = read_manifest(manifest_path);
  const auto features = manifest_features(manifest_path, rows, a.stage);
  const fs::path out(a.out);
  ensure_dir(out);
  write_features_csv(features, out / "features.csv");

  for (const auto& f : features) {
    std::cout << f.block_id << ": det_count " << fmt_double(f.det_count) << ", det_density "
              << fmt_fixed(f.det_density, 3) << ", ft_density "
              << (f.ft_density ? fmt_fixed(*f.ft_density, 3) : std::string("-")) << ", area "
              << fmt_fixed(f.area_ha, 2) << " ha"
              << (f.gt_count ? ", gt " + fmt_double(*f.gt_count) : std::string()) << "\n";
  }

  PipelineConfig cfg;
  cfg.command = "features";
  cfg.patch_size_px = a.stage.patch_size;
  cfg.edge_policy = a.stage.edge_policy;
  cfg.confidence_threshold = a.stage.conf_threshold;
  cfg.seed = a.seed;
  cfg.paths = {{"manifest", a.manifest}, {"out", a.out}};
  cfg.extras = {{"strict", a.stage.strict}};
  echo_config(cfg, out);
  write_run_log(out, "features");
  return 0;
}

// --- train-global ----------------------------------------------------------------------

struct TrainArgs {
  std::string features;
  std::string out;
  RidgeOptions ridge;
  std::uint64_t seed = 0;
};

int run_train_global(const TrainArgs& a) {
  const auto rows = read_features_csv(a.features);
  std::vector<std::vector<double>> X;
  std::vector<double> y;
  for (const auto& row : rows) {
    if (!row.gt_count) continue; // prediction-only rows don't train
    if (!row.ft_density)
      throw ValidationError("block '" + row.block_id + "': ft_density is required for training");
    const auto values = row.values();
    X.emplace_back(values.begin(), values.end());
    y.push_back(*row.gt_count);
  }
  if (X.empty()) throw ValidationError("no rows with gt_count in " + a.features);
  const auto model = fit_ridge(X, y, a.ridge);
  const fs::path out(a.out);
  ensure_dir(out);
  save_model(model, out / "model.txt");

  std::cout << "trained on " << X.size() << " blocks\nweights:";
  for (const auto w : model.weights) std::cout << ' ' << fmt_double(w);
  std::cout << "\n";
  if (model.has_intercept) std::cout << "intercept: " << fmt_double(model.intercept) << "\n";

  PipelineConfig cfg;
  cfg.command = "train-global";
  cfg.lambda = a.ridge.lambda;
  cfg.intercept = a.ridge.intercept;
  cfg.standardize = a.ridge.standardize;
  cfg.seed = a.seed;
  cfg.paths = {{"features", a.features}, {"out", a.out}};
  echo_config(cfg, out);
  write_run_log(out, "train-global");
  return 0;
}

// --- count ------------------------------------------------------------------------

struct CountArgs {
  std::string sidecar;
  std::string model;
  std::string out;
  std::string detections;
  std::string ft_labels;
  std::string backend = "file";
  std::string truth;
  OracleArgs oracle;
  StageOptions stage;
  std::uint64_t seed = 0;
  double gt = 0.0;
  bool has_gt = false;
};

int run_count(const CountArgs& a) {
  const auto meta = load_sidecar(a.sidecar);
  const auto model = load_model(a.model);
  const auto grid = build_grid(meta, a.stage.patch_size, policy_of(a.stage));

  std::unique_ptr<DetectorBackend> backend;
  if (a.backend == "file") {
    if (a.detections.empty()) throw ValidationError("count --backend file needs --detections");
    backend = std::make_unique<FileBackend>(
        FileBackendConfig{a.detections, a.stage.conf_threshold, a.stage.strict});
  } else if (a.backend == "oracle") {
    if (a.truth.empty()) throw ValidationError("count --backend oracle needs --truth");
    backend = std::make_unique<OracleBackend>(oracle_config(a.oracle, a.seed, meta.id),
                                              load_annotation_dir(a.truth, meta.id, grid));
  } else {
    throw ValidationError("unknown backend '" + a.backend + "' (use oracle or file)");
  }

  const auto counts = count_by_detection(detect_block(*backend, grid, meta.id));
  AnnotationSet ft;
  ft.block_id = meta.id;
  if (!a.ft_labels.empty()) ft = load_annotation_dir(a.ft_labels, meta.id, grid);
  const auto features = extract_features(meta, grid, counts, ft);
  const auto prediction = predict_count(model, features);

  json report{{"block_id", meta.id},
              {"det_count", counts.total},
              {"raw", prediction.raw},
              {"corrected", prediction.count}};
  std::cout << "block " << meta.id << "\n"
            << "detection count: " << counts.total << "\n"
            << "corrected count: " << prediction.count << "\n";
  if (a.has_gt) {
    const double rp = relative_precision(static_cast<double>(prediction.count), a.gt);
    report["gt"] = a.gt;
    report["rp"] = rp;
    std::cout << "RP: " << pct(rp) << "\n";
  }
  const fs::path out(a.out);
  ensure_dir(out);
  write_text(out / "report.json", report.dump(1) + "\n");

  PipelineConfig cfg;
  cfg.command = "count";
  cfg.patch_size_px = a.stage.patch_size;
  cfg.edge_policy = a.stage.edge_policy;
  cfg.confidence_threshold = a.stage.conf_threshold;
  cfg.seed = a.seed;
  cfg.paths = {{"sidecar", a.sidecar}, {"model", a.model}, {"out", a.out}};
  if (!a.detections.empty()) cfg.paths["detections"] = a.detections;
  if (!a.ft_labels.empty()) cfg.paths["ft_labels"] = a.ft_labels;
  if (!a.truth.empty()) cfg.paths["truth"] = a.truth;
  cfg.extras = {{"backend", a.backend}, {"strict", a.stage.strict}};
  if (a.backend == "oracle") cfg.extras["oracle"] = oracle_extras(a.oracle);
  if (a.has_gt) cfg.extras["gt"] = a.gt;
  echo_config(cfg, out);
  write_run_log(out, "count");
  return 0;
}

// --- evaluate ------------------------------------------------------------------------

struct EvaluateArgs {
  std::string protocol;
  std::string manifest;
  std::string out;
  std::string golden;
  std::vector<std::string> tables;
  StageOptions stage;
  RidgeOptions ridge;
  double iou = 0.5;
  std::uint64_t seed = 0;
};

int run_loocv_protocol(const EvaluateArgs& a, const fs::path& out) {
  if (a.manifest.empty()) throw ValidationError("evaluate --protocol loocv needs --manifest");
  const fs::path manifest_path(a.manifest);
  const auto rows = read_manifest(manifest_path);
  const auto features = manifest_features(manifest_path, rows, a.stage);
  const auto report = evaluate_loocv(features, a.ridge);

  std::string csv = "block_id,gt,det_count,det_rp,corr_count,corr_rp\n";
  for (const auto& r : report.rows)
    csv += r.block_id + ',' + fmt_double(r.gt) + ',' + fmt_double(r.det_count) + ',' +
           fmt_double(r.det_rp) + ',' + std::to_string(r.corr_count) + ',' +
           fmt_double(r.corr_rp) + '\n';
  write_text(out / "loocv.csv", csv);

  json j{{"protocol", "loocv"},
         {"mean_det_rp", report.mean_det_rp},
         {"mean_corr_rp", report.mean_corr_rp},
         {"overall_det_rp", report.overall_det_rp},
         {"overall_corr_rp", report.overall_corr_rp}};
  json blocks = json::array();
  for (const auto& r : report.rows)
    blocks.push_back({{"block_id", r.block_id},
                      {"gt", r.gt},
                      {"det_count", r.det_count},
                      {"det_rp", r.det_rp},
                      {"corr_count", r.corr_count},
                      {"corr_rp", r.corr_rp}});
  j["blocks"] = blocks;
  if (report.det_vs_corr) {
    const auto& t = *report.det_vs_corr;
    j["t_test"] = {{"t", t.t},
                   {"df", t.df},
                   {"p_one_sided", t.p_one_sided},
                   {"p_two_sided", t.p_two_sided},
                   {"mean_diff", t.mean_diff}};
  }
  write_text(out / "report.json", j.dump(1) + "\n");

  std::cout << "LOOCV over " << report.rows.size() << " blocks\n"
            << "mean RP detection-only: " << pct(report.mean_det_rp) << "\n"
            << "mean RP corrected:      " << pct(report.mean_corr_rp) << "\n"
            << "overall RP detection-only: " << pct(report.overall_det_rp) << "\n"
            << "overall RP corrected:      " << pct(report.overall_corr_rp) << "\n";
  if (report.det_vs_corr) {
    const auto& t = *report.det_vs_corr;
    std::cout << "paired t-test (detection vs corrected RP): t=" << fmt_fixed(t.t, 3)
              << ", df=" << fmt_double(t.df) << ", one-sided p=" << fmt_fixed(t.p_one_sided, 5)
              << ", two-sided p=" << fmt_fixed(t.p_two_sided, 5) << "\n";
  }
  return 0;
}

int run_kfold_protocol(const EvaluateArgs& a, const fs::path& out) {
  if (a.manifest.empty()) throw ValidationError("evaluate --protocol kfold needs --manifest");
  const fs::path manifest_path(a.manifest);
  const auto manifest_rows = read_manifest(manifest_path);
  const auto rows = manifest_features(manifest_path, manifest_rows, a.stage);
  for (const auto& f : rows) {
    if (!f.gt_count)
      throw ValidationError("block '" + f.block_id + "': gt_count is required for kfold");
    if (!f.ft_density)
      throw ValidationError("block '" + f.block_id + "': ft_density is required for kfold");
  }

  const auto result = kfold_cross_validate(
      rows.size(), [&](std::span<const std::size_t> train, std::size_t test) {
        std::vector<std::vector<double>> X;
        std::vector<double> y;
        X.reserve(train.size());
        y.reserve(train.size());
        for (const auto i : train) {
          const auto v = rows[i].values();
          X.emplace_back(v.begin(), v.end());
          y.push_back(*rows[i].gt_count);
        }
        const auto model = fit_ridge(X, y, a.ridge);
        const auto pred = predict_count(model, rows[test]);
        return relative_precision(static_cast<double>(pred.count), *rows[test].gt_count);
      });

  std::string csv = "fold,block_id,score\n";
  for (const auto& fold : result.folds)
    csv += std::to_string(fold.test_index) + ',' + rows[fold.test_index].block_id + ',' +
           fmt_double(fold.score) + '\n';
  write_text(out / "folds.csv", csv);

  json folds = json::array();
  for (const auto& fold : result.folds)
    folds.push_back({{"fold", fold.test_index},
                     {"block_id", rows[fold.test_index].block_id},
                     {"score", fold.score}});
  write_text(out / "report.json",
             json{{"protocol", "kfold"}, {"average", result.average}, {"folds", folds}}.dump(1) +
                 "\n");

  std::cout << "k-fold over " << rows.size() << " blocks: mean held-out RP "
            << pct(result.average) << "\n";
  for (const auto& fold : result.folds)
    std::cout << "fold " << fold.test_index << " (" << rows[fold.test_index].block_id
              << "): RP " << pct(fold.score) << "\n";
  return 0;
}

int run_table_check_protocol(const EvaluateArgs& a, const fs::path& out) {
  std::vector<fs::path> files;
  for (const auto& t : a.tables) files.emplace_back(t);
  if (!a.golden.empty()) {
    for (const char* name :
         {"table_detector_cv.json", "table_ablation.json", "table_final.json"}) {
      const fs::path p = fs::path(a.golden) / name;
      if (fs::exists(p)) files.push_back(p);
    }
    if (files.empty())
      throw DataError("no table fixtures found under " + a.golden);
  }
  if (files.empty())
    throw ValidationError("evaluate --protocol table-check needs --golden or --table");

  std::string csv = "table,row,column,printed,recomputed,tolerance,flagged,pass\n";
  int failures = 0;
  for (const auto& file : files) {
    json peek;
    {
      std::ifstream in(file);
      if (!in) throw DataError("cannot open table fixture " + file.string());
      try {
        peek = json::parse(in);
      } catch (const json::exception& e) {
        throw DataError("malformed table fixture " + file.string() + ": " + e.what());
      }
    }
    TableCheckReport report;
    std::string label;
    if (peek.contains("models")) {
      report = check_detector_cv_table(load_detector_cv_table(file));
      label = "detector_cv";
    } else {
      const auto table = load_count_table(file);
      report = check_count_table(table);
      label = table.name;
    }
    int table_failures = 0;
    int flagged = 0;
    for (const auto& c : report.cells) {
      csv += c.table + ',' + c.row + ',' + c.column + ',' + fmt_double(c.printed) + ',' +
             fmt_double(c.recomputed) + ',' + fmt_double(c.tolerance) + ',' +
             (c.flagged ? "1," : "0,") + (c.pass ? "1\n" : "0\n");
      flagged += c.flagged ? 1 : 0;
      if (!c.pass) {
        ++table_failures;
        std::cout << "FAIL " << label << " " << c.row << "/" << c.column << ": printed "
                  << fmt_double(c.printed) << ", recomputed " << fmt_double(c.recomputed)
                  << " (tolerance " << fmt_double(c.tolerance) << ")\n";
      }
    }
    failures += table_failures;
    std::cout << label << ": " << report.cells.size() << " cells checked, " << flagged
              << " pinned to recomputed values, "
              << (table_failures == 0 ? std::string("all within tolerance")
                                      : std::to_string(table_failures) + " out of tolerance")
              << "\n";
  }
  write_text(out / "table_check.csv", csv);
  if (failures > 0) {
    std::cout << "table check failed: " << failures << " cells out of tolerance\n";
    return 1;
  }
  return 0;
}

int run_evaluate(const EvaluateArgs& a) {
  const fs::path out(a.out);
  ensure_dir(out);
  int rc = 0;
  if (a.protocol == "loocv") {
    rc = run_loocv_protocol(a, out);
  } else if (a.protocol == "kfold") {
    rc = run_kfold_protocol(a, out);
  } else if (a.protocol == "table-check") {
    rc = run_table_check_protocol(a, out);
  } else {
    throw ValidationError("unknown protocol '" + a.protocol +
                          "' (use kfold, loocv, or table-check)");
  }

  PipelineConfig cfg;
  cfg.command = "evaluate";
  cfg.patch_size_px = a.stage.patch_size;
  cfg.edge_policy = a.stage.edge_policy;
  cfg.confidence_threshold = a.stage.conf_threshold;
  cfg.lambda = a.ridge.lambda;
  cfg.intercept = a.ridge.intercept;
  cfg.standardize = a.ridge.standardize;
  cfg.iou_threshold = a.iou;
  cfg.seed = a.seed;
  if (!a.manifest.empty()) cfg.paths["manifest"] = a.manifest;
  if (!a.golden.empty()) cfg.paths["golden"] = a.golden;
  cfg.paths["out"] = a.out;
  cfg.extras = {{"protocol", a.protocol}, {"strict", a.stage.strict}};
  if (!a.tables.empty()) cfg.extras["tables"] = a.tables;
  echo_config(cfg, out);
  write_run_log(out, "evaluate");
  return rc;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mound counting pipeline: tiling, augmentation, synthetic scenes, "
               "detection-based counting, global count correction, and evaluation."};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read default option values from a TOML/INI file");

  std::function<int()> action;

  TileArgs tile;
  auto* tile_cmd = app.add_subcommand("tile", "Patch grid for one block -> grid.csv");
  tile_cmd->add_option("--sidecar", tile.sidecar, "Block sidecar JSON");
  tile_cmd->add_option("--width", tile.width, "Mosaic width, px (alternative to --sidecar)");
  tile_cmd->add_option("--height", tile.height, "Mosaic height, px");
  tile_cmd->add_option("--gsd", tile.gsd, "Ground sampling distance, cm/px (with --width)")
      ->capture_default_str();
  tile_cmd->add_option("--id", tile.id, "Block id (with --width)")->capture_default_str();
  add_grid_options(tile_cmd, tile.stage);
  tile_cmd->add_option("--seed", tile.seed, "Random seed")->capture_default_str();
  tile_cmd->add_option("--out", tile.out, "Output directory")->required();
  tile_cmd->callback([&] { action = [&] { return run_tile(tile); }; });

  AugmentArgs augment;
  auto* augment_cmd =
      app.add_subcommand("augment", "Randomized box augmentation for a label directory");
  augment_cmd->add_option("--sidecar", augment.sidecar, "Block sidecar JSON")->required();
  augment_cmd->add_option("--labels", augment.labels, "Source label directory")->required();
  add_grid_options(augment_cmd, augment.stage);
  augment_cmd->add_option("--z-min", augment.aug.z_min, "Min size factor")
      ->capture_default_str();
  augment_cmd->add_option("--z-max", augment.aug.z_max, "Max size factor")
      ->capture_default_str();
  augment_cmd->add_option("--l-min", augment.aug.l_min, "Min displacement, px")
      ->capture_default_str();
  augment_cmd->add_option("--l-max", augment.aug.l_max, "Max displacement, px")
      ->capture_default_str();
  augment_cmd
      ->add_option("--boxes-per-source", augment.aug.boxes_per_source,
                   "Augmented boxes per source box")
      ->capture_default_str();
  augment_cmd->add_option("--seed", augment.seed, "Random seed")->capture_default_str();
  augment_cmd->add_option("--out", augment.out, "Output directory")->required();
  augment_cmd->callback([&] { action = [&] { return run_augment(augment); }; });

  SimulateArgs simulate;
  auto* simulate_cmd =
      app.add_subcommand("simulate", "Synthetic block fleet -> blocks/ + manifest.csv");
  simulate_cmd->add_option("--n", simulate.fleet.n_blocks, "Number of blocks")
      ->capture_default_str();
  simulate_cmd->add_option("--area-min", simulate.fleet.area_min_ha, "Min block area, ha")
      ->capture_default_str();
  simulate_cmd->add_option("--area-max", simulate.fleet.area_max_ha, "Max block area, ha")
      ->capture_default_str();
  simulate_cmd
      ->add_option("--density-min", simulate.fleet.density_min_per_ha, "Min mounds per ha")
      ->capture_default_str();
  simulate_cmd
      ->add_option("--density-max", simulate.fleet.density_max_per_ha, "Max mounds per ha")
      ->capture_default_str();
  simulate_cmd
      ->add_option("--invisible-min", simulate.fleet.invisible_min,
                   "Min invisible fraction")
      ->capture_default_str();
  simulate_cmd
      ->add_option("--invisible-max", simulate.fleet.invisible_max,
                   "Max invisible fraction")
      ->capture_default_str();
  simulate_cmd
      ->add_option("--gradient-limit", simulate.fleet.gradient_limit,
                   "Max |density gradient| per axis")
      ->capture_default_str();
  simulate_cmd
      ->add_option("--mound-size-mean", simulate.fleet.mound_size_mean_px,
                   "Mean mound size, px")
      ->capture_default_str();
  simulate_cmd
      ->add_option("--mound-size-std", simulate.fleet.mound_size_std_px,
                   "Mound size stddev, px")
      ->capture_default_str();
  simulate_cmd->add_option("--margin", simulate.fleet.border_margin_px, "Border margin, px")
      ->capture_default_str();
  simulate_cmd->add_option("--gsd", simulate.fleet.gsd_cm_per_px, "Ground sampling, cm/px")
      ->capture_default_str();
  simulate_cmd->add_option("--patch-size", simulate.fleet.patch_size_px, "Patch size, px")
      ->capture_default_str();
  simulate_cmd
      ->add_option("--ft-patches", simulate.fleet.ft_patch_count,
                   "Fine-tuning patches per block")
      ->capture_default_str();
  simulate_cmd->add_flag("--pin-reference-areas,!--no-pin-reference-areas",
                         simulate.fleet.pin_reference_areas,
                         "Pin the first two block areas to reference values");
  simulate_cmd->add_option("--seed", simulate.fleet.seed, "Random seed")
      ->capture_default_str();
  simulate_cmd->add_option("--out", simulate.out, "Output directory")->required();
  simulate_cmd->callback([&] { action = [&] { return run_simulate(simulate); }; });

  DetectArgs detect;
  auto* detect_cmd =
      app.add_subcommand("detect", "Run a detector backend over manifest blocks");
  detect_cmd->add_option("--manifest", detect.manifest, "Block manifest CSV")->required();
  detect_cmd->add_option("--backend", detect.backend, "Backend: oracle | file")
      ->capture_default_str();
  detect_cmd
      ->add_option("--truth-subdir", detect.truth_subdir,
                   "Oracle: truth label directory next to each sidecar")
      ->capture_default_str();
  add_oracle_options(detect_cmd, detect.oracle);
  add_grid_options(detect_cmd, detect.stage);
  add_detection_options(detect_cmd, detect.stage);
  detect_cmd->add_option("--seed", detect.seed, "Random seed")->capture_default_str();
  detect_cmd->add_option("--out", detect.out, "Output directory")->required();
  detect_cmd->callback([&] { action = [&] { return run_detect(detect); }; });

  FeaturesArgs features;
  auto* features_cmd =
      app.add_subcommand("features", "Per-block feature vectors -> features.csv");
  features_cmd->add_option("--manifest", features.manifest, "Block manifest CSV")->required();
  add_grid_options(features_cmd, features.stage);
  add_detection_options(features_cmd, features.stage);
  features_cmd->add_option("--seed", features.seed, "Random seed")->capture_default_str();
  features_cmd->add_option("--out", features.out, "Output directory")->required();
  features_cmd->callback([&] { action = [&] { return run_features(features); }; });

  TrainArgs train;
  auto* train_cmd =
      app.add_subcommand("train-global", "Fit the global count-correction model");
  train_cmd->add_option("--features", train.features, "Features CSV (needs gt_count)")
      ->required();
  add_ridge_options(train_cmd, train.ridge);
  train_cmd->add_option("--seed", train.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->callback([&] { action = [&] { return run_train_global(train); }; });

  CountArgs count;
  auto* count_cmd = app.add_subcommand("count", "Count one block -> report.json");
  count_cmd->add_option("--sidecar", count.sidecar, "Block sidecar JSON")->required();
  count_cmd->add_option("--model", count.model, "Trained model file")->required();
  count_cmd->add_option("--detections", count.detections,
                        "Detection directory (file backend)");
  count_cmd->add_option("--ft-labels", count.ft_labels, "Fine-tuning label directory");
  count_cmd->add_option("--backend", count.backend, "Backend: file | oracle")
      ->capture_default_str();
  count_cmd->add_option("--truth", count.truth, "Truth label directory (oracle backend)");
  add_oracle_options(count_cmd, count.oracle);
  add_grid_options(count_cmd, count.stage);
  add_detection_options(count_cmd, count.stage);
  auto* gt_opt =
      count_cmd->add_option("--gt", count.gt, "Known ground-truth count (adds RP)");
  count_cmd->add_option("--seed", count.seed, "Random seed")->capture_default_str();
  count_cmd->add_option("--out", count.out, "Output directory")->required();
  count_cmd->callback([&] {
    count.has_gt = gt_opt->count() > 0;
    action = [&] { return run_count(count); };
  });

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Evaluation protocols");
  evaluate_cmd
      ->add_option("--protocol", evaluate.protocol, "Protocol: kfold | loocv | table-check")
      ->required()
      ->check(CLI::IsMember({"kfold", "loocv", "table-check"}));
  evaluate_cmd->add_option("--manifest", evaluate.manifest, "Block manifest CSV");
  evaluate_cmd->add_option("--golden", evaluate.golden,
                           "Directory with table fixtures (table-check)");
  evaluate_cmd->add_option("--table", evaluate.tables,
                           "Table fixture JSON (table-check; repeatable)");
  add_grid_options(evaluate_cmd, evaluate.stage);
  add_detection_options(evaluate_cmd, evaluate.stage);
  add_ridge_options(evaluate_cmd, evaluate.ridge);
  evaluate_cmd->add_option("--iou", evaluate.iou, "IoU threshold for box matching")
      ->capture_default_str();
  evaluate_cmd->add_option("--seed", evaluate.seed, "Random seed")->capture_default_str();
  evaluate_cmd->add_option("--out", evaluate.out, "Output directory")->required();
  evaluate_cmd->callback([&] { action = [&] { return run_evaluate(evaluate); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1; // --help exits clean; usage problems are code 1
  }

  try {
    return action ? action() : 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
