#include "mound/backend.hpp"

#include <algorithm>
#include <cmath>

#include "mound/errors.hpp"
#include "mound/rng.hpp"

namespace mound {

FileBackend::FileBackend(FileBackendConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.confidence_threshold < 0.0 || cfg_.confidence_threshold > 1.0)
    throw ValidationError("confidence threshold must lie in [0,1]");
}

PatchDetections FileBackend::detect_patch(const PatchGrid& grid, const PatchRef& patch,
                                          std::string_view block_id) const {
  (void)grid;
  const auto path =
      cfg_.detections_dir / label_filename(block_id, patch.row, patch.col);
  if (!std::filesystem::exists(path)) {
    if (cfg_.strict)
      throw DataError("missing detection file: " + path.string());
    return PatchDetections{{}, true};
  }
  PatchDetections out;
  for (auto& rec : load_detections_file(path, patch))
    if (rec.confidence >= cfg_.confidence_threshold) out.records.push_back(rec);
  return out;
}

OracleBackend::OracleBackend(OracleBackendConfig cfg, AnnotationSet truth)
    : cfg_(cfg), truth_(std::move(truth)) {
  if (cfg_.miss_rate < 0.0 || cfg_.miss_rate > 1.0)
    throw ValidationError("miss_rate must lie in [0,1]");
  if (cfg_.fp_rate_per_patch < 0.0)
    throw ValidationError("fp_rate_per_patch must be >= 0");
  if (cfg_.center_jitter_px < 0.0)
    throw ValidationError("center_jitter_px must be >= 0");
}

PatchDetections OracleBackend::detect_patch(const PatchGrid& grid,
                                            const PatchRef& patch,
                                            std::string_view block_id) const {
  (void)grid;
  (void)block_id;
  Rng rng(derive_seed(cfg_.seed, patch_stream_key(static_cast<int>(patch.row),
                                                  static_cast<int>(patch.col))));
  const Rect patch_rect{0.0, 0.0, static_cast<double>(patch.w),
                        static_cast<double>(patch.h)};
  const double pw = static_cast<double>(patch.w);
  const double ph = static_cast<double>(patch.h);

  auto draw_confidence = [&]() {
    return cfg_.confidence_model == ConfidenceModel::constant
               ? 0.9
               : rng.uniform_in(0.25, 1.0);
  };

  PatchDetections out;
  const auto it = truth_.patches.find({patch.row, patch.col});
  if (it != truth_.patches.end()) {
    for (const auto& gt : it->second) {
      if (rng.bernoulli(cfg_.miss_rate)) continue;
      BoundingBox det = gt;
      if (cfg_.center_jitter_px > 0.0) {
        det.cx = std::clamp(det.cx + rng.normal(0.0, cfg_.center_jitter_px), 0.0, pw);
        det.cy = std::clamp(det.cy + rng.normal(0.0, cfg_.center_jitter_px), 0.0, ph);
      }
      if (auto clipped = clip_box(det, patch_rect))
        out.records.push_back({*clipped, draw_confidence(), kMoundClassId});
    }
  }
  const long long fp_count = cfg_.fp_rate_per_patch > 0.0
                                 ? rng.poisson(cfg_.fp_rate_per_patch)
                                 : 0;
  for (long long k = 0; k < fp_count; ++k) {
    BoundingBox fp{rng.uniform_in(0.0, pw), rng.uniform_in(0.0, ph), 16.0, 16.0};
    if (auto clipped = clip_box(fp, patch_rect))
      out.records.push_back({*clipped, draw_confidence(), kMoundClassId});
  }
  return out;
}

BlockDetections detect_block(const DetectorBackend& backend, const PatchGrid& grid,
                             std::string_view block_id) {
  BlockDetections out;
  out.block_id = std::string(block_id);
  for (const auto& patch : all_patches(grid)) {
    auto det = backend.detect_patch(grid, patch, block_id);
    if (det.source_missing) ++out.missing_files;
    out.patches[{patch.row, patch.col}] = std::move(det.records);
  }
  return out;
}

CountSummary count_by_detection(const BlockDetections& detections) {
  CountSummary summary;
  summary.per_patch.reserve(detections.patches.size());
  for (const auto& [key, records] : detections.patches) {
    const auto n = static_cast<std::int64_t>(records.size());
    summary.per_patch.emplace_back(key, n);
    summary.total += n;
  }
  return summary;
}

} // namespace mound
