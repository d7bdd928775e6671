#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mound/labels.hpp"
#include "mound/raster.hpp"

namespace mound {

// Detections for one patch. `source_missing` marks a patch whose backing
// data was absent (lenient file backend); it carries zero records.
struct PatchDetections {
  std::vector<DetectionRecord> records;
  bool source_missing = false;
};

// Boundary for anything that produces detections per patch. Implementations
// must be stateless per call: detect_patch is const and safe to invoke
// concurrently for different patches of the same block.
class DetectorBackend {
public:
  virtual ~DetectorBackend() = default;
  virtual std::string name() const = 0;
  virtual PatchDetections detect_patch(const PatchGrid& grid, const PatchRef& patch,
                                       std::string_view block_id) const = 0;
};

// Reads per-patch detection files "{block}_{row}_{col}.txt" from a directory
// and filters them by confidence. A missing file is lenient by default
// (empty result, flagged); strict mode turns it into a DataError.
struct FileBackendConfig {
  std::filesystem::path detections_dir;
  double confidence_threshold = 0.25;
  bool strict = false;
};

class FileBackend : public DetectorBackend {
public:
  explicit FileBackend(FileBackendConfig cfg);
  std::string name() const override { return "files"; }
  PatchDetections detect_patch(const PatchGrid& grid, const PatchRef& patch,
                               std::string_view block_id) const override;

private:
  FileBackendConfig cfg_;
};

// Synthetic detector derived from ground truth: drops each truth box with
// probability miss_rate, jitters surviving centers (Gaussian per axis,
// sigma = center_jitter_px, clamped into the patch), and adds
// Poisson(fp_rate_per_patch) false positives (16 px square, uniform center).
// Emitted boxes are clipped to the patch rectangle so they serialize as
// valid label lines. Confidence: constant -> 0.9, noisy -> uniform [0.25,1).
//
// Per-patch RNG substream: derive_seed(seed, patch_stream_key(row, col)), so
// results are independent of patch visit order.
enum class ConfidenceModel { constant, noisy };

struct OracleBackendConfig {
  double miss_rate = 0.0;
  double fp_rate_per_patch = 0.0;
  double center_jitter_px = 0.0;
  ConfidenceModel confidence_model = ConfidenceModel::constant;
  std::uint64_t seed = 0;
};

class OracleBackend : public DetectorBackend {
public:
  // `truth` holds the visible ground truth of the block being detected.
  OracleBackend(OracleBackendConfig cfg, AnnotationSet truth);
  std::string name() const override { return "oracle"; }
  PatchDetections detect_patch(const PatchGrid& grid, const PatchRef& patch,
                               std::string_view block_id) const override;

private:
  OracleBackendConfig cfg_;
  AnnotationSet truth_;
};

// All detections of one block, bucketed per patch (row-major key order).
struct BlockDetections {
  std::string block_id;
  std::map<PatchKey, std::vector<DetectionRecord>> patches;
  int missing_files = 0;
};

BlockDetections detect_block(const DetectorBackend& backend, const PatchGrid& grid,
                             std::string_view block_id);

// Local counting: the block's count is the number of detections, reported
// per patch and in total.
struct CountSummary {
  std::int64_t total = 0;
  std::vector<std::pair<PatchKey, std::int64_t>> per_patch; // row-major
};

CountSummary count_by_detection(const BlockDetections& detections);

} // namespace mound
