#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mound/geometry.hpp"
#include "mound/raster.hpp"

namespace mound {

// Single object class (class id 0 everywhere); kept in the wire format for
// compatibility with the usual detector tooling.
inline constexpr int kMoundClassId = 0;

struct DetectionRecord {
  BoundingBox box; // patch-local pixels
  double confidence = 0.0;
  int class_id = kMoundClassId;
};

struct PatchKey {
  std::int64_t row = 0;
  std::int64_t col = 0;
  auto operator<=>(const PatchKey&) const = default;
};

// Ground-truth boxes for one block, bucketed per patch. std::map keeps patch
// iteration order deterministic (row-major).
struct AnnotationSet {
  std::string block_id;
  std::map<PatchKey, std::vector<BoundingBox>> patches;

  std::int64_t total_count() const;
};

// Label file name for one patch: "{block}_{row}_{col}.txt".
std::string label_filename(std::string_view block_id, std::int64_t row,
                           std::int64_t col);

// --- wire format -----------------------------------------------------------
//
// One object per line. Ground truth:  "class cx cy w h"
//                      detections:    "class cx cy w h conf"
// cx cy w h are normalized to the patch's actual width/height (each value in
// [0,1]; w,h > 0); conf in [0,1]. Parsers convert to patch-local pixels.
// Boxes may overhang the patch border (cx + w/2 > 1 is legal); they are
// stored unclipped.

std::vector<BoundingBox> parse_ground_truth(std::string_view text,
                                            const PatchRef& patch);
std::vector<DetectionRecord> parse_detections(std::string_view text,
                                              const PatchRef& patch);

std::string format_ground_truth(const std::vector<BoundingBox>& boxes,
                                const PatchRef& patch);
std::string format_detections(const std::vector<DetectionRecord>& records,
                              const PatchRef& patch);

std::vector<BoundingBox> load_ground_truth_file(const std::filesystem::path& path,
                                                const PatchRef& patch);
std::vector<DetectionRecord> load_detections_file(const std::filesystem::path& path,
                                                  const PatchRef& patch);

// Reads every existing "{block}_{row}_{col}.txt" under dir for the grid.
// Patches without a file simply have no entry.
AnnotationSet load_annotation_dir(const std::filesystem::path& dir,
                                  std::string_view block_id, const PatchGrid& grid);
void save_annotation_dir(const AnnotationSet& set, const PatchGrid& grid,
                         const std::filesystem::path& dir);

// Shift patch-local boxes into the mosaic pixel frame.
BoundingBox to_mosaic_frame(const BoundingBox& box, const PatchRef& patch);
std::vector<BoundingBox> to_mosaic_frame(const AnnotationSet& set,
                                         const PatchGrid& grid);

} // namespace mound
