#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mound/backend.hpp"
#include "mound/labels.hpp"
#include "mound/raster.hpp"

namespace mound {

inline constexpr int kFeatureDim = 4;

// Per-block predictors for the global count correction. Feature order is
// fixed: det_count, det_density, ft_density, area_ha.
struct BlockFeatureVector {
  std::string block_id;
  double det_count = 0.0;
  double det_density = 0.0; // detections per grid patch, over ALL patches
  std::optional<double> ft_density; // mean boxes per fine-tuning patch
  double area_ha = 0.0;
  std::optional<double> gt_count; // training target when known

  // Throws ValidationError when ft_density is absent.
  std::array<double, kFeatureDim> values() const;
};

// ft_annotations: the handful of patches a user annotated for this block
// (an empty set leaves ft_density absent; such vectors are rejected by
// training). Patches annotated with zero boxes still count toward the mean.
BlockFeatureVector extract_features(const OrthomosaicMeta& meta,
                                    const PatchGrid& grid,
                                    const CountSummary& counts,
                                    const AnnotationSet& ft_annotations);

// CSV with header "block_id,det_count,det_density,ft_density,area_ha" plus
// ",gt_count" when targets are present. Absent ft_density/gt_count are empty
// cells. Doubles round-trip bit-exactly.
void write_features_csv(const std::vector<BlockFeatureVector>& rows,
                        const std::filesystem::path& path);
std::vector<BlockFeatureVector> read_features_csv(const std::filesystem::path& path);

} // namespace mound
