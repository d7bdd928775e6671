#pragma once

#include <cstdint>
#include <vector>

#include "mound/geometry.hpp"
#include "mound/raster.hpp"

namespace mound {

// Label-space augmentation: bounding boxes are resized or displaced to
// synthesize extra training annotations. Only the geometry moves; whatever
// imagery sits under the boxes is the training pipeline's problem.
struct AugmentationConfig {
  double z_min = 0.8; // size factor range
  double z_max = 1.2;
  double l_min = 1.0; // displacement length range, px
  double l_max = 10.0;
  double alpha_min = 0.0; // displacement angle range, radians
  double alpha_max = 6.283185307179586476925287;
  int boxes_per_source = 1;
  std::uint64_t seed = 0;
};

// Throws ValidationError on empty/negative ranges or boxes_per_source < 1.
void validate(const AugmentationConfig& cfg);

// Scale width and height by z about the fixed center. z must be > 0.
BoundingBox resize_box(const BoundingBox& box, double z);

// Displace the center by length l at angle alpha; size unchanged. l >= 0.
BoundingBox translate_box(const BoundingBox& box, double l, double alpha);

struct AugmentResult {
  std::vector<BoundingBox> boxes;
  int discarded = 0; // clipped below the area threshold (or clipped away)
};

// For each source box, boxes_per_source variants: the transform is chosen
// uniformly between resize and translation, its parameters drawn uniformly
// from the configured ranges. Results are clipped to the patch rectangle;
// a variant whose clipped area falls below 25% of its pre-clip area is
// discarded (counted in `discarded`).
//
// Determinism: the RNG stream is seeded with
// derive_seed(cfg.seed, patch_stream_key(patch.row, patch.col)), and per
// variant the draw order is fixed: transform selector u (u < 0.5 -> resize),
// then z, or l followed by alpha. Patches can therefore be processed in any
// order, or in parallel, with identical output.
AugmentResult augment_patch(const std::vector<BoundingBox>& sources,
                            const AugmentationConfig& cfg, const PatchRef& patch);

} // namespace mound
