#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mound/labels.hpp"
#include "mound/raster.hpp"

namespace mound {

// Recipe for one synthetic block. Mounds are square boxes scattered by dart
// throwing with a minimum center separation of 1.1 * mound_size_mean_px;
// an optional linear density gradient thins acceptance across the extent.
//
// Pixel dimensions are realized from area_ha, gsd_cm_per_px and aspect
// (width/height ratio), so the scene matches real orthomosaic scales.
struct SyntheticBlockSpec {
  std::string id;
  double area_ha = 0.0;
  double density_per_ha = 0.0;     // expected mounds per hectare
  double gradient_x = 0.0;         // relative density slope across width
  double gradient_y = 0.0;         // ... and height; 0 means uniform
  double mound_size_mean_px = 16.0;
  double mound_size_std_px = 3.0;
  double invisible_fraction = 0.0; // in [0,1): counted but never annotated
  double border_margin_px = 0.0;   // no mound centers within this margin
  double aspect = 1.0;             // width / height
  double gsd_cm_per_px = 3.0;
  std::int64_t patch_size_px = 416;
  EdgePolicy edge_policy = EdgePolicy::partial;
  int ft_patch_count = 11; // synthetic user-annotated patches
  std::uint64_t seed = 0;
};

// Raw mound geometry before patch bucketing/clipping. Kept for diagnostics
// and for verifying placement invariants (pairwise separation, gradient
// response, visibility statistics) that the clipped per-patch boxes blur.
struct Mound {
  double cx = 0.0; // mosaic frame
  double cy = 0.0;
  double size_px = 0.0;
  bool visible = true; // false: counted in gt_count, absent from annotations
};

struct GeneratedBlock {
  OrthomosaicMeta meta;
  PatchGrid grid;
  AnnotationSet visible;   // per-patch boxes, clipped to their patch
  AnnotationSet ft_sample; // subset of `visible`: the user-annotated patches
  std::vector<Mound> mounds;       // every placed mound, placement order
  std::int64_t gt_count = 0;       // visible + invisible mounds
  std::int64_t invisible_count = 0;
};

// Deterministic for a fixed spec: one RNG stream seeded with spec.seed, with
// a fixed draw order (target count, placements, sizes, visibility flags,
// fine-tuning patch choice). Throws ValidationError on nonsensical specs,
// including a border margin that leaves no placement region.
GeneratedBlock generate_block(const SyntheticBlockSpec& spec);

// Recipe for a heterogeneous fleet. Per-block parameters are drawn from the
// configured ranges; when pin_reference_areas is set (and n_blocks >= 2) the
// first two blocks use the fixed small areas 2.37 and 3.09 ha to keep the
// small-block regime represented. Per-block seeds derive from `seed` and the
// block index, so blocks can be generated independently.
struct FleetSpec {
  int n_blocks = 18;
  double area_min_ha = 4.0;
  double area_max_ha = 20.0;
  double density_min_per_ha = 800.0;
  double density_max_per_ha = 2200.0;
  double invisible_min = 0.1;
  double invisible_max = 0.3;
  double gradient_limit = 0.4; // |gradient_x|, |gradient_y| < limit
  double mound_size_mean_px = 16.0;
  double mound_size_std_px = 3.0;
  double border_margin_px = 0.0;
  double gsd_cm_per_px = 3.0;
  std::int64_t patch_size_px = 416;
  int ft_patch_count = 11;
  bool pin_reference_areas = true;
  std::uint64_t seed = 0;
};

std::vector<SyntheticBlockSpec> fleet_specs(const FleetSpec& fleet);
std::vector<GeneratedBlock> generate_fleet(const FleetSpec& fleet);

} // namespace mound
