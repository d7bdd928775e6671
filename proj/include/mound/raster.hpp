#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mound {

// Descriptive record for one orthomosaic block. The rasters themselves never
// enter this library; everything downstream works from dimensions and labels.
struct OrthomosaicMeta {
  std::string id;
  std::int64_t width_px = 0;
  std::int64_t height_px = 0;
  double area_ha = 0.0;
  std::optional<double> gsd_cm_per_px;
};

// Throws ValidationError on nonpositive dimensions/area/gsd or empty id.
void validate_meta(const OrthomosaicMeta& meta);

// Sidecar JSON: {"id", "width_px", "height_px", "area_ha"[, "gsd_cm_per_px"]}.
OrthomosaicMeta load_sidecar(const std::filesystem::path& path);
void save_sidecar(const OrthomosaicMeta& meta, const std::filesystem::path& path);

// What happens to the right/bottom remainder when the patch size does not
// divide the mosaic dimensions.
enum class EdgePolicy {
  pad,     // edge patches keep nominal size; they overhang the mosaic
  partial, // edge patches are truncated to the mosaic boundary
  drop,    // the remainder strip is discarded
};

EdgePolicy parse_edge_policy(const std::string& name);
std::string to_string(EdgePolicy policy);

// Non-overlapping regular grid over one mosaic. Patch (row, col) has its
// origin at (col*patch_size, row*patch_size).
struct PatchGrid {
  std::int64_t width_px = 0;  // mosaic dims, kept for edge-patch truncation
  std::int64_t height_px = 0;
  std::int64_t patch_size_px = 0;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  EdgePolicy edge_policy = EdgePolicy::partial;

  std::int64_t patch_count() const { return rows * cols; }
};

struct PatchRef {
  std::int64_t row = 0;
  std::int64_t col = 0;
  std::int64_t origin_x = 0; // mosaic pixel of this patch's (0,0)
  std::int64_t origin_y = 0;
  std::int64_t w = 0; // actual patch extent (truncated under `partial`)
  std::int64_t h = 0;
};

// Throws ValidationError when patch_size is 0, or when `drop` would leave an
// empty grid (patch larger than the mosaic).
PatchGrid build_grid(const OrthomosaicMeta& meta, std::int64_t patch_size_px,
                     EdgePolicy policy);

// (row, col) must lie inside the grid.
PatchRef patch_at(const PatchGrid& grid, std::int64_t row, std::int64_t col);

// Patch-local pixel -> mosaic pixel. Local coords must satisfy
// 0 <= x < patch.w, 0 <= y < patch.h.
std::pair<std::int64_t, std::int64_t>
patch_to_mosaic(const PatchGrid& grid, const PatchRef& patch, std::int64_t x,
                std::int64_t y);

// Mosaic pixel -> (patch, local pixel). Rejects pixels outside the tiled
// region (for `drop`, the remainder strip is outside it).
struct PatchLocal {
  PatchRef patch;
  std::int64_t x = 0;
  std::int64_t y = 0;
};
PatchLocal mosaic_to_patch(const PatchGrid& grid, std::int64_t x, std::int64_t y);

// All patches in row-major order; convenience for whole-block loops.
std::vector<PatchRef> all_patches(const PatchGrid& grid);

} // namespace mound
