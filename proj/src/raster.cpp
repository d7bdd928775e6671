#include "mound/raster.hpp"

#include <fstream>

#include <json.hpp>

#include "mound/errors.hpp"

namespace mound {

void validate_meta(const OrthomosaicMeta& meta) {
  if (meta.id.empty()) throw ValidationError("block id must not be empty");
  if (meta.width_px < 1 || meta.height_px < 1)
    throw ValidationError("block '" + meta.id + "': dimensions must be >= 1 px");
  if (!(meta.area_ha > 0.0))
    throw ValidationError("block '" + meta.id + "': area_ha must be positive");
  if (meta.gsd_cm_per_px && !(*meta.gsd_cm_per_px > 0.0))
    throw ValidationError("block '" + meta.id + "': gsd_cm_per_px must be positive");
}

OrthomosaicMeta load_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sidecar: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed sidecar " + path.string() + ": " + e.what());
  }
  OrthomosaicMeta meta;
  try {
    meta.id = j.at("id").get<std::string>();
    meta.width_px = j.at("width_px").get<std::int64_t>();
    meta.height_px = j.at("height_px").get<std::int64_t>();
    meta.area_ha = j.at("area_ha").get<double>();
    if (j.contains("gsd_cm_per_px"))
      meta.gsd_cm_per_px = j.at("gsd_cm_per_px").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("sidecar " + path.string() + " missing field: " + e.what());
  }
  validate_meta(meta);
  return meta;
}

void save_sidecar(const OrthomosaicMeta& meta, const std::filesystem::path& path) {
  validate_meta(meta);
  nlohmann::json j{{"id", meta.id},
                   {"width_px", meta.width_px},
                   {"height_px", meta.height_px},
                   {"area_ha", meta.area_ha}};
  if (meta.gsd_cm_per_px) j["gsd_cm_per_px"] = *meta.gsd_cm_per_px;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write sidecar: " + path.string());
  out << j.dump(2) << '\n';
}

EdgePolicy parse_edge_policy(const std::string& name) {
  if (name == "pad") return EdgePolicy::pad;
  if (name == "partial") return EdgePolicy::partial;
  if (name == "drop") return EdgePolicy::drop;
  throw ValidationError("unknown edge policy '" + name + "' (pad|partial|drop)");
}

std::string to_string(EdgePolicy policy) {
  switch (policy) {
    case EdgePolicy::pad: return "pad";
    case EdgePolicy::partial: return "partial";
    case EdgePolicy::drop: return "drop";
  }
  throw ValidationError("invalid edge policy value");
}

PatchGrid build_grid(const OrthomosaicMeta& meta, std::int64_t patch_size_px,
                     EdgePolicy policy) {
  validate_meta(meta);
  if (patch_size_px < 1) throw ValidationError("patch size must be >= 1 px");
  PatchGrid grid;
  grid.width_px = meta.width_px;
  grid.height_px = meta.height_px;
  grid.patch_size_px = patch_size_px;
  grid.edge_policy = policy;
  if (policy == EdgePolicy::drop) {
    grid.cols = meta.width_px / patch_size_px;
    grid.rows = meta.height_px / patch_size_px;
    if (grid.cols < 1 || grid.rows < 1)
      throw ValidationError("block '" + meta.id +
                            "': drop policy leaves an empty grid");
  } else {
    grid.cols = (meta.width_px + patch_size_px - 1) / patch_size_px;
    grid.rows = (meta.height_px + patch_size_px - 1) / patch_size_px;
  }
  return grid;
}

PatchRef patch_at(const PatchGrid& grid, std::int64_t row, std::int64_t col) {
  if (row < 0 || row >= grid.rows || col < 0 || col >= grid.cols)
    throw ValidationError("patch (" + std::to_string(row) + "," +
                          std::to_string(col) + ") outside grid");
  PatchRef p;
  p.row = row;
  p.col = col;
  p.origin_x = col * grid.patch_size_px;
  p.origin_y = row * grid.patch_size_px;
  p.w = grid.patch_size_px;
  p.h = grid.patch_size_px;
  if (grid.edge_policy == EdgePolicy::partial) {
    p.w = std::min(p.w, grid.width_px - p.origin_x);
    p.h = std::min(p.h, grid.height_px - p.origin_y);
  }
  return p;
}

std::pair<std::int64_t, std::int64_t>
patch_to_mosaic(const PatchGrid& grid, const PatchRef& patch, std::int64_t x,
                std::int64_t y) {
  (void)grid;
  if (x < 0 || x >= patch.w || y < 0 || y >= patch.h)
    throw ValidationError("local pixel (" + std::to_string(x) + "," +
                          std::to_string(y) + ") outside patch");
  return {patch.origin_x + x, patch.origin_y + y};
}

PatchLocal mosaic_to_patch(const PatchGrid& grid, std::int64_t x, std::int64_t y) {
  // Under pad the tiled region still only covers real mosaic pixels; the
  // overhang has no pixels to map back.
  const std::int64_t max_x =
      grid.edge_policy == EdgePolicy::drop ? grid.cols * grid.patch_size_px
                                           : grid.width_px;
  const std::int64_t max_y =
      grid.edge_policy == EdgePolicy::drop ? grid.rows * grid.patch_size_px
                                           : grid.height_px;
  if (x < 0 || x >= max_x || y < 0 || y >= max_y)
    throw ValidationError("mosaic pixel (" + std::to_string(x) + "," +
                          std::to_string(y) + ") outside tiled region");
  PatchLocal out;
  out.patch = patch_at(grid, y / grid.patch_size_px, x / grid.patch_size_px);
  out.x = x - out.patch.origin_x;
  out.y = y - out.patch.origin_y;
  return out;
}

std::vector<PatchRef> all_patches(const PatchGrid& grid) {
  std::vector<PatchRef> out;
  out.reserve(static_cast<std::size_t>(grid.patch_count()));
  for (std::int64_t r = 0; r < grid.rows; ++r)
    for (std::int64_t c = 0; c < grid.cols; ++c) out.push_back(patch_at(grid, r, c));
  return out;
}

} // namespace mound
