#include "mound/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "mound/errors.hpp"
#include "mound/rng.hpp"

namespace mound {
namespace {

void validate_spec(const SyntheticBlockSpec& spec) {
  if (spec.id.empty()) throw ValidationError("synthetic block needs an id");
  if (!(spec.area_ha > 0.0)) throw ValidationError("area_ha must be positive");
  if (!(spec.density_per_ha > 0.0))
    throw ValidationError("density_per_ha must be positive");
  if (!(spec.mound_size_mean_px > 0.0) || spec.mound_size_std_px < 0.0)
    throw ValidationError("mound size parameters must be positive");
  if (spec.invisible_fraction < 0.0 || spec.invisible_fraction >= 1.0)
    throw ValidationError("invisible_fraction must lie in [0,1)");
  if (spec.border_margin_px < 0.0)
    throw ValidationError("border_margin_px must be >= 0");
  if (!(spec.aspect > 0.0)) throw ValidationError("aspect must be positive");
  if (!(spec.gsd_cm_per_px > 0.0)) throw ValidationError("gsd must be positive");
  if (spec.ft_patch_count < 1)
    throw ValidationError("ft_patch_count must be >= 1");
}

// Uniform spatial hash over mound centers for the min-separation test.
class SeparationIndex {
public:
  explicit SeparationIndex(double min_sep) : sep_(min_sep), cell_(min_sep) {}

  bool admits(double x, double y) const {
    const auto [cx, cy] = cell_of(x, y);
    for (std::int64_t dy = -1; dy <= 1; ++dy)
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (const auto& [px, py] : it->second) {
          const double ddx = px - x;
          const double ddy = py - y;
          if (ddx * ddx + ddy * ddy < sep_ * sep_) return false;
        }
      }
    return true;
  }

  void insert(double x, double y) {
    const auto [cx, cy] = cell_of(x, y);
    cells_[key(cx, cy)].emplace_back(x, y);
  }

private:
  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
           static_cast<std::uint32_t>(cy);
  }
  std::pair<std::int64_t, std::int64_t> cell_of(double x, double y) const {
    return {static_cast<std::int64_t>(std::floor(x / cell_)),
            static_cast<std::int64_t>(std::floor(y / cell_))};
  }
  double sep_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::pair<double, double>>> cells_;
};

} // namespace

GeneratedBlock generate_block(const SyntheticBlockSpec& spec) {
  validate_spec(spec);

  GeneratedBlock block;
  const double px_per_m = 100.0 / spec.gsd_cm_per_px;
  const double area_px2 = spec.area_ha * 10000.0 * px_per_m * px_per_m;
  const auto width = static_cast<std::int64_t>(std::llround(
      std::sqrt(area_px2 * spec.aspect)));
  const auto height = static_cast<std::int64_t>(std::llround(area_px2 / width));
  block.meta = OrthomosaicMeta{spec.id, width, height, spec.area_ha,
                               spec.gsd_cm_per_px};
  block.grid = build_grid(block.meta, spec.patch_size_px, spec.edge_policy);

  const double m = spec.border_margin_px;
  const double w = static_cast<double>(width);
  const double h = static_cast<double>(height);
  if (w - 2.0 * m <= 0.0 || h - 2.0 * m <= 0.0)
    throw ValidationError("block '" + spec.id +
                          "': border margin leaves no placement region");

  Rng rng(spec.seed);
  const auto n_target = rng.poisson(spec.area_ha * spec.density_per_ha);

  // Density field for gradient thinning, normalized so its max is the
  // acceptance ceiling; zero gradient short-circuits to plain placement.
  const bool graded = spec.gradient_x != 0.0 || spec.gradient_y != 0.0;
  auto field = [&](double x, double y) {
    const double v = 1.0 + spec.gradient_x * (x / w - 0.5) +
                     spec.gradient_y * (y / h - 0.5);
    return std::max(v, 0.0);
  };
  const double field_max =
      1.0 + (std::fabs(spec.gradient_x) + std::fabs(spec.gradient_y)) / 2.0;

  const double min_sep = 1.1 * spec.mound_size_mean_px;
  SeparationIndex index(min_sep);
  std::vector<std::pair<double, double>> centers;
  centers.reserve(static_cast<std::size_t>(n_target));
  const long long max_attempts = 50 * n_target + 1000;
  long long attempts = 0;
  while (static_cast<long long>(centers.size()) < n_target &&
         attempts < max_attempts) {
    ++attempts;
    const double x = rng.uniform_in(m, w - m);
    const double y = rng.uniform_in(m, h - m);
    if (graded && rng.uniform() * field_max >= field(x, y)) continue;
    if (!index.admits(x, y)) continue;
    index.insert(x, y);
    centers.emplace_back(x, y);
  }
  if (static_cast<long long>(centers.size()) < n_target)
    throw ValidationError("block '" + spec.id +
                          "': density too high for the minimum mound separation");

  std::vector<double> sizes;
  sizes.reserve(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i)
    sizes.push_back(std::max(
        4.0, rng.normal(spec.mound_size_mean_px, spec.mound_size_std_px)));

  block.gt_count = static_cast<std::int64_t>(centers.size());
  block.visible.block_id = spec.id;
  block.ft_sample.block_id = spec.id;

  const double ps = static_cast<double>(spec.patch_size_px);
  block.mounds.reserve(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (rng.bernoulli(spec.invisible_fraction)) {
      ++block.invisible_count;
      block.mounds.push_back({centers[i].first, centers[i].second, sizes[i], false});
      continue;
    }
    block.mounds.push_back({centers[i].first, centers[i].second, sizes[i], true});
    const auto [x, y] = centers[i];
    const auto row = static_cast<std::int64_t>(y / ps);
    const auto col = static_cast<std::int64_t>(x / ps);
    if (row >= block.grid.rows || col >= block.grid.cols)
      continue; // only reachable under `drop`, where the remainder is untiled
    const auto patch = patch_at(block.grid, row, col);
    const Rect patch_rect{0.0, 0.0, static_cast<double>(patch.w),
                          static_cast<double>(patch.h)};
    const BoundingBox raw{x - static_cast<double>(patch.origin_x),
                          y - static_cast<double>(patch.origin_y), sizes[i],
                          sizes[i]};
    if (const auto clipped = clip_box(raw, patch_rect))
      block.visible.patches[{patch.row, patch.col}].push_back(*clipped);
  }

  // The synthetic user annotates ft_patch_count patches, picked uniformly
  // among patches that actually contain mounds (partial Fisher-Yates).
  std::vector<PatchKey> keys;
  keys.reserve(block.visible.patches.size());
  for (const auto& [key, boxes] : block.visible.patches)
    if (!boxes.empty()) keys.push_back(key);
  const std::size_t take =
      std::min<std::size_t>(static_cast<std::size_t>(spec.ft_patch_count),
                            keys.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(keys.size() - i));
    std::swap(keys[i], keys[j]);
    block.ft_sample.patches[keys[i]] = block.visible.patches.at(keys[i]);
  }
  return block;
}

std::vector<SyntheticBlockSpec> fleet_specs(const FleetSpec& fleet) {
  if (fleet.n_blocks < 1) throw ValidationError("fleet needs at least one block");
  if (fleet.area_min_ha > fleet.area_max_ha ||
      fleet.density_min_per_ha > fleet.density_max_per_ha ||
      fleet.invisible_min > fleet.invisible_max)
    throw ValidationError("fleet ranges must satisfy min <= max");
  if (fleet.gradient_limit < 0.0)
    throw ValidationError("gradient_limit must be >= 0");

  Rng rng(fleet.seed);
  std::vector<SyntheticBlockSpec> specs;
  specs.reserve(static_cast<std::size_t>(fleet.n_blocks));
  for (int i = 0; i < fleet.n_blocks; ++i) {
    SyntheticBlockSpec spec;
    char id[16];
    std::snprintf(id, sizeof(id), "S%02d", i + 1);
    spec.id = id;
    spec.area_ha = rng.uniform_in(fleet.area_min_ha, fleet.area_max_ha);
    if (fleet.pin_reference_areas && i == 0) spec.area_ha = 2.37;
    if (fleet.pin_reference_areas && i == 1) spec.area_ha = 3.09;
    spec.density_per_ha =
        rng.uniform_in(fleet.density_min_per_ha, fleet.density_max_per_ha);
    spec.invisible_fraction = rng.uniform_in(fleet.invisible_min, fleet.invisible_max);
    spec.gradient_x = rng.uniform_in(-fleet.gradient_limit, fleet.gradient_limit);
    spec.gradient_y = rng.uniform_in(-fleet.gradient_limit, fleet.gradient_limit);
    spec.aspect = rng.uniform_in(0.8, 1.3);
    spec.mound_size_mean_px = fleet.mound_size_mean_px;
    spec.mound_size_std_px = fleet.mound_size_std_px;
    spec.border_margin_px = fleet.border_margin_px;
    spec.gsd_cm_per_px = fleet.gsd_cm_per_px;
    spec.patch_size_px = fleet.patch_size_px;
    spec.ft_patch_count = fleet.ft_patch_count;
    spec.seed = derive_seed(fleet.seed, 0x51u * 1000003ULL + static_cast<std::uint64_t>(i));
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::vector<GeneratedBlock> generate_fleet(const FleetSpec& fleet) {
  std::vector<GeneratedBlock> blocks;
  const auto specs = fleet_specs(fleet);
  blocks.reserve(specs.size());
  for (const auto& spec : specs) blocks.push_back(generate_block(spec));
  return blocks;
}

} // namespace mound
