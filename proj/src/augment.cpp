#include "mound/augment.hpp"

#include <cmath>

#include "mound/errors.hpp"
#include "mound/rng.hpp"

namespace mound {

void validate(const AugmentationConfig& cfg) {
  if (!(cfg.z_min > 0.0) || cfg.z_max < cfg.z_min)
    throw ValidationError("size factor range must satisfy 0 < z_min <= z_max");
  if (cfg.l_min < 0.0 || cfg.l_max < cfg.l_min)
    throw ValidationError("displacement range must satisfy 0 <= l_min <= l_max");
  if (cfg.alpha_min < 0.0 || cfg.alpha_max < cfg.alpha_min ||
      cfg.alpha_max > 6.283185307179586476925287 + 1e-12)
    throw ValidationError("angle range must satisfy 0 <= alpha_min <= alpha_max <= 2*pi");
  if (cfg.boxes_per_source < 1)
    throw ValidationError("boxes_per_source must be >= 1");
}

BoundingBox resize_box(const BoundingBox& box, double z) {
  if (!(z > 0.0)) throw ValidationError("size factor must be > 0");
  return BoundingBox{box.cx, box.cy, box.w * z, box.h * z};
}

BoundingBox translate_box(const BoundingBox& box, double l, double alpha) {
  if (l < 0.0) throw ValidationError("displacement length must be >= 0");
  return BoundingBox{box.cx + l * std::cos(alpha), box.cy + l * std::sin(alpha),
                     box.w, box.h};
}

AugmentResult augment_patch(const std::vector<BoundingBox>& sources,
                            const AugmentationConfig& cfg, const PatchRef& patch) {
  validate(cfg);
  Rng rng(derive_seed(cfg.seed, patch_stream_key(static_cast<int>(patch.row),
                                                 static_cast<int>(patch.col))));
  const Rect patch_rect{0.0, 0.0, static_cast<double>(patch.w),
                        static_cast<double>(patch.h)};
  AugmentResult result;
  result.boxes.reserve(sources.size() * static_cast<std::size_t>(cfg.boxes_per_source));
  for (const auto& src : sources) {
    for (int k = 0; k < cfg.boxes_per_source; ++k) {
      BoundingBox candidate;
      if (rng.uniform() < 0.5) {
        candidate = resize_box(src, rng.uniform_in(cfg.z_min, cfg.z_max));
      } else {
        const double l = rng.uniform_in(cfg.l_min, cfg.l_max);
        const double alpha = rng.uniform_in(cfg.alpha_min, cfg.alpha_max);
        candidate = translate_box(src, l, alpha);
      }
      const auto clipped = clip_box(candidate, patch_rect);
      if (!clipped || clipped->area() < 0.25 * candidate.area()) {
        ++result.discarded;
        continue;
      }
      result.boxes.push_back(*clipped);
    }
  }
  return result;
}

} // namespace mound
