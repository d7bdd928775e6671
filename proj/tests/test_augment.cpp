#include <doctest.h>

#include <cmath>
#include <vector>

#include "mound/augment.hpp"
#include "mound/errors.hpp"
#include "mound/rng.hpp"

using namespace mound;

namespace {

constexpr double kPi = 3.14159265358979323846;

PatchRef patch416() {
  PatchRef p;
  p.w = 416;
  p.h = 416;
  return p;
}

} // namespace

// ===========================================================================
// Elementary transforms
// ===========================================================================

TEST_CASE("resize scales both extents about a fixed center") {
  const BoundingBox src{200.0, 150.0, 100.0, 50.0};

  const auto grown = resize_box(src, 1.2);
  CHECK(grown.w == doctest::Approx(120.0));
  CHECK(grown.h == doctest::Approx(60.0));
  CHECK(grown.cx == src.cx);
  CHECK(grown.cy == src.cy);

  const auto shrunk = resize_box(BoundingBox{10.0, 10.0, 40.0, 40.0}, 0.8);
  CHECK(shrunk.w == doctest::Approx(32.0));
  CHECK(shrunk.h == doctest::Approx(32.0));

  // Aspect ratio is invariant for any factor.
  CHECK(grown.w / grown.h == doctest::Approx(src.w / src.h));

  CHECK_THROWS_AS(resize_box(src, 0.0), ValidationError);
  CHECK_THROWS_AS(resize_box(src, -1.0), ValidationError);
}

TEST_CASE("resize at factor 1 is the identity") {
  const BoundingBox src{33.25, 47.5, 12.125, 9.75};
  CHECK(resize_box(src, 1.0) == src);
}

TEST_CASE("translate displaces the center by length l at angle alpha") {
  const BoundingBox src{50.0, 50.0, 20.0, 20.0};

  const auto right = translate_box(src, 10.0, 0.0);
  CHECK(right.cx == doctest::Approx(60.0));
  CHECK(right.cy == doctest::Approx(50.0));
  CHECK(right.w == src.w);
  CHECK(right.h == src.h);

  // Angles follow image axes: y grows downward with alpha.
  const auto down = translate_box(src, 10.0, kPi / 2.0);
  CHECK(down.cx == doctest::Approx(50.0));
  CHECK(down.cy == doctest::Approx(60.0));

  CHECK_THROWS_AS(translate_box(src, -1.0, 0.0), ValidationError);
}

TEST_CASE("translate at length 0 is the identity") {
  const BoundingBox src{50.0, 50.0, 20.0, 20.0};
  for (const double alpha : {0.0, 1.0, kPi, 5.0})
    CHECK(translate_box(src, 0.0, alpha) == src);
}

TEST_CASE("translate preserves displacement magnitude at any angle") {
  const BoundingBox src{200.0, 200.0, 16.0, 16.0};
  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    const double l = rng.uniform_in(0.0, 25.0);
    const double alpha = rng.uniform_in(0.0, 2.0 * kPi);
    const auto moved = translate_box(src, l, alpha);
    const double dx = moved.cx - src.cx;
    const double dy = moved.cy - src.cy;
    CHECK(std::hypot(dx, dy) == doctest::Approx(l).epsilon(1e-12));
    CHECK(moved.w == src.w);
    CHECK(moved.h == src.h);
  }
}

// ===========================================================================
// Config validation
// ===========================================================================

TEST_CASE("augmentation config rejects empty or inverted ranges") {
  AugmentationConfig cfg;
  CHECK_NOTHROW(validate(cfg));

  cfg.z_min = 1.3; // > z_max
  CHECK_THROWS_AS(validate(cfg), ValidationError);

  cfg = {};
  cfg.z_min = 0.0; // zero-size boxes
  CHECK_THROWS_AS(validate(cfg), ValidationError);

  cfg = {};
  cfg.l_min = -2.0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);

  cfg = {};
  cfg.boxes_per_source = 0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
}

// ===========================================================================
// Per-patch augmentation
// ===========================================================================

TEST_CASE("augment_patch yields boxes_per_source variants per box, in bounds") {
  AugmentationConfig cfg;
  cfg.boxes_per_source = 3;
  cfg.seed = 42;

  std::vector<BoundingBox> sources;
  Rng rng(5);
  for (int i = 0; i < 100; ++i)
    sources.push_back({rng.uniform_in(20.0, 396.0), rng.uniform_in(20.0, 396.0),
                       rng.uniform_in(8.0, 24.0), rng.uniform_in(8.0, 24.0)});

  const auto result = augment_patch(sources, cfg, patch416());
  CHECK(result.boxes.size() + static_cast<std::size_t>(result.discarded) ==
        sources.size() * 3);
  // Interior sources under mild transforms rarely clip away entirely.
  CHECK(result.boxes.size() >= sources.size());
  for (const auto& b : result.boxes) {
    CHECK(b.left() >= 0.0);
    CHECK(b.top() >= 0.0);
    CHECK(b.right() <= 416.0);
    CHECK(b.bottom() <= 416.0);
    CHECK(b.w > 0.0);
    CHECK(b.h > 0.0);
  }
}

TEST_CASE("augment_patch is deterministic and keyed to the patch coordinates") {
  AugmentationConfig cfg;
  cfg.boxes_per_source = 2;
  cfg.seed = 1234;
  const std::vector<BoundingBox> sources{{100.0, 100.0, 20.0, 20.0},
                                         {300.0, 250.0, 16.0, 12.0}};

  PatchRef a = patch416();
  a.row = 1;
  a.col = 2;
  const auto first = augment_patch(sources, cfg, a);
  const auto again = augment_patch(sources, cfg, a);
  REQUIRE(first.boxes.size() == again.boxes.size());
  for (std::size_t i = 0; i < first.boxes.size(); ++i)
    CHECK(first.boxes[i] == again.boxes[i]); // bit-exact replay

  // A different patch gets its own substream.
  PatchRef b = a;
  b.col = 3;
  const auto other = augment_patch(sources, cfg, b);
  bool identical = other.boxes.size() == first.boxes.size();
  if (identical)
    for (std::size_t i = 0; i < first.boxes.size(); ++i)
      identical = identical && first.boxes[i] == other.boxes[i];
  CHECK_FALSE(identical);

  // A different seed reshuffles the same patch.
  AugmentationConfig reseeded = cfg;
  reseeded.seed = 1235;
  const auto reseeded_out = augment_patch(sources, reseeded, a);
  bool seed_identical = reseeded_out.boxes.size() == first.boxes.size();
  if (seed_identical)
    for (std::size_t i = 0; i < first.boxes.size(); ++i)
      seed_identical = seed_identical && first.boxes[i] == reseeded_out.boxes[i];
  CHECK_FALSE(seed_identical);
}

TEST_CASE("variants clipped below a quarter of their area are discarded") {
  AugmentationConfig cfg;
  // Both transform branches must land below the quarter-area threshold: a
  // 50x zoom of the centered box clips to a sliver of its area, and a 500-px
  // displacement leaves the 416-px patch entirely.
  cfg.z_min = cfg.z_max = 50.0;
  cfg.l_min = cfg.l_max = 500.0;
  cfg.boxes_per_source = 8;
  cfg.seed = 9;

  const auto result =
      augment_patch({BoundingBox{208.0, 208.0, 30.0, 30.0}}, cfg, patch416());
  CHECK(result.boxes.empty());
  CHECK(result.discarded == 8);
}

TEST_CASE("borderline clipping keeps variants at or above the area threshold") {
  AugmentationConfig cfg;
  cfg.z_min = cfg.z_max = 1.0;
  cfg.l_min = cfg.l_max = 15.0; // pushes half the box out at most
  cfg.boxes_per_source = 16;
  cfg.seed = 77;

  // Box hugging the left border: some displacements clip it, but never below
  // 25% (worst case keeps half the width in view).
  const auto result =
      augment_patch({BoundingBox{15.0, 208.0, 30.0, 30.0}}, cfg, patch416());
  CHECK(result.boxes.size() + static_cast<std::size_t>(result.discarded) == 16);
  for (const auto& b : result.boxes) {
    CHECK(b.left() >= 0.0);
    CHECK(b.area() >= 0.25 * 30.0 * 30.0 - 1e-9);
  }
}

TEST_CASE("no sources, no output") {
  AugmentationConfig cfg;
  const auto result = augment_patch({}, cfg, patch416());
  CHECK(result.boxes.empty());
  CHECK(result.discarded == 0);
}
