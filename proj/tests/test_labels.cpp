#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "mound/errors.hpp"
#include "mound/labels.hpp"
#include "mound/raster.hpp"
#include "mound/rng.hpp"

#include "oracles.hpp"

using namespace mound;

namespace {

PatchRef square_patch(std::int64_t size) {
  PatchRef p;
  p.w = size;
  p.h = size;
  return p;
}

// Label files store normalized coordinates, so a pixel value survives a
// write/read cycle bit-exactly only when some representable normalized n
// denormalizes back onto it. Multiplying by the patch size steps through
// pixel space in jumps of up to two ulps, so occasionally no such n exists
// and the closest reachable value is one ulp away. The witness scan below
// distinguishes the two situations; +/-8 ulps is far wider than the writer's
// own search ever needs.
bool has_exact_witness(double value, double scale) {
  const double inf = std::numeric_limits<double>::infinity();
  double n = value / scale;
  for (int i = 0; i < 8; ++i) n = std::nextafter(n, -inf);
  for (int i = 0; i <= 16; ++i) {
    if (n * scale == value) return true;
    n = std::nextafter(n, inf);
  }
  return false;
}

void check_coordinate_roundtrip(double original, double back, double scale) {
  if (has_exact_witness(original, scale)) {
    CHECK(back == original);
  } else {
    // No representable normalized value reaches `original`; the neighbour is
    // the best any writer can do.
    CHECK(std::nextafter(original, back) == back);
  }
}

} // namespace

// ===========================================================================
// Parsing
// ===========================================================================

TEST_CASE("ground-truth line denormalizes against the patch size") {
  const auto boxes = parse_ground_truth("0 0.5 0.5 0.1 0.1\n", square_patch(416));
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].cx == doctest::Approx(208.0));
  CHECK(boxes[0].cy == doctest::Approx(208.0));
  CHECK(boxes[0].w == doctest::Approx(41.6));
  CHECK(boxes[0].h == doctest::Approx(41.6));
}

TEST_CASE("normalization uses the actual (possibly truncated) patch dims") {
  PatchRef edge;
  edge.w = 168; // right-edge patch of a 1000-px mosaic
  edge.h = 416;
  const auto boxes = parse_ground_truth("0 0.5 0.5 0.25 0.25", edge);
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].cx == doctest::Approx(84.0));
  CHECK(boxes[0].cy == doctest::Approx(208.0));
  CHECK(boxes[0].w == doctest::Approx(42.0));
  CHECK(boxes[0].h == doctest::Approx(104.0));
}

TEST_CASE("empty text parses to no boxes; blank lines and CRLF are tolerated") {
  CHECK(parse_ground_truth("", square_patch(416)).empty());
  CHECK(parse_ground_truth("\n\n", square_patch(416)).empty());
  const auto boxes =
      parse_ground_truth("0 0.5 0.5 0.1 0.1\r\n\r\n0 0.2 0.2 0.1 0.1\r\n",
                         square_patch(416));
  CHECK(boxes.size() == 2);
}

TEST_CASE("boxes may overhang the patch border and stay unclipped") {
  // cx + w/2 = 1.04 > 1 is legal; only the stored fields are range-checked.
  const auto boxes = parse_ground_truth("0 0.99 0.5 0.1 0.1", square_patch(416));
  REQUIRE(boxes.size() == 1);
  CHECK(boxes[0].right() > 416.0);
}

TEST_CASE("out-of-range values are validation errors") {
  CHECK_THROWS_AS(parse_ground_truth("0 1.5 0.5 0.1 0.1", square_patch(416)),
                  ValidationError);
  CHECK_THROWS_AS(parse_ground_truth("0 0.5 -0.1 0.1 0.1", square_patch(416)),
                  ValidationError);
  // Zero-size boxes carry no area to detect.
  CHECK_THROWS_AS(parse_ground_truth("0 0.5 0.5 0 0.1", square_patch(416)),
                  ValidationError);
  // Single known class.
  CHECK_THROWS_AS(parse_ground_truth("1 0.5 0.5 0.1 0.1", square_patch(416)),
                  ValidationError);
}

TEST_CASE("malformed records are parse errors carrying the line number") {
  try {
    parse_ground_truth("0 0.5 0.5 0.1 0.1\n0 not-a-number 0.5 0.1 0.1\n",
                       square_patch(416));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  // Wrong token count.
  CHECK_THROWS_AS(parse_ground_truth("0 0.5 0.5 0.1", square_patch(416)), ParseError);
  CHECK_THROWS_AS(parse_ground_truth("0 0.5 0.5 0.1 0.1 0.9", square_patch(416)),
                  ParseError);
}

TEST_CASE("detection lines carry a trailing confidence") {
  const auto dets =
      parse_detections("0 0.5 0.5 0.1 0.1 0.93\n0 0.2 0.2 0.05 0.05 0.4\n",
                       square_patch(416));
  REQUIRE(dets.size() == 2);
  CHECK(dets[0].confidence == doctest::Approx(0.93));
  CHECK(dets[0].box.cx == doctest::Approx(208.0));
  CHECK(dets[1].confidence == doctest::Approx(0.4));

  CHECK_THROWS_AS(parse_detections("0 0.5 0.5 0.1 0.1 1.5", square_patch(416)),
                  ValidationError);
  CHECK_THROWS_AS(parse_detections("0 0.5 0.5 0.1 0.1", square_patch(416)),
                  ParseError); // missing confidence
}

// ===========================================================================
// Serialization round trips
// ===========================================================================

TEST_CASE("format/parse lands on the nearest representable pixel box") {
  // Pixel coordinates rarely normalize to exactly representable fractions;
  // the writer picks a decimal that denormalizes back to the same bits
  // whenever one exists, and to the adjacent double when none does.
  Rng rng(20240817);
  for (const auto& patch : {square_patch(416), PatchRef{0, 0, 0, 0, 168, 416}}) {
    std::vector<BoundingBox> boxes;
    for (int i = 0; i < 200; ++i) {
      BoundingBox b;
      b.w = rng.uniform_in(0.5, static_cast<double>(patch.w));
      b.h = rng.uniform_in(0.5, static_cast<double>(patch.h));
      b.cx = rng.uniform_in(0.0, static_cast<double>(patch.w));
      b.cy = rng.uniform_in(0.0, static_cast<double>(patch.h));
      boxes.push_back(b);
    }
    const auto text = format_ground_truth(boxes, patch);
    const auto back = parse_ground_truth(text, patch);
    REQUIRE(back.size() == boxes.size());
    const auto sw = static_cast<double>(patch.w);
    const auto sh = static_cast<double>(patch.h);
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      CAPTURE(i);
      check_coordinate_roundtrip(boxes[i].cx, back[i].cx, sw);
      check_coordinate_roundtrip(boxes[i].cy, back[i].cy, sh);
      check_coordinate_roundtrip(boxes[i].w, back[i].w, sw);
      check_coordinate_roundtrip(boxes[i].h, back[i].h, sh);
    }

    // A parsed box is a product of a written normalized value, so it always
    // has an exact witness: from the second cycle on the trip is identity.
    const auto back2 = parse_ground_truth(format_ground_truth(back, patch), patch);
    REQUIRE(back2.size() == back.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back2[i] == back[i]);
  }
}

TEST_CASE("detection serialization keeps confidence bit-exact") {
  const auto patch = square_patch(416);
  Rng rng(7);
  std::vector<DetectionRecord> dets;
  for (int i = 0; i < 100; ++i) {
    DetectionRecord d;
    d.box = {rng.uniform_in(1.0, 415.0), rng.uniform_in(1.0, 415.0),
             rng.uniform_in(0.5, 50.0), rng.uniform_in(0.5, 50.0)};
    d.confidence = rng.uniform();
    dets.push_back(d);
  }
  const auto back = parse_detections(format_detections(dets, patch), patch);
  REQUIRE(back.size() == dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    CAPTURE(i);
    check_coordinate_roundtrip(dets[i].box.cx, back[i].box.cx, 416.0);
    check_coordinate_roundtrip(dets[i].box.cy, back[i].box.cy, 416.0);
    check_coordinate_roundtrip(dets[i].box.w, back[i].box.w, 416.0);
    check_coordinate_roundtrip(dets[i].box.h, back[i].box.h, 416.0);
    // Confidence is stored unscaled, so it must always survive verbatim.
    CHECK(back[i].confidence == dets[i].confidence);
  }

  const auto back2 = parse_detections(format_detections(back, patch), patch);
  REQUIRE(back2.size() == back.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back2[i].box == back[i].box);
    CHECK(back2[i].confidence == back[i].confidence);
  }
}

TEST_CASE("formatting rejects boxes that cannot normalize into [0,1]") {
  const auto patch = square_patch(416);
  CHECK_THROWS_AS(format_ground_truth({BoundingBox{500.0, 10.0, 5.0, 5.0}}, patch),
                  ValidationError);
}

// ===========================================================================
// Files and directories
// ===========================================================================

TEST_CASE("label file names follow {block}_{row}_{col}.txt") {
  CHECK(label_filename("T7", 3, 12) == "T7_3_12.txt");
  CHECK(label_filename("S01", 0, 0) == "S01_0_0.txt");
}

TEST_CASE("annotation directory round trip") {
  oracle::TempDir tmp;
  OrthomosaicMeta meta;
  meta.id = "B1";
  meta.width_px = 832;
  meta.height_px = 832;
  meta.area_ha = 1.0;
  const auto grid = build_grid(meta, 416, EdgePolicy::pad);

  AnnotationSet set;
  set.block_id = "B1";
  set.patches[{0, 0}] = {BoundingBox{10.0, 10.0, 8.0, 8.0},
                         BoundingBox{100.0, 50.0, 16.0, 12.0}};
  set.patches[{1, 1}] = {BoundingBox{208.0, 208.0, 41.6, 41.6}};

  save_annotation_dir(set, grid, tmp.path());
  const auto back = load_annotation_dir(tmp.path(), "B1", grid);
  CHECK(back.block_id == "B1");
  REQUIRE(back.patches.size() == 2);
  CHECK(back.patches.at({0, 0}) == set.patches.at({0, 0}));
  CHECK(back.patches.at({1, 1}) == set.patches.at({1, 1}));
  CHECK(back.total_count() == 3);

  // Patches without a file have no entry; an explicitly empty file does.
  std::ofstream(tmp.path() / label_filename("B1", 0, 1)).close();
  const auto with_empty = load_annotation_dir(tmp.path(), "B1", grid);
  REQUIRE(with_empty.patches.count({0, 1}) == 1);
  CHECK(with_empty.patches.at({0, 1}).empty());
  CHECK(with_empty.patches.count({1, 0}) == 0);
}

TEST_CASE("total_count sums across patches") {
  AnnotationSet set;
  CHECK(set.total_count() == 0);
  set.patches[{0, 0}] = {BoundingBox{1, 1, 1, 1}, BoundingBox{2, 2, 1, 1}};
  set.patches[{5, 3}] = {BoundingBox{3, 3, 1, 1}};
  CHECK(set.total_count() == 3);
}

// ===========================================================================
// Frame changes
// ===========================================================================

TEST_CASE("patch-local boxes shift into the mosaic frame") {
  OrthomosaicMeta meta;
  meta.id = "B";
  meta.width_px = 832;
  meta.height_px = 832;
  meta.area_ha = 1.0;
  const auto grid = build_grid(meta, 416, EdgePolicy::pad);

  // Patch (row 0, col 1) starts at mosaic x = 416.
  const auto shifted =
      to_mosaic_frame(BoundingBox{10.0, 10.0, 4.0, 4.0}, patch_at(grid, 0, 1));
  CHECK(shifted.cx == doctest::Approx(426.0));
  CHECK(shifted.cy == doctest::Approx(10.0));
  CHECK(shifted.w == doctest::Approx(4.0));

  AnnotationSet set;
  set.block_id = "B";
  set.patches[{0, 1}] = {BoundingBox{10.0, 10.0, 4.0, 4.0}};
  set.patches[{1, 0}] = {BoundingBox{5.0, 6.0, 2.0, 2.0}};
  const auto flat = to_mosaic_frame(set, grid);
  REQUIRE(flat.size() == 2);
  CHECK(flat[0].cx == doctest::Approx(426.0)); // row-major patch order
  CHECK(flat[1].cy == doctest::Approx(422.0));
}
