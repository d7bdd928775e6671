#include <doctest.h>

#include <cmath>
#include <vector>

#include "mound/errors.hpp"
#include "mound/metrics.hpp"
#include "mound/rng.hpp"

#include "oracles.hpp"

using namespace mound;

namespace {

DetectionRecord det(double cx, double cy, double w, double h, double conf) {
  return DetectionRecord{BoundingBox{cx, cy, w, h}, conf, 0};
}

// Boxes jittered around a loose grid, some matching, some stray — a generator
// for small random matching instances.
std::vector<BoundingBox> random_gts(Rng& rng, std::size_t n) {
  std::vector<BoundingBox> gts;
  for (std::size_t i = 0; i < n; ++i)
    gts.push_back({rng.uniform_in(20.0, 380.0), rng.uniform_in(20.0, 380.0),
                   rng.uniform_in(10.0, 30.0), rng.uniform_in(10.0, 30.0)});
  return gts;
}

std::vector<DetectionRecord> random_dets(Rng& rng,
                                         const std::vector<BoundingBox>& gts,
                                         std::size_t n) {
  std::vector<DetectionRecord> dets;
  for (std::size_t i = 0; i < n; ++i) {
    if (!gts.empty() && rng.bernoulli(0.6)) {
      // Perturb a true box so IoU lands on both sides of 0.5.
      const auto& g = gts[rng.uniform_index(gts.size())];
      dets.push_back(det(g.cx + rng.uniform_in(-10.0, 10.0),
                         g.cy + rng.uniform_in(-10.0, 10.0),
                         g.w * rng.uniform_in(0.7, 1.3),
                         g.h * rng.uniform_in(0.7, 1.3), rng.uniform()));
    } else {
      dets.push_back(det(rng.uniform_in(20.0, 380.0), rng.uniform_in(20.0, 380.0),
                         rng.uniform_in(10.0, 30.0), rng.uniform_in(10.0, 30.0),
                         rng.uniform()));
    }
  }
  return dets;
}

} // namespace

// ===========================================================================
// IoU
// ===========================================================================

TEST_CASE("IoU basics") {
  const BoundingBox a{50.0, 50.0, 20.0, 20.0};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(iou(a, BoundingBox{200.0, 200.0, 20.0, 20.0}) == 0.0);
  // Half-overlapping congruent boxes: inter 200, union 600.
  const BoundingBox shifted{60.0, 50.0, 20.0, 20.0};
  CHECK(iou(a, shifted) == doctest::Approx(200.0 / 600.0));
}

// ===========================================================================
// Greedy matching
// ===========================================================================

TEST_CASE("identical boxes match one-to-one") {
  const std::vector<BoundingBox> gts{{50, 50, 20, 20}, {150, 150, 20, 20}};
  const std::vector<DetectionRecord> dets{det(50, 50, 20, 20, 0.9),
                                          det(150, 150, 20, 20, 0.8)};
  const auto m = match_detections(dets, gts);
  CHECK(m.tp == 2);
  CHECK(m.fp == 0);
  CHECK(m.fn == 0);
  REQUIRE(m.pairs.size() == 2);
  CHECK(m.pairs[0].iou == doctest::Approx(1.0));
}

TEST_CASE("disjoint boxes never match") {
  const std::vector<BoundingBox> gts{{50, 50, 20, 20}};
  const std::vector<DetectionRecord> dets{det(300, 300, 20, 20, 0.9)};
  const auto m = match_detections(dets, gts);
  CHECK(m.tp == 0);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
}

TEST_CASE("one ground truth absorbs only the strongest of two detections") {
  const std::vector<BoundingBox> gts{{50, 50, 20, 20}};
  const std::vector<DetectionRecord> dets{det(51, 50, 20, 20, 0.6),
                                          det(50, 50, 20, 20, 0.95)};
  const auto m = match_detections(dets, gts);
  CHECK(m.tp == 1);
  CHECK(m.fp == 1);
  CHECK(m.fn == 0);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].det_index == 1); // the 0.95 one, visited first
}

TEST_CASE("confidence ties break by original detection index") {
  const std::vector<BoundingBox> gts{{50, 50, 20, 20}};
  const std::vector<DetectionRecord> dets{det(52, 50, 20, 20, 0.7),
                                          det(50, 50, 20, 20, 0.7)};
  const auto m = match_detections(dets, gts);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].det_index == 0); // stable order, not best IoU
}

TEST_CASE("IoU ties go to the lowest ground-truth index") {
  // Two identical ground-truth boxes; the detection overlaps both equally.
  const std::vector<BoundingBox> gts{{50, 50, 20, 20}, {50, 50, 20, 20}};
  const std::vector<DetectionRecord> dets{det(50, 50, 20, 20, 0.9)};
  const auto m = match_detections(dets, gts);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].gt_index == 0);
}

TEST_CASE("matching threshold is inclusive and validated") {
  const std::vector<BoundingBox> gts{{50, 50, 20, 20}};
  // IoU exactly 1/3: congruent boxes offset by half their width.
  const std::vector<DetectionRecord> dets{det(60, 50, 20, 20, 0.9)};
  CHECK(match_detections(dets, gts, 1.0 / 3.0).tp == 1); // >= keeps it
  CHECK(match_detections(dets, gts, 0.34).tp == 0);
  CHECK_THROWS_AS(match_detections(dets, gts, 0.0), ValidationError);
  CHECK_THROWS_AS(match_detections(dets, gts, 1.1), ValidationError);
}

TEST_CASE("clip frame affects only the IoU computation") {
  // Both boxes overhang the patch's right edge; clipped to the frame they
  // coincide, unclipped they differ.
  const std::vector<BoundingBox> gts{{410.0, 50.0, 40.0, 20.0}};
  const std::vector<DetectionRecord> dets{det(414.0, 50.0, 48.0, 20.0, 0.9)};
  const Rect frame{0.0, 0.0, 416.0, 416.0};

  const auto unclipped = match_detections(dets, gts, 0.9);
  CHECK(unclipped.tp == 0);
  const auto clipped = match_detections(dets, gts, 0.9, frame);
  CHECK(clipped.tp == 1);
}

TEST_CASE("greedy matching never beats the exhaustive optimum") {
  Rng rng(2025);
  for (int trial = 0; trial < 200; ++trial) {
    const auto gts = random_gts(rng, rng.uniform_index(4) + 1);
    const auto dets = random_dets(rng, gts, rng.uniform_index(6));
    const auto m = match_detections(dets, gts, 0.5);
    const int optimal = oracle::max_matching_tp(dets, gts, 0.5);
    CHECK(m.tp <= optimal);
    CHECK(m.tp + m.fp == static_cast<std::int64_t>(dets.size()));
    CHECK(m.tp + m.fn == static_cast<std::int64_t>(gts.size()));
  }
}

// ===========================================================================
// Precision / recall / F1
// ===========================================================================

TEST_CASE("precision, recall, F1 from a match result") {
  MatchResult m;
  m.tp = 24;
  m.fp = 0;
  m.fn = 0;
  auto s = precision_recall_f1(m);
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 1.0);
  CHECK(s.f1 == 1.0);

  m.tp = 6;
  m.fp = 2;
  m.fn = 4; // P = 0.75, R = 0.6
  s = precision_recall_f1(m);
  CHECK(s.precision == doctest::Approx(0.75));
  CHECK(s.recall == doctest::Approx(0.6));
  CHECK(s.f1 == doctest::Approx(2.0 * 0.75 * 0.6 / 1.35));
}

TEST_CASE("empty denominators yield zero, not NaN") {
  MatchResult nothing; // no detections, no ground truth
  const auto s = precision_recall_f1(nothing);
  CHECK(s.precision == 0.0);
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);
  CHECK(f1_score(0.0, 0.0) == 0.0);
}

TEST_CASE("F1 of a printed precision/recall pair") {
  CHECK(f1_score(0.379, 0.625) == doctest::Approx(0.472).epsilon(2e-3));
  CHECK(f1_score(0.5, 0.5) == doctest::Approx(0.5));
}

// ===========================================================================
// PR curve and average precision
// ===========================================================================

TEST_CASE("pr curve: cumulative points and monotone envelope") {
  const std::vector<BoundingBox> gts{{50, 50, 20, 20}, {150, 150, 20, 20}};
  const std::vector<DetectionRecord> dets{
      det(50, 50, 20, 20, 0.9),    // TP
      det(300, 300, 20, 20, 0.8),  // FP
      det(150, 150, 20, 20, 0.7)}; // TP
  const auto curve = pr_curve(dets, gts);
  REQUIRE(curve.recall.size() == 3);
  CHECK(curve.recall[0] == doctest::Approx(0.5));
  CHECK(curve.precision[0] == doctest::Approx(1.0));
  CHECK(curve.recall[1] == doctest::Approx(0.5));
  CHECK(curve.precision[1] == doctest::Approx(0.5));
  CHECK(curve.recall[2] == doctest::Approx(1.0));
  CHECK(curve.precision[2] == doctest::Approx(2.0 / 3.0));
  // Envelope is the running max from the right.
  CHECK(curve.envelope[0] == doctest::Approx(1.0));
  CHECK(curve.envelope[1] == doctest::Approx(2.0 / 3.0));
  CHECK(curve.envelope[2] == doctest::Approx(2.0 / 3.0));
  for (std::size_t i = 1; i < curve.envelope.size(); ++i)
    CHECK(curve.envelope[i] <= curve.envelope[i - 1] + 1e-15);
}

TEST_CASE("AP is 1 when every truth box is found first") {
  std::vector<BoundingBox> gts{{50, 50, 20, 20}, {150, 150, 20, 20},
                               {250, 250, 20, 20}};
  std::vector<DetectionRecord> dets;
  double conf = 0.9;
  for (const auto& g : gts) dets.push_back(det(g.cx, g.cy, g.w, g.h, conf -= 0.1));
  CHECK(average_precision(dets, gts) == doctest::Approx(1.0));
}

TEST_CASE("one perfect detection over two truths halves the AP") {
  const std::vector<BoundingBox> gts{{50, 50, 20, 20}, {150, 150, 20, 20}};
  const std::vector<DetectionRecord> dets{det(50, 50, 20, 20, 0.9)};
  CHECK(average_precision(dets, gts) == doctest::Approx(0.5));
}

TEST_CASE("AP contract: empty inputs") {
  const std::vector<BoundingBox> gts{{50, 50, 20, 20}};
  CHECK(average_precision({}, gts) == 0.0);
  CHECK_THROWS_AS(average_precision({det(1, 1, 1, 1, 0.5)}, {}), ValidationError);
}

TEST_CASE("AP equals the brute-force envelope integral on random instances") {
  Rng rng(31337);
  for (int trial = 0; trial < 100; ++trial) {
    const auto gts = random_gts(rng, rng.uniform_index(4) + 1);
    const auto dets = random_dets(rng, gts, rng.uniform_index(6) + 1);
    const double lib = average_precision(dets, gts, 0.5);
    const double ref = oracle::oracle_interpolated_ap(dets, gts, 0.5);
    CHECK(lib == doctest::Approx(ref).epsilon(1e-12));
  }
}

// ===========================================================================
// Relative counting precision
// ===========================================================================

TEST_CASE("relative precision on reference count pairs") {
  CHECK(relative_precision(7713.0, 8900.0) ==
        doctest::Approx(1.0 - 1187.0 / 8900.0).epsilon(1e-14));
  CHECK(relative_precision(80989.0, 84550.0) ==
        doctest::Approx(0.957883).epsilon(1e-6));
  CHECK(relative_precision(100.0, 100.0) == 1.0);
}

TEST_CASE("relative precision treats over- and under-count symmetrically") {
  CHECK(relative_precision(110.0, 100.0) == doctest::Approx(0.9));
  CHECK(relative_precision(90.0, 100.0) == doctest::Approx(0.9));
}

TEST_CASE("relative precision can go negative and rejects non-positive truth") {
  CHECK(relative_precision(250.0, 100.0) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(relative_precision(10.0, 0.0), ValidationError);
  CHECK_THROWS_AS(relative_precision(10.0, -5.0), ValidationError);
}
