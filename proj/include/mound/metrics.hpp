#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mound/geometry.hpp"
#include "mound/labels.hpp"

namespace mound {

struct MatchPair {
  std::size_t det_index = 0;
  std::size_t gt_index = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::vector<MatchPair> pairs;
};

// Greedy one-to-one matching: detections are visited in descending
// confidence (ties by original index); each takes the unmatched ground-truth
// box of highest IoU, provided IoU >= iou_threshold (IoU ties by lowest GT
// index). When clip_frame is given, both boxes are clipped to it before the
// IoU is computed; stored boxes stay untouched.
MatchResult match_detections(const std::vector<DetectionRecord>& detections,
                             const std::vector<BoundingBox>& ground_truth,
                             double iou_threshold = 0.5,
                             const std::optional<Rect>& clip_frame = std::nullopt);

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Empty denominators yield 0 by convention, so metrics stay defined on
// blocks with no detections or no ground truth.
PrfScores precision_recall_f1(const MatchResult& m);
double f1_score(double precision, double recall);

// One point per detection in the confidence sweep, plus the interpolated
// (monotone, from the right) precision envelope.
struct PrCurve {
  std::vector<double> recall;             // cumulative R_k
  std::vector<double> precision;          // cumulative P_k
  std::vector<double> envelope;           // max precision at recall >= R_k
  std::int64_t gt_count = 0;
};

PrCurve pr_curve(const std::vector<DetectionRecord>& detections,
                 const std::vector<BoundingBox>& ground_truth,
                 double iou_threshold = 0.5);

// All-point interpolated average precision: sum over recall increments of
// the interpolated precision. Throws ValidationError when ground_truth is
// empty; returns 0 when detections are.
double average_precision(const std::vector<DetectionRecord>& detections,
                         const std::vector<BoundingBox>& ground_truth,
                         double iou_threshold = 0.5);

// Count agreement: 1 - |predicted - actual| / actual. Negative when the
// error exceeds the actual count; throws ValidationError when actual <= 0.
double relative_precision(double predicted, double actual);

} // namespace mound
