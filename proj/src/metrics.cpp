#include "mound/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mound/errors.hpp"

namespace mound {
namespace {

std::vector<std::size_t> by_descending_confidence(
    const std::vector<DetectionRecord>& detections) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  return order;
}

double pair_iou(const BoundingBox& a, const BoundingBox& b,
                const std::optional<Rect>& clip_frame) {
  if (!clip_frame) return iou(a, b);
  const auto ca = clip_box(a, *clip_frame);
  const auto cb = clip_box(b, *clip_frame);
  if (!ca || !cb) return 0.0;
  return iou(*ca, *cb);
}

} // namespace

MatchResult match_detections(const std::vector<DetectionRecord>& detections,
                             const std::vector<BoundingBox>& ground_truth,
                             double iou_threshold,
                             const std::optional<Rect>& clip_frame) {
  if (iou_threshold <= 0.0 || iou_threshold > 1.0)
    throw ValidationError("IoU threshold must lie in (0,1]");
  MatchResult result;
  std::vector<bool> gt_taken(ground_truth.size(), false);
  for (std::size_t det_idx : by_descending_confidence(detections)) {
    double best_iou = 0.0;
    std::size_t best_gt = ground_truth.size();
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (gt_taken[g]) continue;
      const double v = pair_iou(detections[det_idx].box, ground_truth[g], clip_frame);
      if (v > best_iou) {
        best_iou = v;
        best_gt = g; // strict > keeps the lowest GT index on ties
      }
    }
    if (best_gt < ground_truth.size() && best_iou >= iou_threshold) {
      gt_taken[best_gt] = true;
      result.pairs.push_back({det_idx, best_gt, best_iou});
      ++result.tp;
    } else {
      ++result.fp;
    }
  }
  result.fn = static_cast<std::int64_t>(ground_truth.size()) - result.tp;
  return result;
}

PrfScores precision_recall_f1(const MatchResult& m) {
  PrfScores s;
  const double tp = static_cast<double>(m.tp);
  s.precision = m.tp + m.fp > 0 ? tp / static_cast<double>(m.tp + m.fp) : 0.0;
  s.recall = m.tp + m.fn > 0 ? tp / static_cast<double>(m.tp + m.fn) : 0.0;
  s.f1 = 2 * m.tp + m.fp + m.fn > 0
             ? 2.0 * tp / static_cast<double>(2 * m.tp + m.fp + m.fn)
             : 0.0;
  return s;
}

double f1_score(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

PrCurve pr_curve(const std::vector<DetectionRecord>& detections,
                 const std::vector<BoundingBox>& ground_truth,
                 double iou_threshold) {
  if (ground_truth.empty())
    throw ValidationError("PR curve is undefined without ground truth");
  if (iou_threshold <= 0.0 || iou_threshold > 1.0)
    throw ValidationError("IoU threshold must lie in (0,1]");

  PrCurve curve;
  curve.gt_count = static_cast<std::int64_t>(ground_truth.size());
  std::vector<bool> gt_taken(ground_truth.size(), false);
  std::int64_t tp = 0;
  std::int64_t seen = 0;
  for (std::size_t det_idx : by_descending_confidence(detections)) {
    ++seen;
    double best_iou = 0.0;
    std::size_t best_gt = ground_truth.size();
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (gt_taken[g]) continue;
      const double v = iou(detections[det_idx].box, ground_truth[g]);
      if (v > best_iou) {
        best_iou = v;
        best_gt = g;
      }
    }
    if (best_gt < ground_truth.size() && best_iou >= iou_threshold) {
      gt_taken[best_gt] = true;
      ++tp;
    }
    curve.recall.push_back(static_cast<double>(tp) /
                           static_cast<double>(curve.gt_count));
    curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(seen));
  }
  curve.envelope.resize(curve.precision.size());
  double running = 0.0;
  for (std::size_t i = curve.precision.size(); i-- > 0;) {
    running = std::max(running, curve.precision[i]);
    curve.envelope[i] = running;
  }
  return curve;
}

double average_precision(const std::vector<DetectionRecord>& detections,
                         const std::vector<BoundingBox>& ground_truth,
                         double iou_threshold) {
  const auto curve = pr_curve(detections, ground_truth, iou_threshold);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < curve.recall.size(); ++i) {
    ap += (curve.recall[i] - prev_recall) * curve.envelope[i];
    prev_recall = curve.recall[i];
  }
  return ap;
}

double relative_precision(double predicted, double actual) {
  if (!(actual > 0.0))
    throw ValidationError("relative precision requires a positive actual count");
  return 1.0 - std::fabs(predicted - actual) / actual;
}

} // namespace mound
