#pragma once

#include <algorithm>
#include <optional>

namespace mound {

// Axis-aligned box in center/size form. Units are pixels of whatever frame
// the box lives in (patch-local or mosaic); callers track the frame.
struct BoundingBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double left() const { return cx - w / 2.0; }
  double right() const { return cx + w / 2.0; }
  double top() const { return cy - h / 2.0; }
  double bottom() const { return cy + h / 2.0; }
  double area() const { return w * h; }

  bool operator==(const BoundingBox&) const = default;
};

struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Intersect a box with a rectangle. Returns nullopt when nothing remains.
inline std::optional<BoundingBox> clip_box(const BoundingBox& b, const Rect& r) {
  const double x0 = std::max(b.left(), r.x0);
  const double y0 = std::max(b.top(), r.y0);
  const double x1 = std::min(b.right(), r.x1);
  const double y1 = std::min(b.bottom(), r.y1);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return BoundingBox{(x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0};
}

} // namespace mound
