#pragma once

#include <stdexcept>

namespace recdet {

// Axis-aligned box in center form: (center x, center y, width, height).
// Width and height must be strictly positive.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;

  double xmin() const { return x - 0.5 * w; }
  double ymin() const { return y - 0.5 * h; }
  double xmax() const { return x + 0.5 * w; }
  double ymax() const { return y + 0.5 * h; }
  double area() const { return w * h; }

  static BBox from_corners(double xmin, double ymin, double xmax, double ymax);

  bool valid() const;
};

// Scale-invariant translation plus log-space width/height shift.
struct RegressionTarget {
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dh = 0.0;
};

struct ImageExtent {
  double width = 0.0;
  double height = 0.0;

  bool valid() const { return width > 0.0 && height > 0.0; }
};

// Intersection area over union area. Boxes touching only at an edge
// have IoU 0.
double iou(const BBox& a, const BBox& b);

// Offsets mapping `proposal` onto `target`:
//   dx = (target.x - proposal.x) / proposal.w
//   dy = (target.y - proposal.y) / proposal.h
//   dw = ln(target.w / proposal.w)
//   dh = ln(target.h / proposal.h)
RegressionTarget encode(const BBox& proposal, const BBox& target);

// Exact inverse of encode: decode(l, encode(l, l*)) == l*.
// Throws std::domain_error if exp(dw) or exp(dh) overflows.
BBox decode(const BBox& proposal, const RegressionTarget& offsets);

// Clamps the box's corner form to [0,width] x [0,height].
// Throws std::domain_error("empty after clip") if nothing remains.
BBox clip(const BBox& box, const ImageExtent& extent);

}  // namespace recdet
