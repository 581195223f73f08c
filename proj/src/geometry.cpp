#include "recdet/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace recdet {

BBox BBox::from_corners(double xmin, double ymin, double xmax, double ymax) {
  if (!(xmin < xmax) || !(ymin < ymax)) {
    throw std::invalid_argument("degenerate box");
  }
  return BBox{0.5 * (xmin + xmax), 0.5 * (ymin + ymax), xmax - xmin,
              ymax - ymin};
}

bool BBox::valid() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) &&
         std::isfinite(h) && w > 0.0 && h > 0.0;
}

double iou(const BBox& a, const BBox& b) {
  const double ix =
      std::min(a.xmax(), b.xmax()) - std::max(a.xmin(), b.xmin());
  const double iy =
      std::min(a.ymax(), b.ymax()) - std::max(a.ymin(), b.ymin());
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

RegressionTarget encode(const BBox& proposal, const BBox& target) {
  return RegressionTarget{(target.x - proposal.x) / proposal.w,
                          (target.y - proposal.y) / proposal.h,
                          std::log(target.w / proposal.w),
                          std::log(target.h / proposal.h)};
}

BBox decode(const BBox& proposal, const RegressionTarget& offsets) {
  const double w = proposal.w * std::exp(offsets.dw);
  const double h = proposal.h * std::exp(offsets.dh);
  if (!std::isfinite(w) || !std::isfinite(h)) {
    throw std::domain_error("offset exponentiation overflow");
  }
  return BBox{proposal.x + offsets.dx * proposal.w,
              proposal.y + offsets.dy * proposal.h, w, h};
}

BBox clip(const BBox& box, const ImageExtent& extent) {
  if (box.xmin() >= 0.0 && box.ymin() >= 0.0 && box.xmax() <= extent.width &&
      box.ymax() <= extent.height) {
    return box;
  }
  const double xmin = std::clamp(box.xmin(), 0.0, extent.width);
  const double xmax = std::clamp(box.xmax(), 0.0, extent.width);
  const double ymin = std::clamp(box.ymin(), 0.0, extent.height);
  const double ymax = std::clamp(box.ymax(), 0.0, extent.height);
  if (!(xmin < xmax) || !(ymin < ymax)) {
    throw std::domain_error("empty after clip");
  }
  return BBox::from_corners(xmin, ymin, xmax, ymax);
}

}  // namespace recdet
