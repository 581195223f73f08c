#pragma once

#include <cstddef>
#include <vector>

#include "recdet/detection.hpp"
#include "recdet/geometry.hpp"

namespace recdet {

struct GroupMember {
  BBox box;
  double score = 0.0;  // confidence weight, > 0
  std::size_t index = 0;
};

// Collects the target plus every same-class detection whose IoU with the
// target is strictly greater than iou_threshold, in input order. The
// target itself always qualifies (self-IoU is 1).
// Throws std::invalid_argument if the target is predicted background.
std::vector<GroupMember> form_group(std::size_t target_index,
                                    const std::vector<DetectionState>& detections,
                                    double iou_threshold);

// Confidence-weighted mean of the members' boxes, coordinate-wise over
// all four center-form fields.
// Throws std::invalid_argument on an empty group.
BBox group_confidence_pool(const std::vector<GroupMember>& group);

}  // namespace recdet
