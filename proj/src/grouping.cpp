#include "recdet/grouping.hpp"

#include <stdexcept>

namespace recdet {

std::vector<GroupMember> form_group(std::size_t target_index,
                                    const std::vector<DetectionState>& detections,
                                    double iou_threshold) {
  if (target_index >= detections.size()) {
    throw std::invalid_argument("target index out of range");
  }
  const DetectionState& target = detections[target_index];
  if (target.predicted_class == 0) {
    throw std::invalid_argument("background has no group");
  }
  std::vector<GroupMember> group;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const DetectionState& d = detections[i];
    if (d.predicted_class != target.predicted_class) continue;
    if (i != target_index && iou(d.box, target.box) <= iou_threshold) continue;
    group.push_back(GroupMember{d.box, d.score, i});
  }
  return group;
}

BBox group_confidence_pool(const std::vector<GroupMember>& group) {
  if (group.empty()) {
    throw std::invalid_argument("empty group");
  }
  if (group.size() == 1) {
    if (!(group[0].score > 0.0)) {
      throw std::invalid_argument("non-positive group score");
    }
    return group[0].box;  // weight cancels exactly
  }
  double sum = 0.0;
  BBox pooled{0.0, 0.0, 0.0, 0.0};
  for (const GroupMember& m : group) {
    if (!(m.score > 0.0)) {
      throw std::invalid_argument("non-positive group score");
    }
    sum += m.score;
    pooled.x += m.score * m.box.x;
    pooled.y += m.score * m.box.y;
    pooled.w += m.score * m.box.w;
    pooled.h += m.score * m.box.h;
  }
  pooled.x /= sum;
  pooled.y /= sum;
  pooled.w /= sum;
  pooled.h /= sum;
  return pooled;
}

}  // namespace recdet
