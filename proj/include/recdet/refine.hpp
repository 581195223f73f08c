#pragma once

#include <optional>
#include <vector>

#include "recdet/detection.hpp"
#include "recdet/model.hpp"

namespace recdet {

struct RefinementConfig {
  int iterations = 2;  // T
  double group_iou_threshold = 0.7;
  bool pool_during_refinement = true;
  bool clip_to_image = true;
};

// One E-step pass: predict class probabilities and offsets per state,
// regress non-background boxes, then pool each one with its group.
// Background-predicted boxes keep their location. All group lookups read
// a snapshot of the post-regression boxes, so per-state order does not
// matter. Throws std::invalid_argument on a feature/state length mismatch.
std::vector<DetectionState> refine_step(
    const std::vector<DetectionState>& states, const PredictorModel& predictor,
    const std::vector<std::vector<double>>& features,
    const RefinementConfig& config, const std::optional<ImageExtent>& extent);

// Applies refine_step `iterations` times, re-deriving features from the
// current boxes before each pass. Returned trajectories have length T.
std::vector<DetectionState> run_refinement(const std::vector<BBox>& proposals,
                                           const PredictorModel& predictor,
                                           const Scene& scene,
                                           const FeatureFn& features,
                                           const RefinementConfig& config);

// Greedy per-class suppression: keeps detections in descending score
// order, dropping same-class survivors with IoU above the threshold
// against a kept one. Ties keep input order.
std::vector<DetectionState> nms(const std::vector<DetectionState>& states,
                                double iou_threshold);

}  // namespace recdet
