#include "recdet/refine.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "recdet/grouping.hpp"

namespace recdet {

void DetectionState::update_prediction() {
  const auto it = std::max_element(class_probs.begin(), class_probs.end());
  predicted_class = static_cast<int>(it - class_probs.begin());
  score = *it;
}

std::vector<DetectionState> refine_step(
    const std::vector<DetectionState>& states, const PredictorModel& predictor,
    const std::vector<std::vector<double>>& features,
    const RefinementConfig& config, const std::optional<ImageExtent>& extent) {
  if (features.size() != states.size()) {
    throw std::invalid_argument("alignment error");
  }

  // Prediction + regression, into a snapshot the pooling pass reads.
  std::vector<DetectionState> regressed = states;
  for (std::size_t i = 0; i < regressed.size(); ++i) {
    const Prediction p = predict(predictor, features[i]);
    regressed[i].class_probs = p.class_probs;
    regressed[i].update_prediction();
    const int g = regressed[i].predicted_class;
    if (g >= 1) {
      try {
        regressed[i].box =
            decode(states[i].box, p.offsets[static_cast<std::size_t>(g - 1)]);
      } catch (const std::domain_error&) {
        // Overflowing offsets leave the box in place.
      }
    }
  }

  std::vector<DetectionState> out = regressed;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].predicted_class >= 1 && config.pool_during_refinement) {
      out[i].box = group_confidence_pool(
          form_group(i, regressed, config.group_iou_threshold));
    }
    if (config.clip_to_image && extent) {
      try {
        out[i].box = clip(out[i].box, *extent);
      } catch (const std::domain_error&) {
        out[i].box = states[i].box;  // drifted fully outside; undo the move
      }
    }
    out[i].trajectory.push_back(out[i].box);
    out[i].class_trajectory.push_back(out[i].predicted_class);
    out[i].score_trajectory.push_back(out[i].score);
  }
  return out;
}

std::vector<DetectionState> run_refinement(const std::vector<BBox>& proposals,
                                           const PredictorModel& predictor,
                                           const Scene& scene,
                                           const FeatureFn& features,
                                           const RefinementConfig& config) {
  if (config.iterations < 1) {
    throw std::invalid_argument("iterations must be >= 1");
  }
  std::vector<DetectionState> states(proposals.size());
  const std::size_t n_classes = static_cast<std::size_t>(predictor.num_classes) + 1;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    states[i].box = proposals[i];
    states[i].class_probs.assign(n_classes, 1.0 / static_cast<double>(n_classes));
    states[i].update_prediction();
  }
  for (int t = 0; t < config.iterations; ++t) {
    std::vector<std::vector<double>> feats(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
      feats[i] = normalize_features(features(scene, states[i].box, i, t));
    }
    states = refine_step(states, predictor, feats, config, scene.extent);
  }
  return states;
}

std::vector<DetectionState> nms(const std::vector<DetectionState>& states,
                                double iou_threshold) {
  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return states[a].score > states[b].score;
  });

  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    const DetectionState& cand = states[idx];
    bool suppressed = false;
    for (std::size_t k : kept) {
      if (states[k].predicted_class == cand.predicted_class &&
          iou(states[k].box, cand.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());

  std::vector<DetectionState> out;
  out.reserve(kept.size());
  for (std::size_t k : kept) out.push_back(states[k]);
  return out;
}

}  // namespace recdet
