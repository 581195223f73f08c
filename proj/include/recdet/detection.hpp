#pragma once

#include <vector>

#include "recdet/geometry.hpp"

namespace recdet {

// One proposal's evolving record across refinement iterations.
// Class 0 is background.
struct DetectionState {
  BBox box;
  std::vector<double> class_probs;  // over K+1 classes, sums to 1
  int predicted_class = 0;          // argmax of class_probs
  double score = 0.0;               // class_probs[predicted_class]
  std::vector<BBox> trajectory;     // one entry per completed iteration
  std::vector<int> class_trajectory;
  std::vector<double> score_trajectory;

  // Sets predicted_class/score from class_probs. First argmax wins on ties.
  void update_prediction();
};

}  // namespace recdet
