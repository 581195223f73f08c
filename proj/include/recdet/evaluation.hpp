#pragma once

#include <map>
#include <string>
#include <vector>

#include "recdet/scene.hpp"

namespace recdet {

struct EvalDetection {
  std::string image_id;
  int label = 1;
  double score = 0.0;
  BBox box;
};

enum class APMode { kArea, kElevenPoint };

struct FpTaxonomy {
  int correct = 0;
  int localization = 0;  // same class, badly placed (incl. duplicates)
  int other = 0;         // overlaps an object of another class
  int background = 0;    // overlaps nothing
};

struct EvalReport {
  std::map<int, double> per_class_ap;
  std::vector<int> undefined_classes;  // no ground truth, excluded from map
  double mean = 0.0;
  APMode mode = APMode::kArea;
  double iou_threshold = 0.5;
  std::map<int, FpTaxonomy> fp_taxonomy;
};

// PASCAL-style AP for one class: greedy matching in descending score
// order, difficult ground truths neither score nor count. Detections of
// other classes are ignored; sorting is internal and stable.
// Throws std::invalid_argument("undefined AP") when the class has no
// non-difficult ground truth.
double average_precision(std::vector<EvalDetection> detections, int label,
                         const std::vector<Scene>& ground_truths,
                         double iou_threshold, APMode mode);

// Arithmetic mean over defined per-class APs.
// Throws std::invalid_argument("no evaluable classes") when empty.
double mean_ap(const std::map<int, double>& per_class_ap);

// AP for every class present in the ground truth, plus their mean.
EvalReport evaluate(const std::vector<EvalDetection>& detections,
                    const std::vector<Scene>& ground_truths,
                    double iou_threshold = 0.5, APMode mode = APMode::kArea);

// Bins each class's top-N detections (N = that class's ground-truth
// count) into correct / localization / other-class / background causes.
std::map<int, FpTaxonomy> diagnose_false_positives(
    const std::vector<EvalDetection>& detections,
    const std::vector<Scene>& ground_truths, double iou_threshold = 0.5);

}  // namespace recdet
