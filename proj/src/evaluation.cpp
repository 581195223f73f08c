#include "recdet/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace recdet {

namespace {

struct GtPool {
  // Per image: indices of the class's objects, plus matched flags.
  std::map<std::string, std::vector<const SceneObject*>> objects;
  std::map<std::string, std::vector<bool>> matched;
  int num_positives = 0;  // non-difficult ground truths
};

GtPool collect_ground_truth(int label, const std::vector<Scene>& scenes) {
  GtPool pool;
  for (const Scene& scene : scenes) {
    for (const SceneObject& obj : scene.objects) {
      if (obj.label != label) continue;
      pool.objects[scene.id].push_back(&obj);
      pool.matched[scene.id].push_back(false);
      if (!obj.difficult) ++pool.num_positives;
    }
  }
  return pool;
}

void sort_by_score(std::vector<EvalDetection>& detections) {
  std::stable_sort(detections.begin(), detections.end(),
                   [](const EvalDetection& a, const EvalDetection& b) {
                     return a.score > b.score;
                   });
}

double area_ap(const std::vector<double>& recall,
               const std::vector<double>& precision) {
  // Precision envelope over recall, then the area under it.
  std::vector<double> mrec{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mrec.push_back(1.0);
  std::vector<double> mpre{0.0};
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i-- > 0;) {
    mpre[i] = std::max(mpre[i], mpre[i + 1]);
  }
  double ap = 0.0;
  for (std::size_t i = 0; i + 1 < mrec.size(); ++i) {
    ap += (mrec[i + 1] - mrec[i]) * mpre[i + 1];
  }
  return ap;
}

double eleven_point_ap(const std::vector<double>& recall,
                       const std::vector<double>& precision) {
  double ap = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double r = 0.1 * k;
    double best = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= r - 1e-12) best = std::max(best, precision[i]);
    }
    ap += best;
  }
  return ap / 11.0;
}

}  // namespace

double average_precision(std::vector<EvalDetection> detections, int label,
                         const std::vector<Scene>& ground_truths,
                         double iou_threshold, APMode mode) {
  GtPool pool = collect_ground_truth(label, ground_truths);
  if (pool.num_positives == 0) {
    throw std::invalid_argument("undefined AP");
  }
  detections.erase(std::remove_if(detections.begin(), detections.end(),
                                  [&](const EvalDetection& d) {
                                    return d.label != label;
                                  }),
                   detections.end());
  sort_by_score(detections);

  std::vector<int> tp;
  std::vector<int> fp;
  for (const EvalDetection& det : detections) {
    double best = 0.0;
    int best_idx = -1;
    auto it = pool.objects.find(det.image_id);
    if (it != pool.objects.end()) {
      for (std::size_t j = 0; j < it->second.size(); ++j) {
        const double overlap = iou(det.box, it->second[j]->box);
        if (overlap > best) {
          best = overlap;
          best_idx = static_cast<int>(j);
        }
      }
    }
    if (best >= iou_threshold && best_idx >= 0) {
      const SceneObject* obj = it->second[static_cast<std::size_t>(best_idx)];
      if (obj->difficult) continue;  // neither TP nor FP
      std::vector<bool>& flags = pool.matched[det.image_id];
      if (!flags[static_cast<std::size_t>(best_idx)]) {
        flags[static_cast<std::size_t>(best_idx)] = true;
        tp.push_back(1);
        fp.push_back(0);
      } else {
        tp.push_back(0);  // duplicate of an already-matched ground truth
        fp.push_back(1);
      }
    } else {
      tp.push_back(0);
      fp.push_back(1);
    }
  }

  std::vector<double> recall(tp.size());
  std::vector<double> precision(tp.size());
  int tp_sum = 0;
  int fp_sum = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    tp_sum += tp[i];
    fp_sum += fp[i];
    recall[i] = static_cast<double>(tp_sum) / pool.num_positives;
    precision[i] = static_cast<double>(tp_sum) / (tp_sum + fp_sum);
  }
  return mode == APMode::kArea ? area_ap(recall, precision)
                               : eleven_point_ap(recall, precision);
}

double mean_ap(const std::map<int, double>& per_class_ap) {
  if (per_class_ap.empty()) {
    throw std::invalid_argument("no evaluable classes");
  }
  double sum = 0.0;
  for (const auto& [label, ap] : per_class_ap) sum += ap;
  return sum / static_cast<double>(per_class_ap.size());
}

EvalReport evaluate(const std::vector<EvalDetection>& detections,
                    const std::vector<Scene>& ground_truths,
                    double iou_threshold, APMode mode) {
  std::set<int> labels;
  for (const Scene& scene : ground_truths) {
    for (const SceneObject& obj : scene.objects) labels.insert(obj.label);
  }
  for (const EvalDetection& det : detections) labels.insert(det.label);

  EvalReport report;
  report.mode = mode;
  report.iou_threshold = iou_threshold;
  for (int label : labels) {
    try {
      report.per_class_ap[label] =
          average_precision(detections, label, ground_truths, iou_threshold, mode);
    } catch (const std::invalid_argument&) {
      report.undefined_classes.push_back(label);
    }
  }
  report.mean = report.per_class_ap.empty() ? 0.0 : mean_ap(report.per_class_ap);
  report.fp_taxonomy =
      diagnose_false_positives(detections, ground_truths, iou_threshold);
  return report;
}

std::map<int, FpTaxonomy> diagnose_false_positives(
    const std::vector<EvalDetection>& detections,
    const std::vector<Scene>& ground_truths, double iou_threshold) {
  std::set<int> labels;
  for (const Scene& scene : ground_truths) {
    for (const SceneObject& obj : scene.objects) labels.insert(obj.label);
  }

  std::map<int, FpTaxonomy> out;
  for (int label : labels) {
    GtPool pool = collect_ground_truth(label, ground_truths);
    if (pool.num_positives == 0) continue;

    std::vector<EvalDetection> ranked;
    for (const EvalDetection& d : detections) {
      if (d.label == label) ranked.push_back(d);
    }
    sort_by_score(ranked);
    if (ranked.size() > static_cast<std::size_t>(pool.num_positives)) {
      ranked.resize(static_cast<std::size_t>(pool.num_positives));
    }

    FpTaxonomy tax;
    for (const EvalDetection& det : ranked) {
      double same_best = 0.0;
      int same_idx = -1;
      auto it = pool.objects.find(det.image_id);
      if (it != pool.objects.end()) {
        for (std::size_t j = 0; j < it->second.size(); ++j) {
          const double overlap = iou(det.box, it->second[j]->box);
          if (overlap > same_best) {
            same_best = overlap;
            same_idx = static_cast<int>(j);
          }
        }
      }
      double other_best = 0.0;
      for (const Scene& scene : ground_truths) {
        if (scene.id != det.image_id) continue;
        for (const SceneObject& obj : scene.objects) {
          if (obj.label != label) {
            other_best = std::max(other_best, iou(det.box, obj.box));
          }
        }
      }

      std::vector<bool>& flags = pool.matched[det.image_id];
      if (same_best >= iou_threshold && same_idx >= 0 &&
          !flags[static_cast<std::size_t>(same_idx)]) {
        flags[static_cast<std::size_t>(same_idx)] = true;
        ++tax.correct;
      } else if (same_best >= 0.1) {
        ++tax.localization;
      } else if (other_best >= 0.1) {
        ++tax.other;
      } else {
        ++tax.background;
      }
    }
    out[label] = tax;
  }
  return out;
}

}  // namespace recdet
