#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "recdet/geometry.hpp"
#include "recdet/scene.hpp"

namespace recdet {

// Linear classification + regression heads over a conditioned feature
// vector. Weight rows carry a trailing bias column.
struct PredictorModel {
  int num_classes = 0;  // K object classes; class 0 is background
  int feature_dim = 0;
  std::vector<double> cls_weights;  // (K+1) x (F+1), row-major
  std::vector<double> reg_weights;  // (4K) x (F+1), 4 rows per class

  static PredictorModel zeros(int num_classes, int feature_dim);
};

struct Prediction {
  std::vector<double> class_probs;        // K+1, softmax output
  std::vector<RegressionTarget> offsets;  // offsets[k] belongs to class k+1
};

struct TrainConfig {
  // The x1000 feature conditioning makes plain SGD step sizes scale with
  // ||f||^2 ~ 1e6, so the stable learning rate is correspondingly small.
  double learning_rate = 1e-5;
  double lr_decay_factor = 0.1;
  int lr_decay_step = 1200;
  int steps = 2000;
  int batch_size = 32;
  std::uint64_t seed = 1;
  int unroll = 2;  // T
  double positive_iou = 0.5;
  double background_iou_lo = 0.1;
  double background_iou_hi = 0.5;
  double loc_weight = 1.0;
  bool pool_during_training = true;
  double group_iou_threshold = 0.7;
  bool mirror_augment = false;
};

struct TargetAssignment {
  int label = -1;  // -1 excluded, 0 background, >= 1 object class
  RegressionTarget offsets;  // meaningful only when label >= 1
};

struct TrainScene {
  Scene scene;
  std::vector<BBox> proposals;
};

// Features for one proposal box against its scene; `iteration` feeds the
// provider's noise stream so refined boxes get fresh features.
using FeatureFn = std::function<std::vector<double>(
    const Scene& scene, const BBox& box, std::size_t proposal_index,
    int iteration)>;

struct TrainResult {
  PredictorModel model;
  std::vector<double> loss_curve;  // mean multi-task loss per SGD step
};

// v / ||v||_2 * 1000; the zero vector passes through unchanged.
std::vector<double> normalize_features(const std::vector<double>& v);

// Softmax class probabilities and per-class offsets from a conditioned
// feature vector. Throws std::invalid_argument on a dimension mismatch.
Prediction predict(const PredictorModel& model,
                   const std::vector<double>& features);

// Matches each proposal to its max-IoU ground-truth object. IoU at or
// above positive_iou gives the object's label and encode() offsets;
// IoU inside [background_iou_lo, background_iou_hi) gives background;
// anything else is excluded from training. Difficult objects are skipped.
std::vector<TargetAssignment> assign_targets(const std::vector<BBox>& proposals,
                                             const Scene& scene,
                                             const TrainConfig& cfg);

// Plain SGD on the unrolled multi-task loss. Each step samples one scene,
// runs the refinement loop for `unroll` iterations with the current
// weights, re-assigns targets against the current boxes at every
// iteration, and applies the mean analytic gradient. The box updates
// between iterations (decode + group pooling) carry no gradient.
// Throws std::runtime_error("divergence at step N") on a non-finite loss.
TrainResult sgd_train(const std::vector<TrainScene>& dataset,
                      const FeatureFn& features, const TrainConfig& cfg);

void save_model(const PredictorModel& model, const std::string& path);
PredictorModel load_model(const std::string& path);

}  // namespace recdet
