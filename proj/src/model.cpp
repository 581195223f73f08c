#include "recdet/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "recdet/grouping.hpp"
#include "recdet/objective.hpp"
#include "recdet/refine.hpp"

namespace recdet {

namespace {
constexpr double kFeatureScale = 1000.0;

std::size_t cls_rows(const PredictorModel& m) {
  return static_cast<std::size_t>(m.num_classes) + 1;
}
std::size_t reg_rows(const PredictorModel& m) {
  return static_cast<std::size_t>(m.num_classes) * 4;
}
std::size_t cols(const PredictorModel& m) {
  return static_cast<std::size_t>(m.feature_dim) + 1;
}
}  // namespace

PredictorModel PredictorModel::zeros(int num_classes, int feature_dim) {
  PredictorModel m;
  m.num_classes = num_classes;
  m.feature_dim = feature_dim;
  m.cls_weights.assign(static_cast<std::size_t>(num_classes + 1) *
                           static_cast<std::size_t>(feature_dim + 1),
                       0.0);
  m.reg_weights.assign(static_cast<std::size_t>(num_classes) * 4 *
                           static_cast<std::size_t>(feature_dim + 1),
                       0.0);
  return m;
}

std::vector<double> normalize_features(const std::vector<double>& v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  if (sq == 0.0) return v;
  const double scale = kFeatureScale / std::sqrt(sq);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * scale;
  return out;
}

Prediction predict(const PredictorModel& model,
                   const std::vector<double>& features) {
  if (features.size() != static_cast<std::size_t>(model.feature_dim)) {
    throw std::invalid_argument("feature dimension mismatch");
  }
  const std::size_t nc = cls_rows(model);
  const std::size_t fc = cols(model);

  std::vector<double> logits(nc, 0.0);
  for (std::size_t r = 0; r < nc; ++r) {
    const double* row = model.cls_weights.data() + r * fc;
    double acc = row[fc - 1];  // bias
    for (std::size_t c = 0; c + 1 < fc; ++c) acc += row[c] * features[c];
    logits[r] = acc;
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& l : logits) {
    l = std::exp(l - peak);
    sum += l;
  }

  Prediction out;
  out.class_probs.resize(nc);
  for (std::size_t r = 0; r < nc; ++r) out.class_probs[r] = logits[r] / sum;

  out.offsets.resize(static_cast<std::size_t>(model.num_classes));
  for (std::size_t k = 0; k < out.offsets.size(); ++k) {
    double vals[4];
    for (std::size_t j = 0; j < 4; ++j) {
      const double* row = model.reg_weights.data() + (k * 4 + j) * fc;
      double acc = row[fc - 1];
      for (std::size_t c = 0; c + 1 < fc; ++c) acc += row[c] * features[c];
      vals[j] = acc;
    }
    out.offsets[k] = RegressionTarget{vals[0], vals[1], vals[2], vals[3]};
  }
  return out;
}

std::vector<TargetAssignment> assign_targets(const std::vector<BBox>& proposals,
                                             const Scene& scene,
                                             const TrainConfig& cfg) {
  std::vector<TargetAssignment> out(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    double best = 0.0;
    const SceneObject* match = nullptr;
    for (const SceneObject& obj : scene.objects) {
      if (obj.difficult) continue;
      const double overlap = iou(proposals[i], obj.box);
      if (overlap > best) {
        best = overlap;
        match = &obj;
      }
    }
    if (match != nullptr && best >= cfg.positive_iou) {
      out[i].label = match->label;
      out[i].offsets = encode(proposals[i], match->box);
    } else if (best >= cfg.background_iou_lo && best < cfg.background_iou_hi) {
      out[i].label = 0;
    } else {
      out[i].label = -1;
    }
  }
  return out;
}

namespace {

struct MirroredSample {
  Scene scene;
  std::vector<BBox> proposals;
};

MirroredSample mirror_horizontally(const Scene& scene,
                                   const std::vector<BBox>& proposals) {
  MirroredSample out{scene, proposals};
  for (SceneObject& obj : out.scene.objects) {
    obj.box.x = scene.extent.width - obj.box.x;
  }
  for (BBox& b : out.proposals) b.x = scene.extent.width - b.x;
  return out;
}

void add_outer(std::vector<double>& grad, std::size_t row, std::size_t fc,
               double coeff, const std::vector<double>& features) {
  double* dst = grad.data() + row * fc;
  for (std::size_t c = 0; c + 1 < fc; ++c) dst[c] += coeff * features[c];
  dst[fc - 1] += coeff;
}

}  // namespace

TrainResult sgd_train(const std::vector<TrainScene>& dataset,
                      const FeatureFn& features, const TrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  if (cfg.unroll < 1) throw std::invalid_argument("unroll must be >= 1");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> init(0.0, 0.01);

  PredictorModel model =
      PredictorModel::zeros(0, 0);  // shape filled below from the dataset
  {
    // Feature dimension probed from the first proposal of the first scene.
    const TrainScene& first = dataset.front();
    if (first.proposals.empty()) {
      throw std::invalid_argument("scene without proposals");
    }
    const std::vector<double> probe =
        features(first.scene, first.proposals.front(), 0, 0);
    int num_classes = 0;
    for (const TrainScene& ts : dataset) {
      for (const SceneObject& obj : ts.scene.objects) {
        num_classes = std::max(num_classes, obj.label);
      }
    }
    model = PredictorModel::zeros(num_classes,
                                  static_cast<int>(probe.size()));
    for (double& w : model.cls_weights) w = init(rng);
    for (double& w : model.reg_weights) w = init(rng);
  }

  const std::size_t fc = cols(model);
  std::vector<double> grad_cls(model.cls_weights.size());
  std::vector<double> grad_reg(model.reg_weights.size());
  std::vector<double> loss_curve;
  loss_curve.reserve(static_cast<std::size_t>(cfg.steps));

  std::uniform_int_distribution<std::size_t> pick_scene(0, dataset.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  for (int step = 0; step < cfg.steps; ++step) {
    const TrainScene& raw = dataset[pick_scene(rng)];
    Scene scene = raw.scene;
    std::vector<BBox> all_proposals = raw.proposals;
    if (cfg.mirror_augment && coin(rng) < 0.5) {
      MirroredSample m = mirror_horizontally(raw.scene, raw.proposals);
      scene = std::move(m.scene);
      all_proposals = std::move(m.proposals);
    }

    // Mini-batch: a random subset of this scene's proposals.
    std::vector<std::size_t> order(all_proposals.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t batch = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.batch_size), order.size());
    order.resize(batch);

    std::vector<BBox> boxes(batch);
    for (std::size_t i = 0; i < batch; ++i) boxes[i] = all_proposals[order[i]];

    std::fill(grad_cls.begin(), grad_cls.end(), 0.0);
    std::fill(grad_reg.begin(), grad_reg.end(), 0.0);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    for (int t = 0; t < cfg.unroll; ++t) {
      const std::vector<TargetAssignment> targets =
          assign_targets(boxes, scene, cfg);

      std::vector<Prediction> preds(batch);
      std::vector<std::vector<double>> conditioned(batch);
      for (std::size_t i = 0; i < batch; ++i) {
        conditioned[i] =
            normalize_features(features(scene, boxes[i], order[i], t));
        preds[i] = predict(model, conditioned[i]);

        const int g = targets[i].label;
        if (g < 0) continue;
        const LossBreakdown lb = multitask_loss(
            preds[i].class_probs, g,
            g >= 1 ? preds[i].offsets[static_cast<std::size_t>(g - 1)]
                   : RegressionTarget{},
            targets[i].offsets, cfg.loc_weight);
        loss_sum += lb.total;
        ++loss_count;

        // Softmax cross-entropy: d logits = p - onehot(g).
        for (std::size_t r = 0; r < cls_rows(model); ++r) {
          double coeff = preds[i].class_probs[r];
          if (static_cast<int>(r) == g) coeff -= 1.0;
          add_outer(grad_cls, r, fc, coeff, conditioned[i]);
        }
        // Smooth L1 touches only the ground-truth class rows.
        if (g >= 1) {
          const RegressionTarget sg = smooth_l1_grad(
              preds[i].offsets[static_cast<std::size_t>(g - 1)],
              targets[i].offsets);
          const double coords[4] = {sg.dx, sg.dy, sg.dw, sg.dh};
          const std::size_t base = static_cast<std::size_t>(g - 1) * 4;
          for (std::size_t j = 0; j < 4; ++j) {
            add_outer(grad_reg, base + j, fc, cfg.loc_weight * coords[j],
                      conditioned[i]);
          }
        }
      }

      // E-step between unrolled stages: regress, pool, clip. The next
      // stage's targets are re-derived from these boxes, so no gradient
      // crosses this boundary.
      if (t + 1 < cfg.unroll) {
        std::vector<DetectionState> snapshot(batch);
        for (std::size_t i = 0; i < batch; ++i) {
          snapshot[i].box = boxes[i];
          snapshot[i].class_probs = preds[i].class_probs;
          snapshot[i].update_prediction();
          const int g = snapshot[i].predicted_class;
          if (g >= 1) {
            try {
              snapshot[i].box = decode(
                  boxes[i], preds[i].offsets[static_cast<std::size_t>(g - 1)]);
            } catch (const std::domain_error&) {
              // Unusable offsets this early in training; leave the box.
            }
          }
        }
        for (std::size_t i = 0; i < batch; ++i) {
          BBox next = snapshot[i].box;
          if (snapshot[i].predicted_class >= 1 && cfg.pool_during_training) {
            next = group_confidence_pool(
                form_group(i, snapshot, cfg.group_iou_threshold));
          }
          try {
            next = clip(next, scene.extent);
          } catch (const std::domain_error&) {
            // Drifted fully outside; keep it where it is.
          }
          boxes[i] = next;
        }
      }
    }

    if (!std::isfinite(loss_sum)) {
      throw std::runtime_error("divergence at step " + std::to_string(step));
    }

    const double lr = cfg.learning_rate *
                      (step >= cfg.lr_decay_step ? cfg.lr_decay_factor : 1.0);
    if (loss_count > 0) {
      const double scale = lr / static_cast<double>(loss_count);
      for (std::size_t i = 0; i < grad_cls.size(); ++i) {
        model.cls_weights[i] -= scale * grad_cls[i];
      }
      for (std::size_t i = 0; i < grad_reg.size(); ++i) {
        model.reg_weights[i] -= scale * grad_reg[i];
      }
    }
    loss_curve.push_back(
        loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0);
  }

  return TrainResult{std::move(model), std::move(loss_curve)};
}

void save_model(const PredictorModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open model file: " + path);
  out << "recdet-model 1\n";
  out << model.num_classes << " " << model.feature_dim << "\n";
  char buf[64];
  auto write_row = [&](const std::vector<double>& w, std::size_t row,
                       std::size_t n) {
    for (std::size_t c = 0; c < n; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", w[row * n + c]);
      out << buf << (c + 1 == n ? '\n' : ' ');
    }
  };
  const std::size_t n = cols(model);
  for (std::size_t r = 0; r < cls_rows(model); ++r) write_row(model.cls_weights, r, n);
  for (std::size_t r = 0; r < reg_rows(model); ++r) write_row(model.reg_weights, r, n);
  if (!out) throw std::runtime_error("failed writing model file: " + path);
}

PredictorModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open model file: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "recdet-model" || version != 1) {
    throw std::invalid_argument("unrecognized model file: " + path);
  }
  int num_classes = 0;
  int feature_dim = 0;
  in >> num_classes >> feature_dim;
  if (!in || num_classes < 1 || feature_dim < 1) {
    throw std::runtime_error("corrupt model header: " + path);
  }
  PredictorModel model = PredictorModel::zeros(num_classes, feature_dim);
  for (double& w : model.cls_weights) in >> w;
  for (double& w : model.reg_weights) in >> w;
  if (!in) throw std::runtime_error("corrupt model weights: " + path);
  return model;
}

}  // namespace recdet
