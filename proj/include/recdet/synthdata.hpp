#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "recdet/model.hpp"
#include "recdet/scene.hpp"

namespace recdet {

struct SynthConfig {
  int num_classes = 4;  // K
  int train_scenes = 200;
  int test_scenes = 50;
  int objects_min = 1;
  int objects_max = 3;
  double object_size_min = 20.0;
  double object_size_max = 80.0;
  double image_width = 320.0;
  double image_height = 320.0;
  int proposals_per_object = 8;
  double center_jitter = 0.15;    // fraction of object size
  double size_jitter = 0.15;      // sigma of the log-size shift
  int feature_dim = 16;           // F
  double feature_noise = 0.2;     // sigma of additive Gaussian noise
  std::uint64_t seed = 7;
};

// Seeded scene generation. Objects are placed uniformly with rejection so
// no two same-class objects exceed IoU 0.3. `id_offset` shifts scene ids
// (and their per-scene seeds) so train and test sets never overlap.
// Throws std::runtime_error("scene too crowded") when placement fails
// after bounded retries.
std::vector<Scene> generate_scenes(const SynthConfig& cfg, int count,
                                   int id_offset = 0);

// Jittered proposals around each object plus an equal count of uniform
// background boxes, all clipped to the extent.
std::vector<BBox> sample_proposals(const Scene& scene, const SynthConfig& cfg);

// Raw feature vector for a proposal: normalized geometry, the max-IoU
// object's one-hot scaled by that IoU, the exact offsets onto that
// object, zero padding up to feature_dim, plus additive Gaussian noise.
std::vector<double> synthesize_features(const BBox& proposal,
                                        const Scene& scene,
                                        const SynthConfig& cfg,
                                        std::mt19937_64& rng);

// FeatureFn over synthesize_features whose noise stream is a
// deterministic function of (cfg.seed, scene id, proposal index,
// iteration).
FeatureFn make_feature_provider(const SynthConfig& cfg);

// Scenes paired with their sampled proposals, ready for the trainer.
std::vector<TrainScene> build_dataset(const SynthConfig& cfg,
                                      const std::vector<Scene>& scenes);

}  // namespace recdet
