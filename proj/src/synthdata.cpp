#include "recdet/synthdata.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace recdet {

namespace {

constexpr int kPlacementRetries = 200;
constexpr double kSameClassIouCap = 0.3;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

std::uint64_t hash_str(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return h;
}

void validate(const SynthConfig& cfg) {
  if (cfg.num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  if (cfg.objects_min < 1 || cfg.objects_max < cfg.objects_min) {
    throw std::invalid_argument("bad objects-per-scene range");
  }
  if (!(cfg.object_size_min > 0.0) || cfg.object_size_max < cfg.object_size_min) {
    throw std::invalid_argument("bad object size range");
  }
  if (!(cfg.image_width > cfg.object_size_max) ||
      !(cfg.image_height > cfg.object_size_max)) {
    throw std::invalid_argument("image extent too small for objects");
  }
  if (cfg.proposals_per_object < 1) {
    throw std::invalid_argument("proposals_per_object must be >= 1");
  }
  if (cfg.center_jitter < 0.0 || cfg.size_jitter < 0.0 ||
      cfg.feature_noise < 0.0) {
    throw std::invalid_argument("jitter and noise sigmas must be >= 0");
  }
  if (cfg.feature_dim < cfg.num_classes + 8) {
    throw std::invalid_argument("feature_dim must be >= num_classes + 8");
  }
}

}  // namespace

std::vector<Scene> generate_scenes(const SynthConfig& cfg, int count,
                                   int id_offset) {
  validate(cfg);
  std::vector<Scene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    const int scene_index = s + id_offset;
    std::mt19937_64 rng(mix(cfg.seed, 0x5ce8e5 + static_cast<std::uint64_t>(scene_index)));
    Scene scene;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%06d", scene_index);
    scene.id = buf;
    scene.extent = ImageExtent{cfg.image_width, cfg.image_height};

    std::uniform_int_distribution<int> n_objects(cfg.objects_min, cfg.objects_max);
    std::uniform_int_distribution<int> pick_class(1, cfg.num_classes);
    std::uniform_real_distribution<double> pick_size(cfg.object_size_min,
                                                     cfg.object_size_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int wanted = n_objects(rng);
    for (int o = 0; o < wanted; ++o) {
      bool placed = false;
      for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
        SceneObject obj;
        obj.label = pick_class(rng);
        obj.box.w = pick_size(rng);
        obj.box.h = pick_size(rng);
        obj.box.x = 0.5 * obj.box.w + unit(rng) * (cfg.image_width - obj.box.w);
        obj.box.y = 0.5 * obj.box.h + unit(rng) * (cfg.image_height - obj.box.h);
        bool clash = false;
        for (const SceneObject& other : scene.objects) {
          if (other.label == obj.label &&
              iou(other.box, obj.box) > kSameClassIouCap) {
            clash = true;
            break;
          }
        }
        if (!clash) {
          scene.objects.push_back(obj);
          placed = true;
        }
      }
      if (!placed) throw std::runtime_error("scene too crowded");
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

std::vector<BBox> sample_proposals(const Scene& scene, const SynthConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(mix(cfg.seed, 0x9207a1 + hash_str(scene.id)));
  std::normal_distribution<double> log_shift(0.0, cfg.size_jitter);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> pick_size(cfg.object_size_min,
                                                   cfg.object_size_max);

  std::vector<BBox> proposals;
  for (const SceneObject& obj : scene.objects) {
    for (int p = 0; p < cfg.proposals_per_object; ++p) {
      BBox b = obj.box;
      b.x += (2.0 * unit(rng) - 1.0) * cfg.center_jitter * obj.box.w;
      b.y += (2.0 * unit(rng) - 1.0) * cfg.center_jitter * obj.box.h;
      b.w *= std::exp(cfg.size_jitter > 0.0 ? log_shift(rng) : 0.0);
      b.h *= std::exp(cfg.size_jitter > 0.0 ? log_shift(rng) : 0.0);
      proposals.push_back(clip(b, scene.extent));
    }
  }
  const std::size_t background =
      scene.objects.size() * static_cast<std::size_t>(cfg.proposals_per_object);
  for (std::size_t p = 0; p < background; ++p) {
    BBox b;
    b.w = pick_size(rng);
    b.h = pick_size(rng);
    b.x = 0.5 * b.w + unit(rng) * (scene.extent.width - b.w);
    b.y = 0.5 * b.h + unit(rng) * (scene.extent.height - b.h);
    proposals.push_back(b);
  }
  return proposals;
}

std::vector<double> synthesize_features(const BBox& proposal,
                                        const Scene& scene,
                                        const SynthConfig& cfg,
                                        std::mt19937_64& rng) {
  validate(cfg);
  std::vector<double> v(static_cast<std::size_t>(cfg.feature_dim), 0.0);
  v[0] = proposal.x / scene.extent.width;
  v[1] = proposal.y / scene.extent.height;
  v[2] = proposal.w / scene.extent.width;
  v[3] = proposal.h / scene.extent.height;

  double best = 0.0;
  const SceneObject* match = nullptr;
  for (const SceneObject& obj : scene.objects) {
    const double overlap = iou(proposal, obj.box);
    if (overlap > best) {
      best = overlap;
      match = &obj;
    }
  }
  if (match != nullptr) {
    if (match->label > cfg.num_classes) {
      throw std::invalid_argument("object label exceeds synth.classes");
    }
    v[static_cast<std::size_t>(3 + match->label)] = best;
    const RegressionTarget r = encode(proposal, match->box);
    const std::size_t base = static_cast<std::size_t>(4 + cfg.num_classes);
    v[base + 0] = r.dx;
    v[base + 1] = r.dy;
    v[base + 2] = r.dw;
    v[base + 3] = r.dh;
  }
  if (cfg.feature_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.feature_noise);
    for (double& x : v) x += noise(rng);
  }
  return v;
}

FeatureFn make_feature_provider(const SynthConfig& cfg) {
  validate(cfg);
  return [cfg](const Scene& scene, const BBox& box, std::size_t proposal_index,
               int iteration) {
    std::mt19937_64 rng(
        mix(mix(cfg.seed, hash_str(scene.id)),
            mix(proposal_index, 0xfea7 + static_cast<std::uint64_t>(iteration))));
    return synthesize_features(box, scene, cfg, rng);
  };
}

std::vector<TrainScene> build_dataset(const SynthConfig& cfg,
                                      const std::vector<Scene>& scenes) {
  std::vector<TrainScene> out;
  out.reserve(scenes.size());
  for (const Scene& scene : scenes) {
    out.push_back(TrainScene{scene, sample_proposals(scene, cfg)});
  }
  return out;
}

}  // namespace recdet
