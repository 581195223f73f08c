#include "recdet/config.hpp"

#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace recdet {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("bad value for " + key + ": '" + value + "'");
}

double as_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto r = std::from_chars(value.data(), value.data() + value.size(), out);
  if (r.ec != std::errc{} || r.ptr != value.data() + value.size()) {
    bad_value(key, value);
  }
  return out;
}

long long as_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto r = std::from_chars(value.data(), value.data() + value.size(), out);
  if (r.ec != std::errc{} || r.ptr != value.data() + value.size()) {
    bad_value(key, value);
  }
  return out;
}

bool as_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

using Setter = std::function<void(RunConfig&, const std::string& key,
                                  const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  auto dbl = [](double RunConfig::* field) {
    return [field](RunConfig& c, const std::string& k, const std::string& v) {
      c.*field = as_double(k, v);
    };
  };
  static const std::map<std::string, Setter> table = {
      {"synth.classes", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.num_classes = static_cast<int>(as_int(k, v)); }},
      {"synth.feature_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.feature_dim = static_cast<int>(as_int(k, v)); }},
      {"synth.train_scenes", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.train_scenes = static_cast<int>(as_int(k, v)); }},
      {"synth.test_scenes", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.test_scenes = static_cast<int>(as_int(k, v)); }},
      {"synth.objects_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.objects_min = static_cast<int>(as_int(k, v)); }},
      {"synth.objects_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.objects_max = static_cast<int>(as_int(k, v)); }},
      {"synth.object_size_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.object_size_min = as_double(k, v); }},
      {"synth.object_size_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.object_size_max = as_double(k, v); }},
      {"synth.image_width", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.image_width = as_double(k, v); }},
      {"synth.image_height", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.image_height = as_double(k, v); }},
      {"synth.proposals_per_object", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.proposals_per_object = static_cast<int>(as_int(k, v)); }},
      {"synth.center_jitter", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.center_jitter = as_double(k, v); }},
      {"synth.size_jitter", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.size_jitter = as_double(k, v); }},
      {"synth.feature_noise", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.feature_noise = as_double(k, v); }},
      {"synth.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.seed = static_cast<std::uint64_t>(as_int(k, v)); }},
      {"train.learning_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.learning_rate = as_double(k, v); }},
      {"train.lr_decay_factor", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lr_decay_factor = as_double(k, v); }},
      {"train.lr_decay_step", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lr_decay_step = static_cast<int>(as_int(k, v)); }},
      {"train.steps", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.steps = static_cast<int>(as_int(k, v)); }},
      {"train.batch_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = static_cast<int>(as_int(k, v)); }},
      {"train.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = static_cast<std::uint64_t>(as_int(k, v)); }},
      {"train.unroll", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.unroll = static_cast<int>(as_int(k, v)); }},
      {"train.positive_iou", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.positive_iou = as_double(k, v); }},
      {"train.background_iou_lo", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.background_iou_lo = as_double(k, v); }},
      {"train.background_iou_hi", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.background_iou_hi = as_double(k, v); }},
      {"train.loc_weight", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.loc_weight = as_double(k, v); }},
      {"train.pool_during_training", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.pool_during_training = as_bool(k, v); }},
      {"train.group_iou_threshold", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.group_iou_threshold = as_double(k, v); }},
      {"train.mirror_augment", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.mirror_augment = as_bool(k, v); }},
      {"refine.iterations", [](RunConfig& c, const std::string& k, const std::string& v) { c.refine.iterations = static_cast<int>(as_int(k, v)); }},
      {"refine.group_iou_threshold", [](RunConfig& c, const std::string& k, const std::string& v) { c.refine.group_iou_threshold = as_double(k, v); }},
      {"refine.pool_during_refinement", [](RunConfig& c, const std::string& k, const std::string& v) { c.refine.pool_during_refinement = as_bool(k, v); }},
      {"refine.clip_to_image", [](RunConfig& c, const std::string& k, const std::string& v) { c.refine.clip_to_image = as_bool(k, v); }},
      {"refine.nms_threshold", dbl(&RunConfig::nms_threshold)},
      {"refine.score_floor", dbl(&RunConfig::score_floor)},
      {"eval.iou_threshold", dbl(&RunConfig::eval_iou_threshold)},
      {"eval.mode", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "area") c.eval_mode = APMode::kArea;
         else if (v == "11point") c.eval_mode = APMode::kElevenPoint;
         else bad_value(k, v);
       }},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) {
    throw std::invalid_argument("unknown config key: " + key);
  }
  it->second(cfg, key, value);
}

void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("invalid config: ") + what);
}

}  // namespace

void validate_config(const RunConfig& cfg) {
  check(cfg.synth.num_classes >= 1, "synth.classes must be >= 1");
  check(cfg.synth.train_scenes >= 1, "synth.train_scenes must be >= 1");
  check(cfg.synth.test_scenes >= 1, "synth.test_scenes must be >= 1");
  check(cfg.synth.feature_dim >= cfg.synth.num_classes + 8,
        "synth.feature_dim must be >= synth.classes + 8");
  check(cfg.train.learning_rate >= 0.0, "train.learning_rate must be >= 0");
  check(cfg.train.steps >= 1, "train.steps must be >= 1");
  check(cfg.train.batch_size >= 1, "train.batch_size must be >= 1");
  check(cfg.train.unroll >= 1, "train.unroll must be >= 1");
  check(cfg.train.positive_iou > 0.0 && cfg.train.positive_iou <= 1.0,
        "train.positive_iou must be in (0,1]");
  check(cfg.train.background_iou_lo >= 0.0 &&
            cfg.train.background_iou_hi > cfg.train.background_iou_lo,
        "train background IoU range must be a non-empty [lo,hi)");
  check(cfg.train.group_iou_threshold > 0.0 && cfg.train.group_iou_threshold < 1.0,
        "train.group_iou_threshold must be in (0,1)");
  check(cfg.refine.iterations >= 1, "refine.iterations must be >= 1");
  check(cfg.refine.group_iou_threshold > 0.0 && cfg.refine.group_iou_threshold < 1.0,
        "refine.group_iou_threshold must be in (0,1)");
  check(cfg.nms_threshold > 0.0 && cfg.nms_threshold < 1.0,
        "refine.nms_threshold must be in (0,1)");
  check(cfg.score_floor >= 0.0 && cfg.score_floor < 1.0,
        "refine.score_floor must be in [0,1)");
  check(cfg.eval_iou_threshold > 0.0 && cfg.eval_iou_threshold <= 1.0,
        "eval.iou_threshold must be in (0,1]");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  keys.reserve(setters().size());
  for (const auto& [key, setter] : setters()) keys.push_back(key);
  return keys;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("override must look like section.key=value: " +
                                assignment);
  }
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

RunConfig load_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_override(cfg, line);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": " + e.what());
    }
  }
  validate_config(cfg);
  return cfg;
}

}  // namespace recdet
