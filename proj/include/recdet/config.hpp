#pragma once

#include <string>

#include "recdet/evaluation.hpp"
#include "recdet/model.hpp"
#include "recdet/refine.hpp"
#include "recdet/synthdata.hpp"

namespace recdet {

// Everything one pipeline run needs, merged from defaults, a config
// file, and command-line overrides (in increasing precedence).
struct RunConfig {
  SynthConfig synth;
  TrainConfig train;
  RefinementConfig refine;
  double nms_threshold = 0.45;
  double score_floor = 0.05;
  double eval_iou_threshold = 0.5;
  APMode eval_mode = APMode::kArea;
};

// Parses a `section.key = value` document ('#' starts a comment).
// Unknown keys, bad values, and out-of-range settings are rejected with
// the offending key named. An empty document yields pure defaults.
RunConfig load_config(const std::string& text);

// Applies a single "section.key=value" override.
void apply_override(RunConfig& cfg, const std::string& assignment);

// Every accepted section.key name, for mirroring as CLI flags.
std::vector<std::string> config_keys();

// Range checks shared by load_config and the CLI.
void validate_config(const RunConfig& cfg);

}  // namespace recdet
