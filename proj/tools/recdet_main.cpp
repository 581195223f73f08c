#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "recdet/config.hpp"
#include "recdet/io.hpp"
#include "recdet/refine.hpp"
#include "recdet/synthdata.hpp"

namespace fs = std::filesystem;
using namespace recdet;

namespace {

struct CliState {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::vector<std::string> overrides;  // in command-line order
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing: " + path.string());
}

RunConfig build_config(const CliState& state) {
  RunConfig cfg;
  if (!state.config_path.empty()) {
    cfg = load_config(read_file(state.config_path));
  }
  for (const std::string& assignment : state.overrides) {
    apply_override(cfg, assignment);
  }
  if (state.seed) {
    cfg.synth.seed = *state.seed;
    cfg.train.seed = *state.seed;
  }
  validate_config(cfg);
  return cfg;
}

// Mirror every config key as a --section.key flag on a subcommand.
void add_config_flags(CLI::App* cmd, CliState& state) {
  cmd->add_option("--config", state.config_path, "Config file (section.key = value lines)");
  cmd->add_option("--seed", state.seed, "Override synth.seed and train.seed");
  cmd->add_flag("--quiet", state.quiet, "Suppress progress output");
  for (const std::string& key : config_keys()) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [&state, key](const std::string& value) {
          state.overrides.push_back(key + "=" + value);
        },
        "Override config key " + key);
  }
}

std::string class_name(int label) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "class_%02d", label);
  return buf;
}

struct SplitData {
  NamedDataset named;
  std::vector<TrainScene> dataset;  // scenes paired with proposals
};

SplitData load_split(const fs::path& dir) {
  const fs::path ann_dir = dir / "annotations";
  if (!fs::is_directory(ann_dir)) {
    throw std::invalid_argument("no annotations directory under " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(ann_dir)) {
    if (entry.path().extension() == ".xml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<AnnotationRecord> annotations;
  annotations.reserve(files.size());
  for (const fs::path& f : files) {
    annotations.push_back(parse_voc_xml(read_file(f)));
  }

  SplitData out;
  out.named = to_scenes(annotations);

  std::map<std::string, std::vector<BBox>> proposals_of;
  const fs::path prop_file = dir / "proposals.txt";
  if (fs::exists(prop_file)) {
    for (const ProposalRecord& r : read_proposals(read_file(prop_file))) {
      proposals_of[r.image_id].push_back(
          BBox::from_corners(r.xmin, r.ymin, r.xmax, r.ymax));
    }
  }
  for (const Scene& scene : out.named.scenes) {
    auto it = proposals_of.find(scene.id);
    out.dataset.push_back(TrainScene{
        scene, it == proposals_of.end() ? std::vector<BBox>{} : it->second});
  }
  return out;
}

int cmd_synth(const CliState& state, const std::string& out_dir) {
  const RunConfig cfg = build_config(state);
  const struct {
    const char* name;
    int count;
    int offset;
  } splits[] = {{"train", cfg.synth.train_scenes, 0},
                {"test", cfg.synth.test_scenes, cfg.synth.train_scenes}};
  for (const auto& split : splits) {
    const std::vector<Scene> scenes =
        generate_scenes(cfg.synth, split.count, split.offset);
    std::vector<ProposalRecord> proposals;
    for (const Scene& scene : scenes) {
      AnnotationRecord record;
      record.image_id = scene.id;
      record.extent = scene.extent;
      for (const SceneObject& obj : scene.objects) {
        record.objects.push_back(AnnotatedObject{
            class_name(obj.label), obj.box.xmin(), obj.box.ymin(),
            obj.box.xmax(), obj.box.ymax(), obj.difficult});
      }
      write_file(fs::path(out_dir) / split.name / "annotations" /
                     (scene.id + ".xml"),
                 write_voc_xml(record));
      for (const BBox& b : sample_proposals(scene, cfg.synth)) {
        proposals.push_back(
            ProposalRecord{scene.id, b.xmin(), b.ymin(), b.xmax(), b.ymax()});
      }
    }
    write_file(fs::path(out_dir) / split.name / "proposals.txt",
               write_proposals(proposals));
    if (!state.quiet) {
      std::cout << "wrote " << scenes.size() << " " << split.name
                << " scenes under " << out_dir << "/" << split.name << "\n";
    }
  }
  return 0;
}

int cmd_train(const CliState& state, const std::string& data_dir,
              const std::string& model_path, std::string loss_csv) {
  const RunConfig cfg = build_config(state);
  const SplitData split = load_split(data_dir);
  const TrainResult result =
      sgd_train(split.dataset, make_feature_provider(cfg.synth), cfg.train);
  save_model(result.model, model_path);
  if (loss_csv.empty()) loss_csv = model_path + ".loss.csv";
  std::ostringstream csv;
  csv << "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < result.loss_curve.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", i, result.loss_curve[i]);
    csv << buf;
  }
  write_file(loss_csv, csv.str());
  if (!state.quiet) {
    std::cout << "trained " << result.loss_curve.size() << " steps; model -> "
              << model_path << ", loss curve -> " << loss_csv << "\n";
  }
  return 0;
}

int cmd_refine(const CliState& state, const std::string& model_path,
               const std::string& data_dir, const std::string& out_path,
               const std::string& trace_path, const std::string& per_class_dir) {
  const RunConfig cfg = build_config(state);
  const PredictorModel model = load_model(model_path);
  const SplitData split = load_split(data_dir);
  const FeatureFn features = make_feature_provider(cfg.synth);

  std::vector<DetectionRecord> detections;
  std::vector<TraceRecord> traces;
  std::size_t next_id = 0;
  for (const TrainScene& ts : split.dataset) {
    if (ts.proposals.empty()) continue;
    const std::vector<DetectionState> states =
        run_refinement(ts.proposals, model, ts.scene, features, cfg.refine);
    if (!trace_path.empty()) {
      for (std::size_t i = 0; i < states.size(); ++i) {
        for (std::size_t t = 0; t < states[i].trajectory.size(); ++t) {
          traces.push_back(TraceRecord{
              next_id + i, static_cast<int>(t) + 1,
              states[i].class_trajectory[t], states[i].score_trajectory[t],
              states[i].trajectory[t]});
        }
      }
    }
    next_id += states.size();

    std::vector<DetectionState> scored;
    for (const DetectionState& s : states) {
      if (s.predicted_class >= 1 && s.score > cfg.score_floor) {
        scored.push_back(s);
      }
    }
    for (const DetectionState& s : nms(scored, cfg.nms_threshold)) {
      detections.push_back(DetectionRecord{
          ts.scene.id, class_name(s.predicted_class), s.score, s.box.xmin(),
          s.box.ymin(), s.box.xmax(), s.box.ymax()});
    }
  }
  write_file(out_path, write_detections(detections));
  if (!trace_path.empty()) write_file(trace_path, write_trace(traces));
  if (!per_class_dir.empty()) {
    // Devkit-style split: one file per class, lines of
    // "image_id score xmin ymin xmax ymax".
    std::map<std::string, std::ostringstream> per_class;
    char buf[160];
    for (const DetectionRecord& r : detections) {
      std::snprintf(buf, sizeof(buf), "%s %.6f %.6f %.6f %.6f %.6f\n",
                    r.image_id.c_str(), r.score, r.xmin, r.ymin, r.xmax,
                    r.ymax);
      per_class[r.class_name] << buf;
    }
    for (const auto& [name, body] : per_class) {
      write_file(fs::path(per_class_dir) / ("det_" + name + ".txt"),
                 body.str());
    }
  }
  if (!state.quiet) {
    std::cout << "wrote " << detections.size() << " detections -> " << out_path
              << "\n";
  }
  return 0;
}

EvalReport run_eval(const RunConfig& cfg, const std::string& detections_path,
                    const std::string& data_dir, SplitData& split) {
  split = load_split(data_dir);
  const std::vector<DetectionRecord> records =
      read_detections(read_file(detections_path));
  const std::vector<EvalDetection> detections =
      to_eval_detections(records, split.named);
  return evaluate(detections, split.named.scenes, cfg.eval_iou_threshold,
                  cfg.eval_mode);
}

int cmd_eval(const CliState& state, const std::string& detections_path,
             const std::string& data_dir, const std::string& report_path) {
  const RunConfig cfg = build_config(state);
  SplitData split;
  const EvalReport report = run_eval(cfg, detections_path, data_dir, split);

  char buf[96];
  std::printf("%-12s %8s\n", "class", "AP");
  for (const auto& [label, ap] : report.per_class_ap) {
    std::printf("%-12s %8.4f\n", split.named.names[label - 1].c_str(), ap);
  }
  for (int label : report.undefined_classes) {
    std::printf("%-12s %8s\n", class_name(label).c_str(), "n/a");
  }
  std::printf("%-12s %8.4f  (%s, IoU %.2f)\n", "mAP", report.mean,
              report.mode == APMode::kArea ? "area" : "11point",
              report.iou_threshold);

  if (!report_path.empty()) {
    std::ostringstream out;
    for (const auto& [label, ap] : report.per_class_ap) {
      std::snprintf(buf, sizeof(buf), "%s_ap=%.6f\n",
                    split.named.names[label - 1].c_str(), ap);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "map=%.6f\n", report.mean);
    out << buf;
    out << "mode=" << (report.mode == APMode::kArea ? "area" : "11point")
        << "\n";
    write_file(report_path, out.str());
  }
  return 0;
}

int cmd_diagnose(const CliState& state, const std::string& detections_path,
                 const std::string& data_dir) {
  const RunConfig cfg = build_config(state);
  SplitData split;
  const EvalReport report = run_eval(cfg, detections_path, data_dir, split);
  std::printf("%-12s %6s %6s %6s %6s\n", "class", "Cor", "Loc", "Oth", "BG");
  for (const auto& [label, tax] : report.fp_taxonomy) {
    std::printf("%-12s %6d %6d %6d %6d\n",
                split.named.names[label - 1].c_str(), tax.correct,
                tax.localization, tax.other, tax.background);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-recursive detection refinement pipeline"};
  app.require_subcommand(1);

  CliState state;
  std::string out_dir, data_dir, model_path, loss_csv, detections_path,
      trace_path, report_path, per_class_dir;

  CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic benchmark");
  add_config_flags(synth, state);
  synth->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* train = app.add_subcommand("train", "Train the predictor");
  add_config_flags(train, state);
  train->add_option("--data", data_dir, "Split directory (train)")->required();
  train->add_option("--model", model_path, "Model checkpoint to write")->required();
  train->add_option("--loss-csv", loss_csv, "Loss curve CSV path");

  CLI::App* refine = app.add_subcommand("refine", "Run recursive refinement");
  add_config_flags(refine, state);
  refine->add_option("--model", model_path, "Model checkpoint")->required();
  refine->add_option("--data", data_dir, "Split directory (test)")->required();
  refine->add_option("--out", detections_path, "Detections file to write")->required();
  refine->add_option("--trace", trace_path, "Trajectory CSV to write");
  refine->add_option("--per-class-dir", per_class_dir,
                     "Also write devkit-style per-class detection files here");

  CLI::App* eval = app.add_subcommand("eval", "Score detections (AP / mAP)");
  add_config_flags(eval, state);
  eval->add_option("--detections", detections_path, "Detections file")->required();
  eval->add_option("--data", data_dir, "Split directory with annotations")->required();
  eval->add_option("--report", report_path, "Machine-readable report path");

  CLI::App* diagnose = app.add_subcommand("diagnose", "False-positive taxonomy");
  add_config_flags(diagnose, state);
  diagnose->add_option("--detections", detections_path, "Detections file")->required();
  diagnose->add_option("--data", data_dir, "Split directory with annotations")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(state, out_dir);
    if (train->parsed()) return cmd_train(state, data_dir, model_path, loss_csv);
    if (refine->parsed()) {
      return cmd_refine(state, model_path, data_dir, detections_path,
                        trace_path, per_class_dir);
    }
    if (eval->parsed()) {
      return cmd_eval(state, detections_path, data_dir, report_path);
    }
    if (diagnose->parsed()) return cmd_diagnose(state, detections_path, data_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
