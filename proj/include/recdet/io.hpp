#pragma once

#include <map>
#include <string>
#include <vector>

#include "recdet/evaluation.hpp"
#include "recdet/geometry.hpp"
#include "recdet/scene.hpp"

namespace recdet {

struct AnnotatedObject {
  std::string class_name;
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;  // corner form
  bool difficult = false;
};

struct AnnotationRecord {
  std::string image_id;
  ImageExtent extent;
  std::vector<AnnotatedObject> objects;
};

struct DetectionRecord {
  std::string image_id;
  std::string class_name;
  double score = 0.0;
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
};

// One row per (detection, iteration) of a refinement run.
struct TraceRecord {
  std::size_t detection_id = 0;
  int iteration = 0;
  int label = 0;
  double score = 0.0;
  BBox box;
};

// Parses a VOC devkit <annotation> document. <bndbox> coordinates are
// 1-based inclusive pixels and come out as the continuous interval
// (xmin-1, ymin-1)..(xmax, ymax). Throws std::runtime_error with a line
// number on malformed XML and std::invalid_argument on schema errors.
AnnotationRecord parse_voc_xml(const std::string& text);
std::string write_voc_xml(const AnnotationRecord& record);

// One line per detection: image_id class score xmin ymin xmax ymax,
// numbers with 6 decimal places.
std::string write_detections(const std::vector<DetectionRecord>& records);
std::vector<DetectionRecord> read_detections(const std::string& text);

// CSV: detection_id,iteration,class,score,l_x,l_y,l_w,l_h
std::string write_trace(const std::vector<TraceRecord>& records);

// One line per proposal: image_id xmin ymin xmax ymax.
struct ProposalRecord {
  std::string image_id;
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
};
std::string write_proposals(const std::vector<ProposalRecord>& records);
std::vector<ProposalRecord> read_proposals(const std::string& text);

// Bridges to the evaluation module. Class names map to labels via the
// sorted order of the names seen in the annotations.
struct NamedDataset {
  std::vector<Scene> scenes;
  std::map<std::string, int> label_of;  // class name -> 1..K
  std::vector<std::string> names;       // names[label-1]
};
NamedDataset to_scenes(const std::vector<AnnotationRecord>& annotations);
std::vector<EvalDetection> to_eval_detections(
    const std::vector<DetectionRecord>& records, const NamedDataset& dataset);

}  // namespace recdet
