#include "recdet/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

namespace recdet {

namespace {

// ---------------------------------------------------------------------
// Minimal XML reader for the VOC annotation subset: elements, text,
// comments, declarations. Attributes are skipped; entities are decoded.

struct XmlNode {
  std::string name;
  std::string text;
  std::vector<XmlNode> children;

  const XmlNode* child(const std::string& wanted) const {
    for (const XmlNode& c : children) {
      if (c.name == wanted) return &c;
    }
    return nullptr;
  }
};

struct XmlCursor {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("parse error at line " + std::to_string(line) +
                             ": " + what);
  }
  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  char take() {
    const char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }
  bool starts_with(const char* s) const {
    return text.compare(pos, std::char_traits<char>::length(s), s) == 0;
  }
  void skip(std::size_t n) {
    for (std::size_t i = 0; i < n && !eof(); ++i) take();
  }
  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) take();
  }
  void skip_comment() {
    skip(4);  // "<!--"
    while (!eof() && !starts_with("-->")) take();
    if (eof()) fail("unterminated comment");
    skip(3);
  }
  void skip_prolog() {
    skip(2);  // "<?"
    while (!eof() && !starts_with("?>")) take();
    if (eof()) fail("unterminated declaration");
    skip(2);
  }
};

std::string decode_entities(const std::string& s, XmlCursor& cur) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out += s[i];
      continue;
    }
    const std::size_t end = s.find(';', i);
    if (end == std::string::npos) cur.fail("unterminated entity");
    const std::string name = s.substr(i + 1, end - i - 1);
    if (name == "lt") out += '<';
    else if (name == "gt") out += '>';
    else if (name == "amp") out += '&';
    else if (name == "quot") out += '"';
    else if (name == "apos") out += '\'';
    else cur.fail("unknown entity &" + name + ";");
    i = end;
  }
  return out;
}

XmlNode parse_element(XmlCursor& cur) {
  if (cur.eof() || cur.peek() != '<') cur.fail("expected element");
  cur.take();
  XmlNode node;
  while (!cur.eof() && (std::isalnum(static_cast<unsigned char>(cur.peek())) ||
                        cur.peek() == '_' || cur.peek() == '-' ||
                        cur.peek() == ':')) {
    node.name += cur.take();
  }
  if (node.name.empty()) cur.fail("missing element name");
  // Attributes are not part of the VOC schema we consume; skip to '>'.
  while (!cur.eof() && cur.peek() != '>' && !cur.starts_with("/>")) cur.take();
  if (cur.eof()) cur.fail("unterminated tag <" + node.name);
  if (cur.starts_with("/>")) {
    cur.skip(2);
    return node;
  }
  cur.take();  // '>'

  std::string raw_text;
  while (true) {
    if (cur.eof()) cur.fail("unexpected end inside <" + node.name + ">");
    if (cur.peek() == '<') {
      if (cur.starts_with("<!--")) {
        cur.skip_comment();
      } else if (cur.starts_with("</")) {
        cur.skip(2);
        std::string closing;
        while (!cur.eof() && cur.peek() != '>') closing += cur.take();
        if (cur.eof()) cur.fail("unterminated closing tag");
        cur.take();
        while (!closing.empty() &&
               std::isspace(static_cast<unsigned char>(closing.back()))) {
          closing.pop_back();
        }
        if (closing != node.name) {
          cur.fail("mismatched closing tag </" + closing + "> for <" +
                   node.name + ">");
        }
        break;
      } else {
        node.children.push_back(parse_element(cur));
      }
    } else {
      raw_text += cur.take();
    }
  }
  // Leaf text only; whitespace between child elements is dropped.
  std::string trimmed = decode_entities(raw_text, cur);
  const auto first = trimmed.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    trimmed.clear();
  } else {
    trimmed = trimmed.substr(first, trimmed.find_last_not_of(" \t\r\n") - first + 1);
  }
  node.text = trimmed;
  return node;
}

XmlNode parse_document(const std::string& text) {
  XmlCursor cur{text};
  cur.skip_ws();
  while (!cur.eof() && (cur.starts_with("<?") || cur.starts_with("<!--"))) {
    if (cur.starts_with("<?")) cur.skip_prolog();
    else cur.skip_comment();
    cur.skip_ws();
  }
  XmlNode root = parse_element(cur);
  cur.skip_ws();
  if (!cur.eof()) cur.fail("trailing content after document element");
  return root;
}

const XmlNode& require(const XmlNode& parent, const std::string& name) {
  const XmlNode* node = parent.child(name);
  if (node == nullptr) throw std::invalid_argument("schema error: " + name);
  return *node;
}

double parse_number(const XmlNode& node) {
  const std::string& s = node.text;
  double value = 0.0;
  const auto result =
      std::from_chars(s.data(), s.data() + s.size(), value);
  if (result.ec != std::errc{} || result.ptr != s.data() + s.size()) {
    throw std::invalid_argument("schema error: bad number in <" + node.name +
                                ">: '" + s + "'");
  }
  return value;
}

std::string strip_image_extension(std::string name) {
  for (const char* ext : {".jpg", ".jpeg", ".png"}) {
    const std::size_t n = std::char_traits<char>::length(ext);
    if (name.size() > n && name.compare(name.size() - n, n, ext) == 0) {
      return name.substr(0, name.size() - n);
    }
  }
  return name;
}

std::string format_number(double v) {
  char buf[48];
  if (v == static_cast<double>(static_cast<long long>(v))) {
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
  } else {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
  }
  return buf;
}

}  // namespace

AnnotationRecord parse_voc_xml(const std::string& text) {
  const XmlNode root = parse_document(text);
  if (root.name != "annotation") {
    throw std::invalid_argument("schema error: annotation");
  }
  AnnotationRecord record;
  record.image_id = strip_image_extension(require(root, "filename").text);
  if (record.image_id.empty()) {
    throw std::invalid_argument("schema error: filename");
  }
  const XmlNode& size = require(root, "size");
  record.extent.width = parse_number(require(size, "width"));
  record.extent.height = parse_number(require(size, "height"));
  if (!record.extent.valid()) {
    throw std::invalid_argument("schema error: size");
  }
  for (const XmlNode& node : root.children) {
    if (node.name != "object") continue;
    AnnotatedObject obj;
    obj.class_name = require(node, "name").text;
    if (obj.class_name.empty()) {
      throw std::invalid_argument("schema error: name");
    }
    const XmlNode* difficult = node.child("difficult");
    obj.difficult = difficult != nullptr && parse_number(*difficult) != 0.0;
    const XmlNode& bndbox = require(node, "bndbox");
    // VOC pixels are 1-based inclusive; the continuous interval covered
    // by pixels [xmin, xmax] is (xmin-1, xmax].
    obj.xmin = parse_number(require(bndbox, "xmin")) - 1.0;
    obj.ymin = parse_number(require(bndbox, "ymin")) - 1.0;
    obj.xmax = parse_number(require(bndbox, "xmax"));
    obj.ymax = parse_number(require(bndbox, "ymax"));
    if (!(obj.xmin < obj.xmax) || !(obj.ymin < obj.ymax)) {
      throw std::invalid_argument("degenerate box");
    }
    record.objects.push_back(std::move(obj));
  }
  return record;
}

std::string write_voc_xml(const AnnotationRecord& record) {
  std::ostringstream out;
  out << "<annotation>\n";
  out << "  <filename>" << record.image_id << "</filename>\n";
  out << "  <size>\n";
  out << "    <width>" << format_number(record.extent.width) << "</width>\n";
  out << "    <height>" << format_number(record.extent.height) << "</height>\n";
  out << "    <depth>3</depth>\n";
  out << "  </size>\n";
  for (const AnnotatedObject& obj : record.objects) {
    out << "  <object>\n";
    out << "    <name>" << obj.class_name << "</name>\n";
    out << "    <difficult>" << (obj.difficult ? 1 : 0) << "</difficult>\n";
    out << "    <bndbox>\n";
    out << "      <xmin>" << format_number(obj.xmin + 1.0) << "</xmin>\n";
    out << "      <ymin>" << format_number(obj.ymin + 1.0) << "</ymin>\n";
    out << "      <xmax>" << format_number(obj.xmax) << "</xmax>\n";
    out << "      <ymax>" << format_number(obj.ymax) << "</ymax>\n";
    out << "    </bndbox>\n";
    out << "  </object>\n";
  }
  out << "</annotation>\n";
  return out.str();
}

std::string write_detections(const std::vector<DetectionRecord>& records) {
  std::ostringstream out;
  char buf[192];
  for (const DetectionRecord& r : records) {
    std::snprintf(buf, sizeof(buf), " %s %.6f %.6f %.6f %.6f %.6f\n",
                  r.class_name.c_str(), r.score, r.xmin, r.ymin, r.xmax,
                  r.ymax);
    out << r.image_id << buf;
  }
  return out.str();
}

std::vector<DetectionRecord> read_detections(const std::string& text) {
  std::vector<DetectionRecord> records;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    DetectionRecord r;
    std::string extra;
    if (!(fields >> r.image_id >> r.class_name >> r.score >> r.xmin >> r.ymin >>
          r.xmax >> r.ymax) ||
        (fields >> extra)) {
      throw std::runtime_error("malformed detection at line " +
                               std::to_string(line_no));
    }
    if (r.score < 0.0 || r.score > 1.0) {
      throw std::runtime_error("invalid score at line " +
                               std::to_string(line_no));
    }
    if (!(r.xmin < r.xmax) || !(r.ymin < r.ymax)) {
      throw std::runtime_error("degenerate box at line " +
                               std::to_string(line_no));
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::string write_trace(const std::vector<TraceRecord>& records) {
  std::ostringstream out;
  out << "detection_id,iteration,class,score,l_x,l_y,l_w,l_h\n";
  char buf[192];
  for (const TraceRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%zu,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  r.detection_id, r.iteration, r.label, r.score, r.box.x,
                  r.box.y, r.box.w, r.box.h);
    out << buf;
  }
  return out.str();
}

std::string write_proposals(const std::vector<ProposalRecord>& records) {
  std::ostringstream out;
  char buf[160];
  for (const ProposalRecord& r : records) {
    std::snprintf(buf, sizeof(buf), " %.6f %.6f %.6f %.6f\n", r.xmin, r.ymin,
                  r.xmax, r.ymax);
    out << r.image_id << buf;
  }
  return out.str();
}

std::vector<ProposalRecord> read_proposals(const std::string& text) {
  std::vector<ProposalRecord> records;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    ProposalRecord r;
    std::string extra;
    if (!(fields >> r.image_id >> r.xmin >> r.ymin >> r.xmax >> r.ymax) ||
        (fields >> extra)) {
      throw std::runtime_error("malformed proposal at line " +
                               std::to_string(line_no));
    }
    if (!(r.xmin < r.xmax) || !(r.ymin < r.ymax)) {
      throw std::runtime_error("degenerate box at line " +
                               std::to_string(line_no));
    }
    records.push_back(std::move(r));
  }
  return records;
}

NamedDataset to_scenes(const std::vector<AnnotationRecord>& annotations) {
  NamedDataset out;
  std::set<std::string> names;
  for (const AnnotationRecord& rec : annotations) {
    for (const AnnotatedObject& obj : rec.objects) names.insert(obj.class_name);
  }
  for (const std::string& name : names) {
    out.names.push_back(name);
    out.label_of[name] = static_cast<int>(out.names.size());
  }
  for (const AnnotationRecord& rec : annotations) {
    Scene scene;
    scene.id = rec.image_id;
    scene.extent = rec.extent;
    for (const AnnotatedObject& obj : rec.objects) {
      scene.objects.push_back(
          SceneObject{out.label_of.at(obj.class_name),
                      BBox::from_corners(obj.xmin, obj.ymin, obj.xmax, obj.ymax),
                      obj.difficult});
    }
    out.scenes.push_back(std::move(scene));
  }
  return out;
}

std::vector<EvalDetection> to_eval_detections(
    const std::vector<DetectionRecord>& records, const NamedDataset& dataset) {
  std::vector<EvalDetection> out;
  out.reserve(records.size());
  for (const DetectionRecord& r : records) {
    const auto it = dataset.label_of.find(r.class_name);
    if (it == dataset.label_of.end()) continue;  // class absent from GT
    out.push_back(EvalDetection{
        r.image_id, it->second, r.score,
        BBox::from_corners(r.xmin, r.ymin, r.xmax, r.ymax)});
  }
  return out;
}

}  // namespace recdet
