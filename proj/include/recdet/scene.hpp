#pragma once

#include <string>
#include <vector>

#include "recdet/geometry.hpp"

namespace recdet {

struct SceneObject {
  int label = 1;  // 1..K
  BBox box;
  bool difficult = false;
};

// Ground truth for one synthetic image: an extent plus labeled boxes.
struct Scene {
  std::string id;
  ImageExtent extent;
  std::vector<SceneObject> objects;
};

}  // namespace recdet
