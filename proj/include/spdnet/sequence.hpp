#pragma once

#include <vector>

#include "spdnet/skeleton.hpp"

namespace spdnet {

// A gesture: per-frame 22x3 joint positions plus its labels. `label_14` is
// the gesture class and `label_28` the gesture/finger-mode class; both are
// 1-based.
struct GestureSequence {
  std::vector<Frame> frames;
  int label_14 = 0;
  int label_28 = 0;
  int subject = 0;
  int trial = 0;

  int num_frames() const { return static_cast<int>(frames.size()); }
  // Label for a classification problem with `num_classes` classes.
  int label(int num_classes) const { return num_classes == 28 ? label_28 : label_14; }
};

}  // namespace spdnet
