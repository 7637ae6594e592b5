#pragma once

#include <array>
#include <vector>

#include "spdnet/linalg.hpp"

namespace spdnet {

inline constexpr int kNumJoints = 22;
inline constexpr int kNumFingers = 5;
inline constexpr int kJointsPerFinger = 4;
inline constexpr int kFirstFingerJoint = 3;  // 1-based; joints 1 and 2 are wrist and palm
inline constexpr int kNumFingerJoints = kNumJoints - kFirstFingerJoint + 1;

// Joint positions of one frame, one row per joint (22 x 3).
using Frame = Matrix;

// Graph-conv output for one frame: column k holds the d1 features of joint
// k + 3 (1-based), so the matrix is d1 x 20.
using FrameFeatures = Matrix;

// One tap of the graph convolution: output node, contributing node and the
// weight label (0 = self, 1 = successor, 2 = predecessor). Node indices are
// 0-based.
struct ConvTap {
  int node;
  int neighbor;
  int label;
};

/// Hand skeleton graph: wrist (1), palm (2), five chains of four joints
/// running base to tip. The palm is connected to the wrist and to every
/// finger base.
class HandGraph {
 public:
  static HandGraph standard();

  int num_joints() const { return static_cast<int>(neighbors_.size()); }
  // 0-based neighbor lists; every node is its own neighbor.
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }
  bool adjacent(int a, int b) const;
  // Taps of the convolution for output nodes 3..22: graph neighbors whose
  // index differs by at most one.
  const std::vector<ConvTap>& taps() const { return taps_; }

 private:
  std::vector<std::vector<int>> neighbors_;
  std::vector<ConvTap> taps_;
};

// Filter weights shared by all nodes and frames. label_weights[l] is
// d1 x 3; row c is the filter applied to a neighbor with label l for
// channel c.
struct ConvParams {
  std::array<Matrix, 3> label_weights;
  int channels() const { return static_cast<int>(label_weights[0].rows()); }
};

FrameFeatures graph_conv(const Frame& frame, const ConvParams& params, const HandGraph& graph);

struct GraphConvGrads {
  Frame coords;                          // 22 x 3
  std::array<Matrix, 3> label_weights;  // each d1 x 3
};

GraphConvGrads graph_conv_backward(const Frame& frame, const ConvParams& params,
                                   const HandGraph& graph, const FrameFeatures& grad_out);

/// 1-based joint indices of finger `s` (0..4): {3,4,5,6}, {7,8,9,10}, ...
std::array<int, kJointsPerFinger> finger_joints(int s);

/// Splits per-frame features into five per-finger sequences; each entry is
/// d1 x 4 with the finger's joints in index order.
std::array<std::vector<Matrix>, kNumFingers> finger_partition(
    const std::vector<FrameFeatures>& seq);

}  // namespace spdnet
