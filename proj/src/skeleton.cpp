#include "spdnet/skeleton.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "spdnet/errors.hpp"

namespace spdnet {

HandGraph HandGraph::standard() {
  HandGraph g;
  g.neighbors_.assign(kNumJoints, {});
  auto connect = [&](int a1, int b1) {  // 1-based
    g.neighbors_[a1 - 1].push_back(b1 - 1);
    g.neighbors_[b1 - 1].push_back(a1 - 1);
  };
  for (int i = 0; i < kNumJoints; ++i) g.neighbors_[i].push_back(i);
  connect(1, 2);
  for (int s = 0; s < kNumFingers; ++s) {
    const auto joints = finger_joints(s);
    connect(2, joints[0]);
    for (int k = 0; k + 1 < kJointsPerFinger; ++k) connect(joints[k], joints[k + 1]);
  }
  for (auto& n : g.neighbors_) std::sort(n.begin(), n.end());

  for (int i = kFirstFingerJoint - 1; i < kNumJoints; ++i) {
    for (int j : g.neighbors_[i]) {
      const int diff = j - i;
      if (std::abs(diff) > 1) continue;
      const int label = diff == 0 ? 0 : (diff == 1 ? 1 : 2);
      g.taps_.push_back({i, j, label});
    }
  }
  return g;
}

bool HandGraph::adjacent(int a, int b) const {
  const auto& n = neighbors_.at(static_cast<std::size_t>(a));
  return std::binary_search(n.begin(), n.end(), b);
}

namespace {

void check_conv_shapes(const Frame& frame, const ConvParams& params, const HandGraph& graph) {
  if (frame.rows() != graph.num_joints() || frame.cols() != 3) {
    std::ostringstream os;
    os << "graph_conv: expected a " << graph.num_joints() << "x3 frame, got " << frame.rows()
       << "x" << frame.cols();
    throw InvalidInput(os.str());
  }
  const auto d1 = params.label_weights[0].rows();
  for (const auto& w : params.label_weights)
    if (w.rows() != d1 || w.cols() != 3 || d1 < 1)
      throw InvalidInput("graph_conv: filter weights must be d1 x 3 for every label");
}

}  // namespace

FrameFeatures graph_conv(const Frame& frame, const ConvParams& params, const HandGraph& graph) {
  check_conv_shapes(frame, params, graph);
  if (!frame.allFinite()) throw InvalidInput("graph_conv: non-finite joint coordinates");
  const int first = kFirstFingerJoint - 1;
  FrameFeatures out = Matrix::Zero(params.channels(), graph.num_joints() - first);
  for (const auto& tap : graph.taps())
    out.col(tap.node - first).noalias() +=
        params.label_weights[tap.label] * frame.row(tap.neighbor).transpose();
  return out;
}

GraphConvGrads graph_conv_backward(const Frame& frame, const ConvParams& params,
                                   const HandGraph& graph, const FrameFeatures& grad_out) {
  check_conv_shapes(frame, params, graph);
  const int first = kFirstFingerJoint - 1;
  if (grad_out.rows() != params.channels() || grad_out.cols() != graph.num_joints() - first)
    throw InvalidInput("graph_conv_backward: gradient shape mismatch");
  GraphConvGrads g;
  g.coords = Matrix::Zero(frame.rows(), 3);
  for (auto& w : g.label_weights) w = Matrix::Zero(params.channels(), 3);
  for (const auto& tap : graph.taps()) {
    const auto go = grad_out.col(tap.node - first);
    g.coords.row(tap.neighbor).noalias() +=
        (params.label_weights[tap.label].transpose() * go).transpose();
    g.label_weights[tap.label].noalias() += go * frame.row(tap.neighbor);
  }
  return g;
}

std::array<int, kJointsPerFinger> finger_joints(int s) {
  if (s < 0 || s >= kNumFingers) throw InvalidInput("finger_joints: finger index out of range");
  const int base = kFirstFingerJoint + kJointsPerFinger * s;
  return {base, base + 1, base + 2, base + 3};
}

std::array<std::vector<Matrix>, kNumFingers> finger_partition(
    const std::vector<FrameFeatures>& seq) {
  std::array<std::vector<Matrix>, kNumFingers> out;
  for (const auto& f : seq) {
    if (f.cols() != kNumFingerJoints)
      throw InvalidInput("finger_partition: features must cover joints 3..22");
    for (int s = 0; s < kNumFingers; ++s)
      out[s].push_back(f.middleCols((finger_joints(s)[0] - kFirstFingerJoint), kJointsPerFinger));
  }
  return out;
}

}  // namespace spdnet
