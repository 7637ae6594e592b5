#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "spdnet/linalg.hpp"
#include "spdnet/sequence.hpp"
#include "spdnet/skeleton.hpp"
#include "spdnet/spd_ops.hpp"

namespace spdnet {

struct NetworkConfig {
  int channels = 9;          // graph-conv output features per joint
  int pyramid_levels = 3;
  double rectify_eps = 1e-4;
  int spat_out_dim = 56;
  int num_classes = 14;
  int sequence_length = 171;
  double temporal_regularizer = 1e-4;
  // Reduced configurations for small-scale checks. The full network uses
  // all five fingers with four joints each.
  int num_fingers = kNumFingers;
  int joints_per_finger = kJointsPerFinger;

  int frame_spd_dim() const { return channels + 1; }
  int half_vec_dim() const { return half_vec_length(frame_spd_dim()); }
  int temporal_dim() const { return half_vec_dim() + 1; }
  int num_ranges() const { return pyramid_levels * (pyramid_levels + 1) / 2; }
  int num_spat_inputs() const { return num_fingers * num_ranges(); }
  int feature_dim() const { return half_vec_length(spat_out_dim); }

  // Throws ConfigError when fields are inconsistent.
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

struct NetworkParams {
  ConvParams conv;
  SpatAggParams spat;
  Matrix fc_weight;  // num_classes x feature_dim
  Vector fc_bias;

  static NetworkParams zeros_like(const NetworkParams& p);
  NetworkParams& operator+=(const NetworkParams& o);
  NetworkParams& operator*=(double s);
  bool operator==(const NetworkParams& o) const;
};

/// Stiefel weights are QR-orthonormalized standard normal matrices; conv and
/// FC weights are uniform in [-1, 1] / sqrt(fan_in); the FC bias is zero.
NetworkParams init_params(const NetworkConfig& cfg, std::uint64_t seed);

// Frame range of one pyramid cell, 1-based and inclusive.
struct FrameRange {
  int begin;
  int end;
  bool operator==(const FrameRange&) const = default;
};
using PyramidIndex = std::vector<FrameRange>;

/// Level i (1..levels) contributes i ranges, range j being
/// (floor((j-1) n / i) + 1, floor(j n / i)). Levels are listed in order.
PyramidIndex pyramid_split(int num_frames, int levels);

// Forward intermediates consumed by the backward pass. Finger-major
// indexing: [s][t] for per-frame data, [s * num_ranges + q] for pyramid
// cells.
struct LayerTape {
  std::vector<FrameFeatures> features;            // per frame, d1 x 20
  std::vector<std::vector<EigenPair>> frame_eig;  // eigen pair of each GaussAgg output
  std::vector<Matrix> log_vectors;                // per finger, half_vec_dim x n_F
  PyramidIndex ranges;
  std::vector<SpdMatrix> temporal;                // per pyramid cell
  SpdMatrix final_spd;
  EigenPair final_eig;
  Vector feature;
  Vector logits;
};

struct ForwardResult {
  Vector logits;
  SpdMatrix final_spd;
  LayerTape tape;
};

ForwardResult forward(const GestureSequence& seq, const NetworkParams& params,
                      const NetworkConfig& cfg);

/// Half-vectorized matrix logarithm of the spatial aggregation output; the
/// same vector is the FC input in forward.
Vector extract_feature(const GestureSequence& seq, const NetworkParams& params,
                       const NetworkConfig& cfg);

/// Gradients of a scalar loss with respect to every parameter, given the
/// gradient with respect to the logits of one forward pass.
NetworkParams backward(const GestureSequence& seq, const NetworkParams& params,
                       const NetworkConfig& cfg, const LayerTape& tape, const Vector& grad_logits);

struct LossAndGrads {
  double loss = 0.0;
  NetworkParams grads;  // Euclidean, averaged over the batch
  int correct = 0;      // argmax(logits) == label count
};

/// Mean softmax cross-entropy over the batch and its gradients. Per-item
/// gradients are reduced in batch order regardless of `threads`.
LossAndGrads loss_and_backward(const std::vector<const GestureSequence*>& batch,
                               const NetworkParams& params, const NetworkConfig& cfg,
                               int threads = 1);

/// Softmax cross-entropy of one logit vector and its gradient; `label` is
/// 1-based.
std::pair<double, Vector> softmax_cross_entropy(const Vector& logits, int label);

}  // namespace spdnet
