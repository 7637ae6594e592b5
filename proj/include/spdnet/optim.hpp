#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "spdnet/network.hpp"

namespace spdnet {

struct TrainConfig {
  int batch_size = 30;
  double learning_rate = 0.01;
  int epochs = 20;
  std::uint64_t seed = 0;
  bool shuffle = true;
  int threads = 1;

  void validate() const;
};

/// Projection of a Euclidean gradient onto the tangent space of the
/// row-orthonormal matrices at W: G - sym(G W^T) W.
Matrix stiefel_tangent(const Matrix& w, const Matrix& euclid_grad);

/// One Riemannian SGD step: tangent projection followed by the QR
/// retraction. Throws RankError if the retraction collapses.
Matrix stiefel_step(const Matrix& w, const Matrix& euclid_grad, double lr);

Matrix euclid_step(const Matrix& param, const Matrix& grad, double lr);

/// Stiefel steps for the spatial aggregation weights and plain SGD for the
/// rest. Returns the updated parameters.
NetworkParams apply_gradients(const NetworkParams& params, const NetworkParams& grads, double lr);

struct EpochMetrics {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;  // percent, from the forward passes of the epoch
  double wall_seconds = 0.0;
  double max_stiefel_violation = 0.0;  // worst |W W^T - I| after any step
};

void write_metrics_csv_header(std::ostream& os);
void write_metrics_csv_row(std::ostream& os, const EpochMetrics& m);

struct TrainHooks {
  std::function<void(const NetworkParams&)> after_step;
  std::function<void(const EpochMetrics&, const NetworkParams&)> after_epoch;
};

struct TrainResult {
  NetworkParams params;
  std::vector<EpochMetrics> metrics;
};

/// Mini-batch training from `init`. Each epoch shuffles with a generator
/// seeded from train_cfg.seed, so reruns are bit-identical.
TrainResult train(const std::vector<GestureSequence>& dataset, const NetworkConfig& net_cfg,
                  const TrainConfig& train_cfg, NetworkParams init, const TrainHooks& hooks = {});

/// Same, starting from init_params(net_cfg, train_cfg.seed).
TrainResult train(const std::vector<GestureSequence>& dataset, const NetworkConfig& net_cfg,
                  const TrainConfig& train_cfg, const TrainHooks& hooks = {});

}  // namespace spdnet
