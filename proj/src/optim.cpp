#include "spdnet/optim.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "spdnet/errors.hpp"

namespace spdnet {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train config: learning_rate must be positive");
  if (epochs < 0) throw ConfigError("train config: epochs must be >= 0");
  if (threads < 1) throw ConfigError("train config: threads must be >= 1");
}

Matrix stiefel_tangent(const Matrix& w, const Matrix& euclid_grad) {
  if (w.rows() != euclid_grad.rows() || w.cols() != euclid_grad.cols())
    throw InvalidInput("stiefel_tangent: shape mismatch");
  const Matrix gw = euclid_grad * w.transpose();
  return euclid_grad - 0.5 * (gw + gw.transpose()) * w;
}

Matrix stiefel_step(const Matrix& w, const Matrix& euclid_grad, double lr) {
  if (!(lr > 0.0)) throw InvalidInput("stiefel_step: learning rate must be positive");
  return qr_orthonormalize(w - lr * stiefel_tangent(w, euclid_grad));
}

Matrix euclid_step(const Matrix& param, const Matrix& grad, double lr) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw InvalidInput("euclid_step: shape mismatch");
  return param - lr * grad;
}

NetworkParams apply_gradients(const NetworkParams& params, const NetworkParams& grads, double lr) {
  NetworkParams out;
  for (int l = 0; l < 3; ++l)
    out.conv.label_weights[l] =
        euclid_step(params.conv.label_weights[l], grads.conv.label_weights[l], lr);
  if (params.spat.weights.size() != grads.spat.weights.size())
    throw InvalidInput("apply_gradients: spatial weight count mismatch");
  for (std::size_t i = 0; i < params.spat.weights.size(); ++i)
    out.spat.weights.push_back(stiefel_step(params.spat.weights[i], grads.spat.weights[i], lr));
  out.fc_weight = euclid_step(params.fc_weight, grads.fc_weight, lr);
  out.fc_bias = euclid_step(params.fc_bias, grads.fc_bias, lr);
  return out;
}

void write_metrics_csv_header(std::ostream& os) {
  os << "epoch,mean_loss,train_accuracy,wall_seconds\n";
}

void write_metrics_csv_row(std::ostream& os, const EpochMetrics& m) {
  const auto old = os.precision(17);
  os << m.epoch << ',' << m.mean_loss << ',' << m.train_accuracy << ',';
  os.precision(6);
  os << m.wall_seconds << '\n';
  os.precision(old);
}

TrainResult train(const std::vector<GestureSequence>& dataset, const NetworkConfig& net_cfg,
                  const TrainConfig& train_cfg, NetworkParams init, const TrainHooks& hooks) {
  net_cfg.validate();
  train_cfg.validate();
  if (dataset.empty()) throw InvalidInput("train: empty dataset");

  TrainResult result{std::move(init), {}};
  std::mt19937_64 rng(train_cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (train_cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);

    EpochMetrics m;
    m.epoch = epoch;
    double loss_sum = 0.0;
    int correct = 0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(train_cfg.batch_size), ++batch_index) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(train_cfg.batch_size));
      std::vector<const GestureSequence*> batch;
      for (std::size_t k = start; k < stop; ++k) batch.push_back(&dataset[order[k]]);

      LossAndGrads lg;
      try {
        lg = loss_and_backward(batch, result.params, net_cfg, train_cfg.threads);
        result.params = apply_gradients(result.params, lg.grads, train_cfg.learning_rate);
      } catch (const SpectralDomainError& e) {
        std::ostringstream os;
        os << "train: epoch " << epoch << ", batch " << batch_index << ": " << e.what();
        throw SpectralDomainError(os.str(), e.eigenvalue());
      } catch (const RankError& e) {
        std::ostringstream os;
        os << "train: epoch " << epoch << ", batch " << batch_index << ": " << e.what();
        throw RankError(os.str());
      }
      loss_sum += lg.loss * static_cast<double>(batch.size());
      correct += lg.correct;
      m.max_stiefel_violation =
          std::max(m.max_stiefel_violation, stiefel_violation(result.params.spat));
      if (hooks.after_step) hooks.after_step(result.params);
    }
    if (!(m.max_stiefel_violation < 1e-8)) {
      std::ostringstream os;
      os << "train: Stiefel constraint violated (" << m.max_stiefel_violation << ") in epoch "
         << epoch;
      throw Error(os.str());
    }
    m.mean_loss = loss_sum / static_cast<double>(dataset.size());
    m.train_accuracy = 100.0 * correct / static_cast<double>(dataset.size());
    m.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.metrics.push_back(m);
    if (hooks.after_epoch) hooks.after_epoch(m, result.params);
  }
  return result;
}

TrainResult train(const std::vector<GestureSequence>& dataset, const NetworkConfig& net_cfg,
                  const TrainConfig& train_cfg, const TrainHooks& hooks) {
  return train(dataset, net_cfg, train_cfg, init_params(net_cfg, train_cfg.seed), hooks);
}

}  // namespace spdnet
