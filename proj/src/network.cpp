#include "spdnet/network.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "spdnet/errors.hpp"
#include "spdnet/parallel.hpp"

namespace spdnet {

void NetworkConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("network config: " + msg); };
  if (channels < 1) fail("channels must be >= 1");
  if (pyramid_levels < 1) fail("pyramid_levels must be >= 1");
  if (!(rectify_eps > 0.0)) fail("rectify_eps must be positive");
  if (num_classes < 2) fail("num_classes must be >= 2");
  if (sequence_length < pyramid_levels) fail("sequence_length must be >= pyramid_levels");
  if (temporal_regularizer < 0.0) fail("temporal_regularizer must be >= 0");
  if (num_fingers < 1 || num_fingers > kNumFingers) fail("num_fingers must be in [1, 5]");
  if (joints_per_finger < 2 || joints_per_finger > kJointsPerFinger)
    fail("joints_per_finger must be in [2, 4]");
  if (spat_out_dim < 1 || spat_out_dim > temporal_dim()) {
    std::ostringstream os;
    os << "spat_out_dim " << spat_out_dim << " must be in [1, " << temporal_dim() << "]";
    fail(os.str());
  }
}

NetworkParams NetworkParams::zeros_like(const NetworkParams& p) {
  NetworkParams z;
  for (int l = 0; l < 3; ++l)
    z.conv.label_weights[l] = Matrix::Zero(p.conv.label_weights[l].rows(), 3);
  for (const auto& w : p.spat.weights) z.spat.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
  z.fc_weight = Matrix::Zero(p.fc_weight.rows(), p.fc_weight.cols());
  z.fc_bias = Vector::Zero(p.fc_bias.size());
  return z;
}

NetworkParams& NetworkParams::operator+=(const NetworkParams& o) {
  for (int l = 0; l < 3; ++l) conv.label_weights[l] += o.conv.label_weights[l];
  for (std::size_t i = 0; i < spat.weights.size(); ++i) spat.weights[i] += o.spat.weights[i];
  fc_weight += o.fc_weight;
  fc_bias += o.fc_bias;
  return *this;
}

NetworkParams& NetworkParams::operator*=(double s) {
  for (auto& w : conv.label_weights) w *= s;
  for (auto& w : spat.weights) w *= s;
  fc_weight *= s;
  fc_bias *= s;
  return *this;
}

bool NetworkParams::operator==(const NetworkParams& o) const {
  auto same = [](const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  for (int l = 0; l < 3; ++l)
    if (!same(conv.label_weights[l], o.conv.label_weights[l])) return false;
  if (spat.weights.size() != o.spat.weights.size()) return false;
  for (std::size_t i = 0; i < spat.weights.size(); ++i)
    if (!same(spat.weights[i], o.spat.weights[i])) return false;
  return same(fc_weight, o.fc_weight) && same(fc_bias, o.fc_bias);
}

NetworkParams init_params(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  NetworkParams p;
  const double conv_scale = 1.0 / std::sqrt(9.0);  // 3 labels x 3 coordinates
  for (auto& w : p.conv.label_weights) {
    w.resize(cfg.channels, 3);
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = conv_scale * uni(rng);
  }
  for (int i = 0; i < cfg.num_spat_inputs(); ++i) {
    Matrix g(cfg.spat_out_dim, cfg.temporal_dim());
    for (Eigen::Index k = 0; k < g.size(); ++k) g(k) = normal(rng);
    p.spat.weights.push_back(qr_orthonormalize(g));
  }
  const double fc_scale = 1.0 / std::sqrt(static_cast<double>(cfg.feature_dim()));
  p.fc_weight.resize(cfg.num_classes, cfg.feature_dim());
  for (Eigen::Index i = 0; i < p.fc_weight.size(); ++i) p.fc_weight(i) = fc_scale * uni(rng);
  p.fc_bias = Vector::Zero(cfg.num_classes);
  return p;
}

PyramidIndex pyramid_split(int num_frames, int levels) {
  if (levels < 1) throw InvalidInput("pyramid_split: levels must be >= 1");
  if (num_frames < levels) {
    std::ostringstream os;
    os << "pyramid_split: " << num_frames << " frames cannot be split into " << levels
       << " levels";
    throw InvalidInput(os.str());
  }
  PyramidIndex out;
  for (int i = 1; i <= levels; ++i)
    for (int j = 1; j <= i; ++j)
      out.push_back({(j - 1) * num_frames / i + 1, j * num_frames / i});
  return out;
}

namespace {

const HandGraph& hand_graph() {
  static const HandGraph graph = HandGraph::standard();
  return graph;
}

void check_params(const NetworkParams& p, const NetworkConfig& cfg) {
  for (const auto& w : p.conv.label_weights)
    if (w.rows() != cfg.channels || w.cols() != 3)
      throw ConfigError("network params: conv weights do not match channels");
  if (static_cast<int>(p.spat.weights.size()) != cfg.num_spat_inputs())
    throw ConfigError("network params: expected " + std::to_string(cfg.num_spat_inputs()) +
                      " spatial aggregation weights, got " +
                      std::to_string(p.spat.weights.size()));
  for (const auto& w : p.spat.weights)
    if (w.rows() != cfg.spat_out_dim || w.cols() != cfg.temporal_dim())
      throw ConfigError("network params: spatial aggregation weight has wrong shape");
  if (p.fc_weight.rows() != cfg.num_classes || p.fc_weight.cols() != cfg.feature_dim() ||
      p.fc_bias.size() != cfg.num_classes)
    throw ConfigError("network params: FC layer does not match num_classes/feature_dim");
}

Matrix finger_samples(const FrameFeatures& f, int finger, int joints) {
  return f.middleCols(finger_joints(finger)[0] - kFirstFingerJoint, joints);
}

GaussAggConfig frame_agg_config() { return {Normalization::kUnbiased, 0.0}; }

GaussAggConfig temporal_agg_config(const NetworkConfig& cfg) {
  return {Normalization::kBiased, cfg.temporal_regularizer};
}

[[noreturn]] void rethrow_with_context(const SpectralDomainError& e, const std::string& where) {
  throw SpectralDomainError(where + ": " + e.what(), e.eigenvalue());
}

#ifndef NDEBUG
void debug_check_pd(const SymmetricMatrix& m, const std::string& where) {
  Eigen::LLT<Matrix> llt(m.matrix());
  if (llt.info() != Eigen::Success)
    throw SpectralDomainError(where + ": matrix is not positive definite", 0.0);
}
#endif

}  // namespace

ForwardResult forward(const GestureSequence& seq, const NetworkParams& params,
                      const NetworkConfig& cfg) {
  cfg.validate();
  check_params(params, cfg);
  if (seq.num_frames() != cfg.sequence_length) {
    std::ostringstream os;
    os << "forward: sequence has " << seq.num_frames() << " frames, network expects "
       << cfg.sequence_length;
    throw InvalidInput(os.str());
  }
  const HandGraph& graph = hand_graph();
  const int n_f = cfg.sequence_length;
  const int n_q = cfg.num_ranges();

  LayerTape tape;
  tape.features.reserve(static_cast<std::size_t>(n_f));
  for (const auto& frame : seq.frames) tape.features.push_back(graph_conv(frame, params.conv, graph));

  tape.frame_eig.assign(static_cast<std::size_t>(cfg.num_fingers), {});
  tape.log_vectors.assign(static_cast<std::size_t>(cfg.num_fingers),
                          Matrix(cfg.half_vec_dim(), n_f));
  for (int s = 0; s < cfg.num_fingers; ++s) {
    auto& eigs = tape.frame_eig[s];
    eigs.reserve(static_cast<std::size_t>(n_f));
    for (int t = 0; t < n_f; ++t) {
      const Matrix samples = finger_samples(tape.features[t], s, cfg.joints_per_finger);
      const SymmetricMatrix x2 = gauss_agg(samples, frame_agg_config());
      eigs.push_back(sym_eig(x2));
      // ReEig followed by LogEig shares the eigenvectors of the GaussAgg output.
      const EigenPair rectified = re_eig_spectrum(eigs.back(), cfg.rectify_eps);
#ifndef NDEBUG
      if (rectified.values.minCoeff() < cfg.rectify_eps)
        throw SpectralDomainError("forward: rectified eigenvalue below threshold",
                                  rectified.values.minCoeff());
#endif
      tape.log_vectors[s].col(t) = half_vec(log_eig(rectified)).values;
    }
  }

  tape.ranges = pyramid_split(n_f, cfg.pyramid_levels);
  tape.temporal.reserve(static_cast<std::size_t>(cfg.num_spat_inputs()));
  for (int s = 0; s < cfg.num_fingers; ++s) {
    for (int q = 0; q < n_q; ++q) {
      const FrameRange r = tape.ranges[q];
      tape.temporal.push_back(gauss_agg(
          tape.log_vectors[s].middleCols(r.begin - 1, r.end - r.begin + 1),
          temporal_agg_config(cfg)));
#ifndef NDEBUG
      debug_check_pd(tape.temporal.back(), "forward: temporal aggregation");
#endif
    }
  }

  tape.final_spd = spd_spat_agg(tape.temporal, params.spat);
  tape.final_eig = sym_eig(tape.final_spd);
  try {
    tape.feature = half_vec(log_eig(tape.final_eig)).values;
  } catch (const SpectralDomainError& e) {
    rethrow_with_context(e, "forward: log_eig of spatial aggregation output");
  }
  tape.logits = params.fc_weight * tape.feature + params.fc_bias;

  ForwardResult out;
  out.logits = tape.logits;
  out.final_spd = tape.final_spd;
  out.tape = std::move(tape);
  return out;
}

Vector extract_feature(const GestureSequence& seq, const NetworkParams& params,
                       const NetworkConfig& cfg) {
  return forward(seq, params, cfg).tape.feature;
}

NetworkParams backward(const GestureSequence& seq, const NetworkParams& params,
                       const NetworkConfig& cfg, const LayerTape& tape, const Vector& grad_logits) {
  if (grad_logits.size() != cfg.num_classes)
    throw InvalidInput("backward: gradient length does not match num_classes");
  const HandGraph& graph = hand_graph();
  const int n_f = cfg.sequence_length;
  const int n_q = cfg.num_ranges();
  NetworkParams g = NetworkParams::zeros_like(params);

  g.fc_weight.noalias() = grad_logits * tape.feature.transpose();
  g.fc_bias = grad_logits;
  const Vector grad_feature = params.fc_weight.transpose() * grad_logits;

  const SymmetricMatrix grad_log_final =
      half_vec_adjoint({cfg.spat_out_dim, grad_feature});
  const SymmetricMatrix grad_final = log_eig_backward(tape.final_eig, grad_log_final);
  SpatAggGrads spat = spd_spat_agg_backward(tape.temporal, params.spat, grad_final);
  g.spat.weights = std::move(spat.weights);

  std::vector<FrameFeatures> grad_features(static_cast<std::size_t>(n_f),
                                           Matrix::Zero(cfg.channels, kNumFingerJoints));
  for (int s = 0; s < cfg.num_fingers; ++s) {
    Matrix grad_log = Matrix::Zero(cfg.half_vec_dim(), n_f);
    for (int q = 0; q < n_q; ++q) {
      const FrameRange r = tape.ranges[q];
      const int len = r.end - r.begin + 1;
      grad_log.middleCols(r.begin - 1, len) += gauss_agg_backward(
          tape.log_vectors[s].middleCols(r.begin - 1, len), temporal_agg_config(cfg),
          spat.inputs[static_cast<std::size_t>(s * n_q + q)]);
    }
    const int col0 = finger_joints(s)[0] - kFirstFingerJoint;
    for (int t = 0; t < n_f; ++t) {
      const EigenPair& eig = tape.frame_eig[s][t];
      const EigenPair rectified = re_eig_spectrum(eig, cfg.rectify_eps);
      const SymmetricMatrix grad_rect =
          log_eig_backward(rectified, half_vec_adjoint({cfg.frame_spd_dim(), grad_log.col(t)}));
      const SymmetricMatrix grad_x2 = re_eig_backward(eig, cfg.rectify_eps, grad_rect);
      const Matrix samples = finger_samples(tape.features[t], s, cfg.joints_per_finger);
      grad_features[t].middleCols(col0, cfg.joints_per_finger) +=
          gauss_agg_backward(samples, frame_agg_config(), grad_x2);
    }
  }

  for (int t = 0; t < n_f; ++t) {
    const GraphConvGrads gc = graph_conv_backward(seq.frames[t], params.conv, graph, grad_features[t]);
    for (int l = 0; l < 3; ++l) g.conv.label_weights[l] += gc.label_weights[l];
  }
  return g;
}

std::pair<double, Vector> softmax_cross_entropy(const Vector& logits, int label) {
  if (label < 1 || label > logits.size()) {
    std::ostringstream os;
    os << "softmax_cross_entropy: label " << label << " outside [1, " << logits.size() << "]";
    throw InvalidInput(os.str());
  }
  const double shift = logits.maxCoeff();
  const Vector e = (logits.array() - shift).exp().matrix();
  const double z = e.sum();
  Vector grad = e / z;
  const double loss = std::log(z) - (logits(label - 1) - shift);
  grad(label - 1) -= 1.0;
  return {loss, grad};
}

LossAndGrads loss_and_backward(const std::vector<const GestureSequence*>& batch,
                               const NetworkParams& params, const NetworkConfig& cfg,
                               int threads) {
  if (batch.empty()) throw InvalidInput("loss_and_backward: empty batch");
  const int n = static_cast<int>(batch.size());
  std::vector<NetworkParams> item_grads(static_cast<std::size_t>(n));
  std::vector<double> item_loss(static_cast<std::size_t>(n));
  std::vector<int> item_correct(static_cast<std::size_t>(n));

  parallel_for(n, threads, [&](int i) {
    const GestureSequence& seq = *batch[static_cast<std::size_t>(i)];
    const int label = seq.label(cfg.num_classes);
    ForwardResult fr = forward(seq, params, cfg);
    auto [loss, grad_logits] = softmax_cross_entropy(fr.logits, label);
    Eigen::Index best = 0;
    fr.logits.maxCoeff(&best);
    item_loss[i] = loss;
    item_correct[i] = static_cast<int>(best) + 1 == label ? 1 : 0;
    item_grads[i] = backward(seq, params, cfg, fr.tape, grad_logits);
  });

  LossAndGrads out;
  out.grads = NetworkParams::zeros_like(params);
  for (int i = 0; i < n; ++i) {
    out.loss += item_loss[i];
    out.correct += item_correct[i];
    out.grads += item_grads[i];
  }
  out.loss /= n;
  out.grads *= 1.0 / n;
  return out;
}

}  // namespace spdnet
