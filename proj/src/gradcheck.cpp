#include "spdnet/gradcheck.hpp"

#include <algorithm>
#include <random>

#include "spdnet/errors.hpp"
#include "spdnet/network.hpp"
#include "spdnet/skeleton.hpp"
#include "spdnet/spd_ops.hpp"

namespace spdnet {

Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h) {
  Matrix g(x.rows(), x.cols());
  Matrix xp = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double v = xp(k);
    xp(k) = v + h;
    const double fp = f(xp);
    xp(k) = v - h;
    const double fm = f(xp);
    xp(k) = v;
    g(k) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix numeric_gradient_symmetric(const std::function<double(const Matrix&)>& f,
                                  const Matrix& x, double h) {
  const Eigen::Index n = x.rows();
  Matrix g(n, n);
  Matrix xp = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = xp(i, j);
      auto set = [&](double value) {
        xp(i, j) = value;
        xp(j, i) = value;
      };
      set(v + h);
      const double fp = f(xp);
      set(v - h);
      const double fm = f(xp);
      set(v);
      const double d = (fp - fm) / (2.0 * h);
      if (i == j) {
        g(i, i) = d;
      } else {
        g(i, j) = 0.5 * d;
        g(j, i) = 0.5 * d;
      }
    }
  }
  return g;
}

double relative_error(const Matrix& analytic, const Matrix& numeric) {
  const double denom = std::max({analytic.norm(), numeric.norm(), 1e-12});
  return (analytic - numeric).norm() / denom;
}

namespace {

using Rng = std::mt19937_64;

Matrix uniform(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = u(rng);
  return m;
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Matrix random_symmetric(Rng& rng, int d) {
  const Matrix a = uniform(rng, d, d);
  return 0.5 * (a + a.transpose());
}

Matrix random_orthonormal(Rng& rng, int rows, int cols) {
  return qr_orthonormalize(uniform(rng, rows, cols));
}

Matrix with_spectrum(Rng& rng, const Vector& values) {
  const int d = static_cast<int>(values.size());
  const Matrix q = random_orthonormal(rng, d, d);
  return q.transpose() * values.asDiagonal() * q;
}

struct Tracker {
  double worst = 0.0;
  double scale = 1.0;
  void check(const Matrix& analytic, const Matrix& numeric) {
    worst = std::max(worst, relative_error(scale * analytic, numeric));
  }
};

double check_graph_conv(Rng& rng, const GradcheckOptions& o, Tracker& t) {
  const HandGraph graph = HandGraph::standard();
  const int d1 = uniform_int(rng, 1, 6);
  ConvParams p;
  for (auto& w : p.label_weights) w = uniform(rng, d1, 3);
  const Matrix frame = uniform(rng, kNumJoints, 3);
  const Matrix c = uniform(rng, d1, kNumFingerJoints);
  const GraphConvGrads g = graph_conv_backward(frame, p, graph, c);
  t.check(g.coords, numeric_gradient(
                        [&](const Matrix& x) { return frobenius_dot(c, graph_conv(x, p, graph)); },
                        frame, o.step));
  for (int l = 0; l < 3; ++l) {
    auto f = [&](const Matrix& w) {
      ConvParams q = p;
      q.label_weights[l] = w;
      return frobenius_dot(c, graph_conv(frame, q, graph));
    };
    t.check(g.label_weights[l], numeric_gradient(f, p.label_weights[l], o.step));
  }
  return t.worst;
}

double check_gauss_agg(Rng& rng, const GradcheckOptions& o, Tracker& t, Normalization norm) {
  const int d = uniform_int(rng, 1, 5);
  const int n = uniform_int(rng, 2, 6);
  const GaussAggConfig cfg{norm, norm == Normalization::kBiased ? 1e-4 : 0.0};
  const Matrix z = uniform(rng, d, n);
  const SymmetricMatrix c(random_symmetric(rng, d + 1));
  auto f = [&](const Matrix& x) { return frobenius_dot(c.matrix(), gauss_agg(x, cfg).matrix()); };
  t.check(gauss_agg_backward(z, cfg, c), numeric_gradient(f, z, o.step));
  return t.worst;
}

double check_re_eig(Rng& rng, const GradcheckOptions& o, Tracker& t) {
  constexpr double eps = 1e-4;
  const int d = uniform_int(rng, 2, 6);
  Vector lam(d);
  std::uniform_real_distribution<double> above(0.05, 2.0);
  std::uniform_real_distribution<double> below(-1.0, eps - 1e-3);
  for (int i = 0; i < d; ++i) lam(i) = (i % 2 == 0) ? above(rng) : below(rng);
  const Matrix x = with_spectrum(rng, lam);
  const SymmetricMatrix c(random_symmetric(rng, d));
  const EigenPair eig = sym_eig(SymmetricMatrix(x));
  auto f = [&](const Matrix& m) {
    return frobenius_dot(c.matrix(), re_eig(SymmetricMatrix(m), eps).matrix());
  };
  t.check(re_eig_backward(eig, eps, c).matrix(), numeric_gradient_symmetric(f, x, o.step));
  return t.worst;
}

double check_log_eig(Rng& rng, const GradcheckOptions& o, Tracker& t) {
  const int d = uniform_int(rng, 2, 6);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  Vector lam(d);
  for (int i = 0; i < d; ++i) lam(i) = u(rng);
  const Matrix x = with_spectrum(rng, lam);
  const SymmetricMatrix c(random_symmetric(rng, d));
  const EigenPair eig = sym_eig(SymmetricMatrix(x));
  auto f = [&](const Matrix& m) {
    return frobenius_dot(c.matrix(), log_eig(SymmetricMatrix(m)).matrix());
  };
  t.check(log_eig_backward(eig, c).matrix(), numeric_gradient_symmetric(f, x, o.step));
  return t.worst;
}

double check_half_vec(Rng& rng, const GradcheckOptions& o, Tracker& t) {
  const int d = uniform_int(rng, 1, 6);
  const Matrix y = random_symmetric(rng, d);
  const HalfVector c{d, uniform(rng, half_vec_length(d), 1)};
  auto f = [&](const Matrix& m) { return c.values.dot(half_vec(SymmetricMatrix(m)).values); };
  t.check(half_vec_adjoint(c).matrix(), numeric_gradient_symmetric(f, y, o.step));
  return t.worst;
}

double check_spd_spat_agg(Rng& rng, const GradcheckOptions& o, Tracker& t) {
  const int n = uniform_int(rng, 1, 3);
  const int d_in = uniform_int(rng, 2, 6);
  const int d_out = uniform_int(rng, 1, d_in);
  std::vector<SpdMatrix> xs;
  SpatAggParams p;
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int i = 0; i < n; ++i) {
    Vector lam(d_in);
    for (int k = 0; k < d_in; ++k) lam(k) = u(rng);
    xs.emplace_back(with_spectrum(rng, lam));
    p.weights.push_back(random_orthonormal(rng, d_out, d_in));
  }
  const SymmetricMatrix c(random_symmetric(rng, d_out));
  const SpatAggGrads g = spd_spat_agg_backward(xs, p, c);
  for (int i = 0; i < n; ++i) {
    auto fx = [&](const Matrix& m) {
      auto ys = xs;
      ys[i] = SymmetricMatrix(m);
      return frobenius_dot(c.matrix(), spd_spat_agg(ys, p).matrix());
    };
    t.check(g.inputs[i].matrix(), numeric_gradient_symmetric(fx, xs[i].matrix(), o.step));
    auto fw = [&](const Matrix& w) {
      SpatAggParams q = p;
      q.weights[i] = w;
      return frobenius_dot(c.matrix(), spd_spat_agg(xs, q).matrix());
    };
    t.check(g.weights[i], numeric_gradient(fw, p.weights[i], o.step));
  }
  return t.worst;
}

double check_fc(Rng& rng, const GradcheckOptions& o, Tracker& t) {
  const int m = uniform_int(rng, 1, 6);
  const int k = uniform_int(rng, 2, 6);
  const Matrix w = uniform(rng, k, m);
  const Vector b = uniform(rng, k, 1);
  const Vector v = uniform(rng, m, 1);
  const int label = uniform_int(rng, 1, k);
  const Vector gl = softmax_cross_entropy(w * v + b, label).second;
  auto loss = [&](const Matrix& ww, const Vector& bb, const Vector& vv) {
    return softmax_cross_entropy(ww * vv + bb, label).first;
  };
  t.check(gl * v.transpose(),
          numeric_gradient([&](const Matrix& x) { return loss(x, b, v); }, w, o.step));
  t.check(gl, numeric_gradient([&](const Matrix& x) { return loss(w, x, v); }, b, o.step));
  t.check(w.transpose() * gl,
          numeric_gradient([&](const Matrix& x) { return loss(w, b, x); }, v, o.step));
  return t.worst;
}

NetworkConfig toy_network_config() {
  NetworkConfig cfg;
  cfg.channels = 2;
  cfg.num_fingers = 2;
  cfg.joints_per_finger = 2;
  cfg.sequence_length = 4;
  cfg.pyramid_levels = 2;
  cfg.spat_out_dim = 5;
  cfg.num_classes = 3;
  return cfg;
}

double check_network(Rng& rng, const GradcheckOptions& o, Tracker& t) {
  const NetworkConfig cfg = toy_network_config();
  const NetworkParams p = init_params(cfg, rng());
  GestureSequence seq;
  for (int f = 0; f < cfg.sequence_length; ++f) seq.frames.push_back(uniform(rng, kNumJoints, 3));
  seq.label_14 = uniform_int(rng, 1, cfg.num_classes);
  seq.label_28 = seq.label_14;
  const NetworkParams g = loss_and_backward({&seq}, p, cfg).grads;
  auto loss = [&](const NetworkParams& q) {
    return softmax_cross_entropy(forward(seq, q, cfg).logits, seq.label_14).first;
  };
  for (int l = 0; l < 3; ++l) {
    auto f = [&](const Matrix& x) {
      NetworkParams q = p;
      q.conv.label_weights[l] = x;
      return loss(q);
    };
    t.check(g.conv.label_weights[l], numeric_gradient(f, p.conv.label_weights[l], o.step));
  }
  for (std::size_t i = 0; i < p.spat.weights.size(); ++i) {
    auto f = [&](const Matrix& x) {
      NetworkParams q = p;
      q.spat.weights[i] = x;
      return loss(q);
    };
    t.check(g.spat.weights[i], numeric_gradient(f, p.spat.weights[i], o.step));
  }
  auto fw = [&](const Matrix& x) {
    NetworkParams q = p;
    q.fc_weight = x;
    return loss(q);
  };
  t.check(g.fc_weight, numeric_gradient(fw, p.fc_weight, o.step));
  auto fb = [&](const Matrix& x) {
    NetworkParams q = p;
    q.fc_bias = x;
    return loss(q);
  };
  t.check(g.fc_bias, numeric_gradient(fb, p.fc_bias, o.step));
  return t.worst;
}

}  // namespace

std::vector<std::string> gradcheck_layers() {
  return {"graph_conv", "gauss_agg_biased", "gauss_agg_unbiased", "re_eig", "log_eig",
          "half_vec",   "spd_spat_agg",     "fc",                 "network"};
}

std::vector<GradcheckRow> run_gradcheck(const GradcheckOptions& opts) {
  const auto layers = gradcheck_layers();
  if (!opts.layer.empty() && std::find(layers.begin(), layers.end(), opts.layer) == layers.end())
    throw InvalidInput("gradcheck: unknown layer '" + opts.layer + "'");

  std::vector<GradcheckRow> rows;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const std::string& name = layers[li];
    if (!opts.layer.empty() && opts.layer != name) continue;
    // Each layer has its own stream so filtering does not change the instances.
    Rng rng(opts.seed * 1000003ULL + li);
    Tracker t;
    t.scale = opts.corrupt ? 1.01 : 1.0;
    for (int k = 0; k < opts.instances; ++k) {
      if (name == "graph_conv") check_graph_conv(rng, opts, t);
      else if (name == "gauss_agg_biased") check_gauss_agg(rng, opts, t, Normalization::kBiased);
      else if (name == "gauss_agg_unbiased") check_gauss_agg(rng, opts, t, Normalization::kUnbiased);
      else if (name == "re_eig") check_re_eig(rng, opts, t);
      else if (name == "log_eig") check_log_eig(rng, opts, t);
      else if (name == "half_vec") check_half_vec(rng, opts, t);
      else if (name == "spd_spat_agg") check_spd_spat_agg(rng, opts, t);
      else if (name == "fc") check_fc(rng, opts, t);
      else check_network(rng, opts, t);
    }
    rows.push_back({name, opts.instances, t.worst, t.worst < opts.threshold});
  }
  return rows;
}

}  // namespace spdnet
