#include "spdnet/spd_ops.hpp"

#include <cmath>
#include <sstream>

#include "spdnet/errors.hpp"

namespace spdnet {

namespace {

double covariance_scale(Eigen::Index n, Normalization norm) {
  if (norm == Normalization::kUnbiased) {
    if (n < 2) throw InvalidInput("gauss_agg: unbiased normalization needs at least 2 samples");
    return 1.0 / static_cast<double>(n - 1);
  }
  return 1.0 / static_cast<double>(n);
}

void check_samples(const Matrix& samples, const GaussAggConfig& cfg) {
  if (samples.cols() < 1 || samples.rows() < 1) throw InvalidInput("gauss_agg: no samples");
  if (cfg.regularizer < 0.0) throw InvalidInput("gauss_agg: negative regularizer");
}

}  // namespace

SymmetricMatrix gauss_agg(const Matrix& samples, const GaussAggConfig& cfg) {
  check_samples(samples, cfg);
  const Eigen::Index d = samples.rows();
  const Eigen::Index n = samples.cols();
  const double c = covariance_scale(n, cfg.normalization);

  const Vector mu = samples.rowwise().mean();
  const Matrix centered = samples.colwise() - mu;
  Matrix out(d + 1, d + 1);
  Matrix top = c * centered * centered.transpose() + mu * mu.transpose();
  top.diagonal().array() += cfg.regularizer;
  out.topLeftCorner(d, d) = top;
  out.topRightCorner(d, 1) = mu;
  out.bottomLeftCorner(1, d) = mu.transpose();
  out(d, d) = 1.0;
  return SymmetricMatrix(out);
}

Matrix gauss_agg_backward(const Matrix& samples, const GaussAggConfig& cfg,
                          const SymmetricMatrix& grad_out) {
  check_samples(samples, cfg);
  const Eigen::Index d = samples.rows();
  const Eigen::Index n = samples.cols();
  if (grad_out.dim() != d + 1) throw InvalidInput("gauss_agg_backward: dimension mismatch");
  const double c = covariance_scale(n, cfg.normalization);

  const Matrix& g = grad_out.matrix();
  const Matrix g11 = g.topLeftCorner(d, d);
  const Vector g12 = g.topRightCorner(d, 1) + g.bottomLeftCorner(1, d).transpose();

  const Vector mu = samples.rowwise().mean();
  const Matrix centered = samples.colwise() - mu;
  // The covariance term has no net dependence on the mean because the
  // centered samples sum to zero.
  Matrix grad = 2.0 * c * g11 * centered;
  const Vector through_mean = (2.0 * g11 * mu + g12) / static_cast<double>(n);
  grad.colwise() += through_mean;
  return grad;
}

EigenPair re_eig_spectrum(const EigenPair& eig, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("re_eig: threshold must be positive");
  EigenPair out = eig;
  for (Eigen::Index i = 0; i < out.values.size(); ++i)
    if (out.values(i) <= eps) out.values(i) = eps;
  return out;
}

SpdMatrix re_eig(const EigenPair& eig, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("re_eig: threshold must be positive");
  return spectral_apply(eig, spectral::rectify(eps));
}

SpdMatrix re_eig(const SymmetricMatrix& x, double eps) {
  if (!(eps > 0.0)) throw InvalidInput("re_eig: threshold must be positive");
  return re_eig(sym_eig(x), eps);
}

SymmetricMatrix re_eig_backward(const EigenPair& cache, double eps,
                                const SymmetricMatrix& grad_out) {
  if (!(eps > 0.0)) throw InvalidInput("re_eig_backward: threshold must be positive");
  return spectral_fn_backward(cache, spectral::rectify(eps), grad_out);
}

SymmetricMatrix log_eig(const EigenPair& eig) { return spectral_apply(eig, spectral::log()); }

SymmetricMatrix log_eig(const SpdMatrix& x) { return log_eig(sym_eig(x)); }

SymmetricMatrix log_eig_backward(const EigenPair& cache, const SymmetricMatrix& grad_out) {
  return spectral_fn_backward(cache, spectral::log(), grad_out);
}

int half_vec_length(int dim) { return dim * (dim + 1) / 2; }

HalfVector half_vec(const SymmetricMatrix& y) {
  const int d = y.dim();
  HalfVector out{d, Vector(half_vec_length(d))};
  const double r2 = std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < d; ++i) {
    out.values(k++) = y(i, i);
    for (int j = i + 1; j < d; ++j) out.values(k++) = r2 * y(i, j);
  }
  return out;
}

SymmetricMatrix half_vec_adjoint(const HalfVector& g) {
  const int d = g.source_dim;
  if (d < 1 || g.values.size() != half_vec_length(d))
    throw InvalidInput("half_vec_adjoint: length does not match source dimension");
  const double inv_r2 = 1.0 / std::sqrt(2.0);
  Matrix out(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i) {
    out(i, i) = g.values(k++);
    for (int j = i + 1; j < d; ++j) {
      const double v = inv_r2 * g.values(k++);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return SymmetricMatrix(out);
}

double stiefel_violation(const SpatAggParams& params) {
  double worst = 0.0;
  for (const auto& w : params.weights) {
    const Matrix gram = w * w.transpose() - Matrix::Identity(w.rows(), w.rows());
    worst = std::max(worst, gram.cwiseAbs().maxCoeff());
  }
  return worst;
}

void validate(const SpatAggParams& params) {
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    const auto& w = params.weights[i];
    if (w.rows() > w.cols()) throw InvalidInput("spd_spat_agg: weight has more rows than columns");
  }
  const double v = stiefel_violation(params);
  if (!(v < 1e-8)) {
    std::ostringstream os;
    os << "spd_spat_agg: weights are not row-orthonormal (max |WW^T - I| = " << v << ")";
    throw InvalidInput(os.str());
  }
}

namespace {

void check_spat_shapes(const std::vector<SpdMatrix>& inputs, const SpatAggParams& params) {
  if (inputs.empty()) throw InvalidInput("spd_spat_agg: no inputs");
  if (inputs.size() != params.weights.size()) {
    std::ostringstream os;
    os << "spd_spat_agg: " << inputs.size() << " inputs but " << params.weights.size()
       << " weights";
    throw InvalidInput(os.str());
  }
  const Eigen::Index d_out = params.weights.front().rows();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& w = params.weights[i];
    if (w.rows() != d_out || w.cols() != inputs[i].dim())
      throw InvalidInput("spd_spat_agg: weight/input dimension mismatch at index " +
                         std::to_string(i));
  }
}

}  // namespace

SpdMatrix spd_spat_agg(const std::vector<SpdMatrix>& inputs, const SpatAggParams& params) {
  check_spat_shapes(inputs, params);
  const Eigen::Index d_out = params.weights.front().rows();
  Matrix acc = Matrix::Zero(d_out, d_out);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Matrix& w = params.weights[i];
    acc.noalias() += w * inputs[i].matrix() * w.transpose();
  }
  return SymmetricMatrix(acc);
}

SpatAggGrads spd_spat_agg_backward(const std::vector<SpdMatrix>& inputs,
                                   const SpatAggParams& params, const SymmetricMatrix& grad_out) {
  check_spat_shapes(inputs, params);
  if (grad_out.dim() != params.weights.front().rows())
    throw InvalidInput("spd_spat_agg_backward: gradient dimension mismatch");
  const Matrix& g = grad_out.matrix();
  SpatAggGrads out;
  out.inputs.reserve(inputs.size());
  out.weights.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Matrix& w = params.weights[i];
    out.inputs.emplace_back(Matrix(w.transpose() * g * w));
    out.weights.emplace_back(2.0 * g * w * inputs[i].matrix());
  }
  return out;
}

}  // namespace spdnet
