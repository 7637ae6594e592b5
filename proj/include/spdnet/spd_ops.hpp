#pragma once

#include <vector>

#include "spdnet/linalg.hpp"

namespace spdnet {

// Symmetric matrix that the caller guarantees (or has checked) to be
// positive definite.
using SpdMatrix = SymmetricMatrix;

enum class Normalization { kBiased, kUnbiased };

struct GaussAggConfig {
  Normalization normalization = Normalization::kBiased;
  double regularizer = 0.0;  // added as regularizer * I to the covariance
};

/// Embeds the Gaussian statistics of the columns of `samples` (d x n) into
/// the (d+1) x (d+1) matrix [[S + r I + m m^T, m], [m^T, 1]], where m is the
/// sample mean and S the biased (1/n) or unbiased (1/(n-1)) covariance.
SymmetricMatrix gauss_agg(const Matrix& samples, const GaussAggConfig& cfg);

/// Gradient of <grad_out, gauss_agg(samples)> with respect to each sample
/// column. Returns a d x n matrix.
Matrix gauss_agg_backward(const Matrix& samples, const GaussAggConfig& cfg,
                          const SymmetricMatrix& grad_out);

/// U max(eps I, V) U^T. Eigenvalues at or below eps are clamped to eps.
SpdMatrix re_eig(const SymmetricMatrix& x, double eps);
SpdMatrix re_eig(const EigenPair& eig, double eps);
/// Eigen pair of re_eig's output, derived from the input's eigen pair.
EigenPair re_eig_spectrum(const EigenPair& eig, double eps);
SymmetricMatrix re_eig_backward(const EigenPair& cache, double eps,
                                const SymmetricMatrix& grad_out);

SymmetricMatrix log_eig(const SpdMatrix& x);
SymmetricMatrix log_eig(const EigenPair& eig);
SymmetricMatrix log_eig_backward(const EigenPair& cache, const SymmetricMatrix& grad_out);

// Row-major upper triangle of a symmetric matrix with off-diagonal entries
// scaled by sqrt(2); length d(d+1)/2.
struct HalfVector {
  int source_dim = 0;
  Vector values;
};

int half_vec_length(int dim);
HalfVector half_vec(const SymmetricMatrix& y);
SymmetricMatrix half_vec_adjoint(const HalfVector& g);

struct SpatAggParams {
  std::vector<Matrix> weights;  // each d_out x d_in with orthonormal rows
};

/// Largest |W W^T - I| entry over all weights.
double stiefel_violation(const SpatAggParams& params);
/// Throws InvalidInput unless every weight has orthonormal rows (1e-8).
void validate(const SpatAggParams& params);

/// Sum over i of W_i X_i W_i^T.
SpdMatrix spd_spat_agg(const std::vector<SpdMatrix>& inputs, const SpatAggParams& params);

struct SpatAggGrads {
  std::vector<SymmetricMatrix> inputs;
  std::vector<Matrix> weights;  // Euclidean, not projected
};

SpatAggGrads spd_spat_agg_backward(const std::vector<SpdMatrix>& inputs,
                                   const SpatAggParams& params, const SymmetricMatrix& grad_out);

}  // namespace spdnet
