#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace spdnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dense real symmetric matrix. Symmetry is exact: every constructor
// symmetrizes its argument as (A + A^T) / 2, which is the identity on
// already-symmetric input.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(const Matrix& m);

  static SymmetricMatrix identity(int dim);
  static SymmetricMatrix zero(int dim);
  static SymmetricMatrix diagonal(const Vector& d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  SymmetricMatrix& operator+=(const SymmetricMatrix& o);
  friend SymmetricMatrix operator+(SymmetricMatrix a, const SymmetricMatrix& b) {
    a += b;
    return a;
  }
  friend SymmetricMatrix operator*(double s, SymmetricMatrix a) {
    a.m_ *= s;
    return a;
  }

 private:
  Matrix m_;
};

// Eigenvectors are the columns of `vectors`; `values` are sorted descending.
struct EigenPair {
  Matrix vectors;
  Vector values;
};

// Scalar function applied to the spectrum of a symmetric matrix, together
// with its derivative. `in_domain` rejects eigenvalues where f is undefined.
struct SpectralFn {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<bool(double)> in_domain = [](double) { return true; };
};

namespace spectral {
SpectralFn identity();
SpectralFn log();
SpectralFn exp();
// x -> max(eps, x); derivative 1 on x >= eps and 0 below.
SpectralFn rectify(double eps);
}  // namespace spectral

/// Cyclic Jacobi eigendecomposition. Iterates full sweeps until the
/// off-diagonal Frobenius norm drops below 1e-12 * ||S||_F (at most 100
/// sweeps). Eigenvalues are returned in descending order and each
/// eigenvector's first nonzero component is made positive, so the result
/// is deterministic.
EigenPair sym_eig(const SymmetricMatrix& s);

/// U diag(f(V)) U^T for S = U diag(V) U^T.
SymmetricMatrix spectral_apply(const SymmetricMatrix& s, const SpectralFn& fn);
SymmetricMatrix spectral_apply(const EigenPair& eig, const SpectralFn& fn);

/// Gradient of a scalar loss with respect to S given the gradient with
/// respect to spectral_apply(S, fn). Uses the Daleckii-Krein form
/// U (K .* (U^T G U)) U^T where K holds divided differences of f over the
/// eigenvalues, falling back to f' at the midpoint for near-ties
/// (|l_i - l_j| <= 1e-10 * max(1, |l_i|, |l_j|)).
SymmetricMatrix spectral_fn_backward(const SymmetricMatrix& s, const SpectralFn& fn,
                                     const SymmetricMatrix& grad_out, const EigenPair& cache);
SymmetricMatrix spectral_fn_backward(const EigenPair& cache, const SpectralFn& fn,
                                     const SymmetricMatrix& grad_out);

/// Orthonormalizes the rows of `m` (rows <= cols) through a QR factorization
/// of m^T, with the triangular factor's diagonal made nonnegative. Throws
/// RankError if `m` does not have full row rank.
Matrix qr_orthonormalize(const Matrix& m);

double frobenius_dot(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& m);

}  // namespace spdnet
