#include "spdnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "spdnet/errors.hpp"

namespace spdnet {

SymmetricMatrix::SymmetricMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    std::ostringstream os;
    os << "SymmetricMatrix: expected a non-empty square matrix, got " << m.rows() << "x"
       << m.cols();
    throw InvalidInput(os.str());
  }
  m_ = (m + m.transpose()) * 0.5;
}

SymmetricMatrix SymmetricMatrix::identity(int dim) {
  return SymmetricMatrix(Matrix::Identity(dim, dim));
}

SymmetricMatrix SymmetricMatrix::zero(int dim) { return SymmetricMatrix(Matrix::Zero(dim, dim)); }

SymmetricMatrix SymmetricMatrix::diagonal(const Vector& d) {
  return SymmetricMatrix(Matrix(d.asDiagonal()));
}

SymmetricMatrix& SymmetricMatrix::operator+=(const SymmetricMatrix& o) {
  if (o.dim() != dim()) throw InvalidInput("SymmetricMatrix +=: dimension mismatch");
  m_ += o.m_;
  return *this;
}

namespace spectral {

SpectralFn identity() {
  return {"identity", [](double x) { return x; }, [](double) { return 1.0; }};
}

SpectralFn log() {
  return {"log", [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; },
          [](double x) { return x > 0.0; }};
}

SpectralFn exp() {
  return {"exp", [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); }};
}

SpectralFn rectify(double eps) {
  // Subgradient 1 at x == eps: the layer is the identity on the closed
  // half-line.
  return {"rectify", [eps](double x) { return x > eps ? x : eps; },
          [eps](double x) { return x >= eps ? 1.0 : 0.0; }};
}

}  // namespace spectral

bool all_finite(const Matrix& m) { return m.allFinite(); }

double frobenius_dot(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

namespace {

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

constexpr int kMaxSweeps = 100;
constexpr double kSweepTol = 1e-12;
constexpr double kSignTol = 1e-12;

}  // namespace

EigenPair sym_eig(const SymmetricMatrix& s) {
  const Matrix& in = s.matrix();
  if (!in.allFinite()) throw InvalidInput("sym_eig: non-finite entries");
  const Eigen::Index n = in.rows();
  Matrix a = in;
  Matrix v = Matrix::Identity(n, n);
  const double tol = kSweepTol * in.norm();

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= tol) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          const double nkp = c * akp - sn * akq;
          const double nkq = sn * akp + c * akq;
          a(k, p) = nkp;
          a(p, k) = nkp;
          a(k, q) = nkq;
          a(q, k) = nkq;
        }
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  EigenPair out{Matrix(n, n), Vector(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.values(j) = a(src, src);
    Vector col = v.col(src);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (std::abs(col(k)) > kSignTol) {
        if (col(k) < 0.0) col = -col;
        break;
      }
    }
    out.vectors.col(j) = col;
  }
  return out;
}

SymmetricMatrix spectral_apply(const EigenPair& eig, const SpectralFn& fn) {
  const Eigen::Index n = eig.values.size();
  Vector fv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = eig.values(i);
    if (!fn.in_domain(lam)) {
      std::ostringstream os;
      os << "spectral_apply(" << fn.name << "): eigenvalue " << lam << " outside the domain";
      throw SpectralDomainError(os.str(), lam);
    }
    fv(i) = fn.f(lam);
  }
  return SymmetricMatrix(eig.vectors * fv.asDiagonal() * eig.vectors.transpose());
}

SymmetricMatrix spectral_apply(const SymmetricMatrix& s, const SpectralFn& fn) {
  return spectral_apply(sym_eig(s), fn);
}

SymmetricMatrix spectral_fn_backward(const EigenPair& cache, const SpectralFn& fn,
                                     const SymmetricMatrix& grad_out) {
  const Eigen::Index n = cache.values.size();
  if (grad_out.dim() != n) throw InvalidInput("spectral_fn_backward: dimension mismatch");
  const Matrix& u = cache.vectors;
  const Vector& lam = cache.values;

  Vector fv(n);
  for (Eigen::Index i = 0; i < n; ++i) fv(i) = fn.f(lam(i));

  Matrix g = u.transpose() * grad_out.matrix() * u;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double li = lam(i);
      const double lj = lam(j);
      const double guard = 1e-10 * std::max({1.0, std::abs(li), std::abs(lj)});
      const double k =
          std::abs(li - lj) > guard ? (fv(i) - fv(j)) / (li - lj) : fn.df(0.5 * (li + lj));
      g(i, j) *= k;
    }
  }
  return SymmetricMatrix(u * g * u.transpose());
}

SymmetricMatrix spectral_fn_backward(const SymmetricMatrix& s, const SpectralFn& fn,
                                     const SymmetricMatrix& grad_out, const EigenPair& cache) {
  if (s.dim() != grad_out.dim() || s.dim() != cache.values.size())
    throw InvalidInput("spectral_fn_backward: dimension mismatch");
  return spectral_fn_backward(cache, fn, grad_out);
}

Matrix qr_orthonormalize(const Matrix& m) {
  const Eigen::Index rows = m.rows();
  const Eigen::Index cols = m.cols();
  if (rows < 1 || rows > cols)
    throw InvalidInput("qr_orthonormalize: need 1 <= rows <= cols");
  if (!m.allFinite()) throw InvalidInput("qr_orthonormalize: non-finite entries");

  Eigen::HouseholderQR<Matrix> qr(m.transpose());
  const Matrix r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
  const double scale = std::max(1.0, m.norm());
  Matrix q = qr.householderQ() * Matrix::Identity(cols, rows);
  for (Eigen::Index j = 0; j < rows; ++j) {
    if (std::abs(r(j, j)) <= 1e-12 * scale) {
      std::ostringstream os;
      os << "qr_orthonormalize: matrix is rank deficient (|R(" << j << "," << j
         << ")| = " << std::abs(r(j, j)) << ")";
      throw RankError(os.str());
    }
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q.transpose();
}

}  // namespace spdnet
