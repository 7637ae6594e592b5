#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "spdnet/errors.hpp"
#include "spdnet/gradcheck.hpp"
#include "spdnet/linalg.hpp"

using namespace spdnet;

namespace {

SymmetricMatrix random_symmetric(int d, std::mt19937_64& rng) {
  return SymmetricMatrix(oracle::random_matrix(d, d, rng));
}

double reconstruction_error(const SymmetricMatrix& s, const EigenPair& e) {
  return (e.vectors * e.values.asDiagonal() * e.vectors.transpose() - s.matrix()).norm();
}

}  // namespace

TEST(SymEig, IdentityReconstructsExactly) {
  const auto s = SymmetricMatrix::identity(3);
  const EigenPair e = sym_eig(s);
  EXPECT_EQ(e.values, Vector::Ones(3));
  EXPECT_LT((e.vectors * e.vectors.transpose() - Matrix::Identity(3, 3)).norm(), 1e-15);
  EXPECT_LT(reconstruction_error(s, e), 1e-15);
}

TEST(SymEig, DiagonalUsesSignConvention) {
  const EigenPair e = sym_eig(SymmetricMatrix::diagonal(Vector::Map(std::array{3.0, 1.0}.data(), 2)));
  EXPECT_DOUBLE_EQ(e.values(0), 3.0);
  EXPECT_DOUBLE_EQ(e.values(1), 1.0);
  EXPECT_EQ(e.vectors, Matrix::Identity(2, 2));
}

TEST(SymEig, RandomSixBySixReconstruction) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = oracle::random_matrix(6, 6, rng);
    const SymmetricMatrix s(a * a.transpose() + a.transpose() * a);
    const EigenPair e = sym_eig(s);
    EXPECT_LT(reconstruction_error(s, e), 1e-10);
    EXPECT_LT((e.vectors.transpose() * e.vectors - Matrix::Identity(6, 6)).norm(), 1e-12);
    for (int i = 0; i + 1 < 6; ++i) EXPECT_GE(e.values(i), e.values(i + 1));
  }
}

TEST(SymEig, MatchesCharacteristicPolynomialOnSmallMatrices) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const SymmetricMatrix s2 = random_symmetric(2, rng);
    const auto ref2 = oracle::eig2(s2.matrix());
    const EigenPair e2 = sym_eig(s2);
    for (int i = 0; i < 2; ++i) EXPECT_NEAR(e2.values(i), ref2[i], 1e-8);

    const SymmetricMatrix s3 = random_symmetric(3, rng);
    const auto ref3 = oracle::eig3(s3.matrix());
    const EigenPair e3 = sym_eig(s3);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(e3.values(i), ref3[i], 1e-8);
  }
}

TEST(SymEig, FirstNonzeroComponentIsPositive) {
  std::mt19937_64 rng(5);
  const EigenPair e = sym_eig(random_symmetric(5, rng));
  for (int c = 0; c < 5; ++c) {
    for (int r = 0; r < 5; ++r) {
      if (std::abs(e.vectors(r, c)) > 1e-12) {
        EXPECT_GT(e.vectors(r, c), 0.0);
        break;
      }
    }
  }
}

TEST(SymEig, IsDeterministic) {
  std::mt19937_64 rng(8);
  const SymmetricMatrix s = random_symmetric(7, rng);
  const EigenPair a = sym_eig(s);
  const EigenPair b = sym_eig(s);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.vectors, b.vectors);
}

TEST(SymEig, RejectsNonFinite) {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(sym_eig(SymmetricMatrix(m)), InvalidInput);
}

TEST(SpectralFn, DerivativesMatchCentralDifferences) {
  const double h = 1e-6;
  for (const auto& fn : {spectral::identity(), spectral::log(), spectral::exp()}) {
    for (double x : {0.3, 1.0, 2.5}) {
      const double fd = (fn.f(x + h) - fn.f(x - h)) / (2 * h);
      EXPECT_NEAR(fn.df(x), fd, 1e-7) << fn.name << " at " << x;
    }
  }
  const SpectralFn r = spectral::rectify(1e-4);
  EXPECT_DOUBLE_EQ(r.f(1e-5), 1e-4);
  EXPECT_DOUBLE_EQ(r.f(2.0), 2.0);
  EXPECT_DOUBLE_EQ(r.df(1e-5), 0.0);
  EXPECT_DOUBLE_EQ(r.df(1e-4), 1.0);
  EXPECT_DOUBLE_EQ(r.df(2.0), 1.0);
}

TEST(SpectralApply, LogOfIdentityIsZero) {
  EXPECT_EQ(spectral_apply(SymmetricMatrix::identity(3), spectral::log()).matrix(),
            Matrix::Zero(3, 3));
}

TEST(SpectralApply, LogOfDiagonal) {
  const Vector d = Vector::Map(std::array{std::exp(1.0), std::exp(2.0)}.data(), 2);
  const Matrix out = spectral_apply(SymmetricMatrix::diagonal(d), spectral::log()).matrix();
  EXPECT_NEAR(out(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(out(1, 1), 2.0, 1e-14);
  EXPECT_EQ(out(0, 1), 0.0);
}

TEST(SpectralApply, LogExpRoundTrip) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const SymmetricMatrix x(oracle::random_spd(6, rng));
    const SymmetricMatrix back = spectral_apply(spectral_apply(x, spectral::log()), spectral::exp());
    EXPECT_LT((back.matrix() - x.matrix()).norm(), 1e-8);
  }
}

TEST(SpectralApply, IdentityFunctionIsIdentity) {
  std::mt19937_64 rng(4);
  for (int d : {1, 2, 5, 9}) {
    const SymmetricMatrix s = random_symmetric(d, rng);
    EXPECT_LT((spectral_apply(s, spectral::identity()).matrix() - s.matrix()).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(SpectralApply, EigenvaluesAreMappedMonotonically) {
  std::mt19937_64 rng(6);
  const SymmetricMatrix x(oracle::random_spd(5, rng));
  const Vector lam = oracle::eigenvalues(x.matrix());
  const Vector out = oracle::eigenvalues(spectral_apply(x, spectral::log()).matrix());
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(out(i), std::log(lam(i)), 1e-9);
}

TEST(SpectralApply, MatchesEigenSolverOracle) {
  std::mt19937_64 rng(16);
  const SymmetricMatrix x(oracle::random_spd(8, rng));
  const Matrix ref = oracle::spectral(x.matrix(), [](double v) { return std::log(v); });
  EXPECT_LT((spectral_apply(x, spectral::log()).matrix() - ref).norm(), 1e-10);
}

TEST(SpectralApply, LogOfNonPositiveReportsEigenvalue) {
  const Vector d = Vector::Map(std::array{2.0, -0.5}.data(), 2);
  try {
    spectral_apply(SymmetricMatrix::diagonal(d), spectral::log());
    FAIL() << "expected SpectralDomainError";
  } catch (const SpectralDomainError& e) {
    EXPECT_DOUBLE_EQ(e.eigenvalue(), -0.5);
  }
}

TEST(SpectralBackward, DiagonalLogWithIdentityCotangent) {
  const Vector d = Vector::Map(std::array{2.0, 5.0}.data(), 2);
  const SymmetricMatrix s = SymmetricMatrix::diagonal(d);
  const Matrix g = spectral_fn_backward(s, spectral::log(), SymmetricMatrix::identity(2), sym_eig(s))
                       .matrix();
  EXPECT_NEAR(g(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(g(1, 1), 0.2, 1e-15);
  EXPECT_NEAR(g(0, 1), 0.0, 1e-15);
}

TEST(SpectralBackward, ZeroCotangentGivesZero) {
  std::mt19937_64 rng(2);
  const SymmetricMatrix s(oracle::random_spd(4, rng));
  const Matrix g =
      spectral_fn_backward(sym_eig(s), spectral::log(), SymmetricMatrix::zero(4)).matrix();
  EXPECT_EQ(g, Matrix::Zero(4, 4));
}

TEST(SpectralBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = oracle::random_spd(5, rng, 0.5);
    const SymmetricMatrix c(oracle::random_matrix(5, 5, rng));
    // Rectify threshold chosen between eigenvalues, away from any of them.
    const Vector lam = oracle::eigenvalues(x);
    const double eps = 0.5 * (lam(1) + lam(2));
    for (const SpectralFn& fn : {spectral::log(), spectral::rectify(eps)}) {
      auto probe = [&](const Matrix& m) {
        return frobenius_dot(c.matrix(), spectral_apply(SymmetricMatrix(m), fn).matrix());
      };
      const Matrix numeric = numeric_gradient_symmetric(probe, x, 1e-5);
      const Matrix analytic =
          spectral_fn_backward(SymmetricMatrix(x), fn, c, sym_eig(SymmetricMatrix(x))).matrix();
      EXPECT_LT(relative_error(analytic, numeric), 1e-5) << fn.name;
    }
  }
}

TEST(SpectralBackward, IsAdjointOfDirectionalDerivative) {
  std::mt19937_64 rng(41);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const SymmetricMatrix s(oracle::random_spd(4, rng, 0.5));
    const SymmetricMatrix d(oracle::random_matrix(4, 4, rng));
    const SymmetricMatrix g(oracle::random_matrix(4, 4, rng));
    const Matrix plus = spectral_apply(s + h * d, spectral::log()).matrix();
    const Matrix minus = spectral_apply(s + (-h) * d, spectral::log()).matrix();
    const double lhs = frobenius_dot(g.matrix(), (plus - minus) / (2 * h));
    const double rhs =
        frobenius_dot(spectral_fn_backward(sym_eig(s), spectral::log(), g).matrix(), d.matrix());
    EXPECT_NEAR(lhs, rhs, 1e-6 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(SpectralBackward, DegenerateSpectrumUsesDerivative) {
  // Repeated eigenvalue 2: the divided difference falls back to f'(2) = 1/2.
  const SymmetricMatrix s = SymmetricMatrix::diagonal(Vector::Constant(3, 2.0));
  std::mt19937_64 rng(1);
  const SymmetricMatrix g(oracle::random_matrix(3, 3, rng));
  const Matrix out = spectral_fn_backward(sym_eig(s), spectral::log(), g).matrix();
  EXPECT_LT((out - 0.5 * g.matrix()).norm(), 1e-14);
}

TEST(SpectralBackward, RejectsDimensionMismatch) {
  const auto s = SymmetricMatrix::identity(3);
  EXPECT_THROW(spectral_fn_backward(sym_eig(s), spectral::log(), SymmetricMatrix::identity(2)),
               InvalidInput);
}

TEST(QrOrthonormalize, IdentityIsFixed) {
  EXPECT_LT((qr_orthonormalize(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm(), 1e-15);
}

TEST(QrOrthonormalize, RemovesPositiveScaling) {
  Matrix m(2, 2);
  m << 2, 0, 0, 3;
  EXPECT_LT((qr_orthonormalize(m) - Matrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(QrOrthonormalize, PreservesRowSpace) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = oracle::random_matrix(4, 7, rng);
    const Matrix q = qr_orthonormalize(m);
    EXPECT_LT((q * q.transpose() - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
    // Projectors onto the row spaces agree.
    const Matrix p_ref = m.transpose() * (m * m.transpose()).inverse() * m;
    EXPECT_LT((q.transpose() * q - p_ref).norm(), 1e-10);
  }
}

TEST(QrOrthonormalize, OrthonormalInputIsFixed) {
  std::mt19937_64 rng(10);
  const Matrix w = oracle::random_orthonormal_rows(3, 6, rng);
  EXPECT_LT((qr_orthonormalize(w) - w).norm(), 1e-12);
}

TEST(QrOrthonormalize, RankDeficientThrows) {
  Matrix m(2, 3);
  m << 1, 2, 3, 2, 4, 6;
  EXPECT_THROW(qr_orthonormalize(m), RankError);
}

TEST(QrOrthonormalize, MoreRowsThanColumnsIsInvalid) {
  EXPECT_THROW(qr_orthonormalize(Matrix::Ones(3, 2)), InvalidInput);
}
