#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "spdnet/errors.hpp"
#include "spdnet/gradcheck.hpp"
#include "spdnet/spd_ops.hpp"

using namespace spdnet;

namespace {

constexpr GaussAggConfig kBiased{Normalization::kBiased, 0.0};
constexpr GaussAggConfig kUnbiased{Normalization::kUnbiased, 0.0};

Matrix columns(std::initializer_list<std::initializer_list<double>> cols) {
  const auto d = static_cast<Eigen::Index>(cols.begin()->size());
  Matrix m(d, static_cast<Eigen::Index>(cols.size()));
  Eigen::Index c = 0;
  for (const auto& col : cols) {
    Eigen::Index r = 0;
    for (double v : col) m(r++, c) = v;
    ++c;
  }
  return m;
}

std::vector<Vector> as_vectors(const Matrix& m) {
  std::vector<Vector> out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m.col(c));
  return out;
}

Vector diag(std::initializer_list<double> v) {
  Vector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d;
}

}  // namespace

TEST(GaussAgg, SingleSample) {
  Matrix expected(3, 3);
  expected << 1, 0, 1, 0, 0, 0, 1, 0, 1;
  EXPECT_EQ(gauss_agg(columns({{1, 0}}), kBiased).matrix(), expected);
}

TEST(GaussAgg, SymmetricPair) {
  EXPECT_EQ(gauss_agg(columns({{1}, {-1}}), kBiased).matrix(), Matrix::Identity(2, 2));
}

TEST(GaussAgg, MatchesDefinitionalOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix z = oracle::random_matrix(3, 4, rng);
    for (bool unbiased : {true, false}) {
      const GaussAggConfig cfg{unbiased ? Normalization::kUnbiased : Normalization::kBiased, 0.3};
      const Matrix ref = oracle::gauss_agg(as_vectors(z), unbiased, 0.3);
      EXPECT_LT((gauss_agg(z, cfg).matrix() - ref).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(GaussAgg, RegularizedOutputIsPositiveDefinite) {
  std::mt19937_64 rng(2);
  // Fewer samples than dimensions: the covariance alone is singular.
  const Matrix z = oracle::random_matrix(6, 3, rng);
  const SymmetricMatrix out = gauss_agg(z, {Normalization::kBiased, 1e-4});
  EXPECT_GT(oracle::eigenvalues(out.matrix()).minCoeff(), 0.0);
  EXPECT_EQ(out.matrix(), out.matrix().transpose());
}

TEST(GaussAgg, Errors) {
  EXPECT_THROW(gauss_agg(columns({{1, 2}}), kUnbiased), InvalidInput);
  EXPECT_THROW(gauss_agg(Matrix(2, 0), kBiased), InvalidInput);
  EXPECT_THROW(gauss_agg(columns({{1, 2}}), {Normalization::kBiased, -1.0}), InvalidInput);
  EXPECT_THROW(gauss_agg_backward(columns({{1, 2}}), kBiased, SymmetricMatrix::identity(2)),
               InvalidInput);
}

TEST(GaussAggBackward, ZeroCotangent) {
  std::mt19937_64 rng(3);
  const Matrix z = oracle::random_matrix(3, 5, rng);
  EXPECT_EQ(gauss_agg_backward(z, kBiased, SymmetricMatrix::zero(4)), Matrix::Zero(3, 5));
}

TEST(GaussAggBackward, HandDerivedScalarCase) {
  // Biased, d = 1: the (1,1) block is Sigma + mu^2 = mean(z^2), so d/dz_i = 2 z_i / n = z_i.
  const Matrix z = columns({{0.7}, {-1.9}});
  Matrix g = Matrix::Zero(2, 2);
  g(0, 0) = 1.0;
  const Matrix grad = gauss_agg_backward(z, kBiased, SymmetricMatrix(g));
  EXPECT_NEAR(grad(0, 0), 0.7, 1e-15);
  EXPECT_NEAR(grad(0, 1), -1.9, 1e-15);
}

TEST(GaussAggBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix z = oracle::random_matrix(4, 5, rng);
    const SymmetricMatrix c(oracle::random_matrix(5, 5, rng));
    for (const GaussAggConfig& cfg : {kBiased, kUnbiased, GaussAggConfig{Normalization::kBiased, 0.1}}) {
      auto probe = [&](const Matrix& m) { return frobenius_dot(c.matrix(), gauss_agg(m, cfg).matrix()); };
      EXPECT_LT(relative_error(gauss_agg_backward(z, cfg, c), numeric_gradient(probe, z, 1e-5)),
                1e-5);
    }
  }
}

TEST(ReEig, IdentityUnchanged) {
  EXPECT_LT((re_eig(SymmetricMatrix::identity(3), 1e-4).matrix() - Matrix::Identity(3, 3)).norm(),
            1e-15);
}

TEST(ReEig, ClampsSmallEigenvalue) {
  const Matrix out = re_eig(SymmetricMatrix::diagonal(diag({2e-5, 1.0})), 1e-4).matrix();
  EXPECT_NEAR(out(0, 0), 1e-4, 1e-18);
  EXPECT_NEAR(out(1, 1), 1.0, 1e-15);
  EXPECT_EQ(out(0, 1), 0.0);
}

TEST(ReEig, ClampsZeroEigenvalueOfPsdMatrix) {
  std::mt19937_64 rng(5);
  const Matrix a = oracle::random_matrix(5, 4, rng);
  const Matrix x = a * a.transpose();  // rank 4
  const Vector lam = oracle::eigenvalues(x);
  const Vector out = oracle::eigenvalues(re_eig(SymmetricMatrix(x), 1e-4).matrix());
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(out(i), std::max(1e-4, lam(i)), 1e-9);
}

TEST(ReEig, AboveThresholdIsIdentityAndIdempotent) {
  std::mt19937_64 rng(6);
  const SymmetricMatrix x(oracle::random_spd(5, rng, 0.5));
  EXPECT_LT((re_eig(x, 1e-4).matrix() - x.matrix()).norm(), 1e-10);

  const SymmetricMatrix y(oracle::random_matrix(5, 5, rng));
  const SymmetricMatrix once = re_eig(y, 0.2);
  EXPECT_LT((re_eig(once, 0.2).matrix() - once.matrix()).norm(), 1e-10);
  EXPECT_GE(oracle::eigenvalues(once.matrix()).minCoeff(), 0.2 * (1 - 1e-12));
}

TEST(ReEig, RejectsNonPositiveThreshold) {
  EXPECT_THROW(re_eig(SymmetricMatrix::identity(2), 0.0), InvalidInput);
  EXPECT_THROW(re_eig(SymmetricMatrix::identity(2), -1.0), InvalidInput);
}

TEST(ReEigBackward, PassThroughAboveThreshold) {
  std::mt19937_64 rng(7);
  const SymmetricMatrix x(oracle::random_spd(4, rng, 0.5));
  const SymmetricMatrix g(oracle::random_matrix(4, 4, rng));
  EXPECT_LT((re_eig_backward(sym_eig(x), 1e-4, g).matrix() - g.matrix()).norm(), 1e-12);
}

TEST(ReEigBackward, ZeroWhenFullySaturated) {
  const SymmetricMatrix x = SymmetricMatrix::diagonal(diag({1e-6, 3e-6, 5e-6}));
  const SymmetricMatrix g = SymmetricMatrix::diagonal(diag({1.0, -2.0, 0.5}));
  EXPECT_EQ(re_eig_backward(sym_eig(x), 1e-4, g).matrix(), Matrix::Zero(3, 3));
}

TEST(ReEigBackward, MixedSpectrumMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  int checked = 0;
  while (checked < 10) {
    const SymmetricMatrix x(oracle::random_matrix(4, 4, rng));
    const double eps = 0.05;
    const Vector lam = oracle::eigenvalues(x.matrix());
    if ((lam.array() - eps).abs().minCoeff() < 1e-3) continue;  // stay off the kink
    if (lam.maxCoeff() < eps || lam.minCoeff() > eps) continue;  // want a mixed spectrum
    const SymmetricMatrix c(oracle::random_matrix(4, 4, rng));
    auto probe = [&](const Matrix& m) {
      return frobenius_dot(c.matrix(), re_eig(SymmetricMatrix(m), eps).matrix());
    };
    const Matrix numeric = numeric_gradient_symmetric(probe, x.matrix(), 1e-5);
    EXPECT_LT(relative_error(re_eig_backward(sym_eig(x), eps, c).matrix(), numeric), 1e-4);
    ++checked;
  }
}

TEST(LogEig, IdentityAndDiagonal) {
  EXPECT_EQ(log_eig(SymmetricMatrix::identity(4)).matrix(), Matrix::Zero(4, 4));
  const Matrix out = log_eig(SymmetricMatrix::diagonal(diag({std::exp(1.0), std::exp(2.0)}))).matrix();
  EXPECT_NEAR(out(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(out(1, 1), 2.0, 1e-14);
}

TEST(LogEig, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const SymmetricMatrix x(oracle::random_spd(5, rng, 0.3));
    const SymmetricMatrix c(oracle::random_matrix(5, 5, rng));
    auto probe = [&](const Matrix& m) {
      return frobenius_dot(c.matrix(), log_eig(SymmetricMatrix(m)).matrix());
    };
    const Matrix numeric = numeric_gradient_symmetric(probe, x.matrix(), 1e-5);
    EXPECT_LT(relative_error(log_eig_backward(sym_eig(x), c).matrix(), numeric), 1e-5);
  }
}

TEST(LogEig, NonPositiveInputThrows) {
  EXPECT_THROW(log_eig(SymmetricMatrix::diagonal(diag({1.0, 0.0}))), SpectralDomainError);
}

TEST(HalfVec, Ordering) {
  Matrix y(2, 2);
  y << 1, 2, 2, 3;
  const HalfVector v = half_vec(SymmetricMatrix(y));
  ASSERT_EQ(v.values.size(), 3);
  EXPECT_EQ(v.values(0), 1.0);
  EXPECT_DOUBLE_EQ(v.values(1), 2.0 * std::sqrt(2.0));
  EXPECT_EQ(v.values(2), 3.0);
  EXPECT_EQ(half_vec(SymmetricMatrix::identity(2)).values, Vector::Map(std::array{1.0, 0.0, 1.0}.data(), 3));
}

TEST(HalfVec, IsAnIsometry) {
  std::mt19937_64 rng(10);
  for (int d : {1, 3, 10, 56}) {
    const SymmetricMatrix y(oracle::random_matrix(d, d, rng));
    const HalfVector v = half_vec(y);
    EXPECT_EQ(v.values.size(), half_vec_length(d));
    EXPECT_NEAR(v.values.norm(), y.matrix().norm(), 1e-12 * std::max(1.0, y.matrix().norm()));
    EXPECT_LT((v.values - oracle::half_vec(y.matrix())).cwiseAbs().maxCoeff(), 1e-15);
  }
  EXPECT_EQ(half_vec_length(10), 55);
}

TEST(HalfVec, AdjointIdentities) {
  std::mt19937_64 rng(11);
  const SymmetricMatrix y(oracle::random_matrix(6, 6, rng));
  EXPECT_LT((half_vec_adjoint(half_vec(y)).matrix() - y.matrix()).norm(), 1e-14);
  const HalfVector g{6, oracle::random_matrix(21, 1, rng)};
  EXPECT_NEAR(g.values.dot(half_vec(y).values), frobenius_dot(half_vec_adjoint(g).matrix(), y.matrix()),
              1e-12);
  EXPECT_THROW(half_vec_adjoint({5, g.values}), InvalidInput);
}

TEST(SpatAgg, IdentityWeight) {
  std::mt19937_64 rng(12);
  const SymmetricMatrix x(oracle::random_spd(4, rng));
  EXPECT_EQ(spd_spat_agg({x}, {{Matrix::Identity(4, 4)}}).matrix(), x.matrix());
}

TEST(SpatAgg, DoubledIdentity) {
  const auto i3 = SymmetricMatrix::identity(3);
  EXPECT_EQ(spd_spat_agg({i3, i3}, {{Matrix::Identity(3, 3), Matrix::Identity(3, 3)}}).matrix(),
            2.0 * Matrix::Identity(3, 3));
}

TEST(SpatAgg, MatchesDefinitionalSum) {
  std::mt19937_64 rng(13);
  std::vector<SpdMatrix> xs;
  SpatAggParams p;
  Matrix ref = Matrix::Zero(3, 3);
  for (int i = 0; i < 3; ++i) {
    xs.emplace_back(oracle::random_spd(4, rng));
    p.weights.push_back(oracle::random_orthonormal_rows(3, 4, rng));
    ref += p.weights[i] * xs[i].matrix() * p.weights[i].transpose();
  }
  const Matrix out = spd_spat_agg(xs, p).matrix();
  EXPECT_LT((out - ref).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(oracle::eigenvalues(out).minCoeff(), 0.0);
}

TEST(SpatAgg, LinearInEachInput) {
  std::mt19937_64 rng(14);
  SpatAggParams p{{oracle::random_orthonormal_rows(2, 4, rng), oracle::random_orthonormal_rows(2, 4, rng)}};
  const SymmetricMatrix x1(oracle::random_spd(4, rng)), x1b(oracle::random_spd(4, rng)),
      x2(oracle::random_spd(4, rng));
  const double a = 0.7, b = 1.9;
  const Matrix lhs = spd_spat_agg({a * x1 + b * x1b, x2}, p).matrix();
  const Matrix f1 = spd_spat_agg({x1, x2}, p).matrix();
  const Matrix f1b = spd_spat_agg({x1b, x2}, p).matrix();
  const Matrix f0 = spd_spat_agg({SymmetricMatrix::zero(4), x2}, p).matrix();
  // The second input contributes an affine offset; remove it once.
  EXPECT_LT((lhs - (a * (f1 - f0) + b * (f1b - f0) + f0)).norm(), 1e-10);
}

TEST(SpatAgg, Errors) {
  const auto i3 = SymmetricMatrix::identity(3);
  EXPECT_THROW(spd_spat_agg({}, {}), InvalidInput);
  EXPECT_THROW(spd_spat_agg({i3, i3}, {{Matrix::Identity(3, 3)}}), InvalidInput);
  EXPECT_THROW(spd_spat_agg({i3}, {{Matrix::Identity(2, 2)}}), InvalidInput);
  SpatAggParams bad{{2.0 * Matrix::Identity(3, 3)}};
  EXPECT_GT(stiefel_violation(bad), 1.0);
  EXPECT_THROW(validate(bad), InvalidInput);
}

TEST(SpatAggBackward, ZeroAndIdentityCases) {
  std::mt19937_64 rng(15);
  const SymmetricMatrix x(oracle::random_spd(3, rng));
  const SpatAggParams p{{Matrix::Identity(3, 3)}};
  const SpatAggGrads zero = spd_spat_agg_backward({x}, p, SymmetricMatrix::zero(3));
  EXPECT_EQ(zero.inputs[0].matrix(), Matrix::Zero(3, 3));
  EXPECT_EQ(zero.weights[0], Matrix::Zero(3, 3));
  const SymmetricMatrix g(oracle::random_matrix(3, 3, rng));
  EXPECT_LT((spd_spat_agg_backward({x}, p, g).inputs[0].matrix() - g.matrix()).norm(), 1e-15);
}

TEST(SpatAggBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<SpdMatrix> xs{SymmetricMatrix(oracle::random_spd(5, rng)),
                              SymmetricMatrix(oracle::random_spd(5, rng))};
    SpatAggParams p{{oracle::random_orthonormal_rows(3, 5, rng), oracle::random_orthonormal_rows(3, 5, rng)}};
    const SymmetricMatrix c(oracle::random_matrix(3, 3, rng));
    const SpatAggGrads g = spd_spat_agg_backward(xs, p, c);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      auto probe_w = [&](const Matrix& w) {
        SpatAggParams q = p;
        q.weights[i] = w;
        return frobenius_dot(c.matrix(), spd_spat_agg(xs, q).matrix());
      };
      EXPECT_LT(relative_error(g.weights[i], numeric_gradient(probe_w, p.weights[i], 1e-5)), 1e-5);
      auto probe_x = [&](const Matrix& m) {
        auto ys = xs;
        ys[i] = SymmetricMatrix(m);
        return frobenius_dot(c.matrix(), spd_spat_agg(ys, p).matrix());
      };
      EXPECT_LT(relative_error(g.inputs[i].matrix(),
                               numeric_gradient_symmetric(probe_x, xs[i].matrix(), 1e-5)),
                1e-5);
    }
  }
}
