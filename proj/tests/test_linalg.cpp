#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "stalelab/linalg.hpp"
#include "stalelab/verify.hpp"

using namespace stalelab;

namespace {

CounterRng rng_for(std::uint64_t s) { return CounterRng(s); }

}  // namespace

TEST(Matrix, RejectsNonFiniteAndBadShapes) {
  EXPECT_THROW(Matrix(0, 3), DimensionError);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Matrix(1, 2, std::vector<double>{1, NAN}), Error);
  EXPECT_THROW(Matrix(1, 1, std::vector<double>{INFINITY}), Error);
}

TEST(Matmul, IdentityAndHandExample) {
  const Matrix a{{1, 2}, {3, 4}};
  EXPECT_EQ(matmul(Matrix::identity(2), a), a);
  const Matrix c = matmul(a, Matrix{{5}, {6}});
  EXPECT_EQ(c, (Matrix{{17}, {39}}));
}

TEST(Matmul, MismatchNamesBothShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("2x3"), std::string::npos);
  }
}

TEST(Matmul, MatchesNaiveTripleLoop) { EXPECT_TRUE(check_matmul_naive().passed); }

TEST(Qr, IdentityGivesIdentity) {
  const QrResult r = qr_decompose(Matrix::identity(3));
  EXPECT_LT(max_abs_diff(r.q, Matrix::identity(3)), 1e-15);
  EXPECT_LT(max_abs_diff(r.r, Matrix::identity(3)), 1e-15);
}

TEST(Qr, HandExample) {
  const QrResult r = qr_decompose(Matrix{{3, 1}, {4, 0}});
  EXPECT_NEAR(r.q(0, 0), 0.6, 1e-14);
  EXPECT_NEAR(r.q(1, 0), 0.8, 1e-14);
  EXPECT_NEAR(r.r(0, 0), 5.0, 1e-14);
  EXPECT_GE(r.r(1, 1), 0.0);
}

TEST(Qr, RankDeficientColumnIsReported) {
  try {
    qr_decompose(Matrix{{1, 2}, {2, 4}, {3, 6}});
    FAIL();
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.column(), 1u);
  }
}

TEST(Qr, PropertyOrthonormalAndReconstructs) {
  CounterRng rng = rng_for(21);
  for (int t = 0; t < 50; ++t) {
    const std::size_t c = 1 + rng.below(7);
    const std::size_t r = c + rng.below(5);
    const Matrix a = oracle::random_matrix(rng, r, c);
    const QrResult qr = qr_decompose(a);
    EXPECT_LT(orthonormality_error(qr.q), 1e-10);
    EXPECT_LT(frobenius_norm(matmul(qr.q, qr.r) - a), 1e-10 * frobenius_norm(a));
    for (std::size_t i = 0; i < c; ++i) {
      EXPECT_GE(qr.r(i, i), 0.0);
      for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(qr.r(i, j), 0.0);
    }
  }
}

TEST(PowerQr, DiagonalAndIdentityFixedPoints) {
  EXPECT_LT(max_abs_diff(power_qr_step(Matrix::diagonal(std::vector<double>{3, 1}), Matrix::identity(2)),
                         Matrix::identity(2)),
            1e-15);
  CounterRng rng = rng_for(22);
  const Matrix q = oracle::random_orthogonal(rng, 4);
  const Matrix out = power_qr_step(Matrix::identity(4), q);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_LT(oracle::subspace_sine(out, c, q, c), 1e-12);
}

TEST(PowerQr, ConvergesToRotatedEigenvectors) {
  const Matrix r = rotation_2d(45.0);
  const Matrix a = matmul(matmul(r, Matrix::diagonal(std::vector<double>{10, 1})), r.transpose());
  Matrix q = Matrix::identity(2);
  for (int k = 0; k < 50; ++k) q = power_qr_step(a, q);
  const EigenResult e = jacobi_eigen(a);
  EXPECT_LT(oracle::subspace_sine(q, 0, e.vectors, 0), 1e-8);
  EXPECT_LT(oracle::subspace_sine(q, 1, e.vectors, 1), 1e-8);
}

TEST(PowerQr, GeometricConvergenceBound) { EXPECT_TRUE(check_power_iteration().passed); }

TEST(Jacobi, DiagonalInput) {
  const EigenResult e = jacobi_eigen(Matrix::diagonal(std::vector<double>{5, 2, 1}));
  EXPECT_EQ(e.values, (std::vector<double>{5, 2, 1}));
  EXPECT_LT(max_abs_diff(e.vectors, Matrix::identity(3)), 1e-15);
}

TEST(Jacobi, TwoByTwoHandExample) {
  const EigenResult e = jacobi_eigen(Matrix{{2, 1}, {1, 2}});
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(e.vectors(0, 0), s, 1e-14);
  EXPECT_NEAR(e.vectors(1, 0), s, 1e-14);
  // Largest-magnitude entry positive; for (1,-1)/sqrt2 the tie goes to the first.
  EXPECT_NEAR(std::abs(e.vectors(0, 1)), s, 1e-14);
  EXPECT_NEAR(e.vectors(0, 1), -e.vectors(1, 1), 1e-14);
}

TEST(Jacobi, RejectsAsymmetric) { EXPECT_THROW(jacobi_eigen(Matrix{{1, 2}, {0, 1}}), NotSymmetricError); }

TEST(Jacobi, PropertyReconstructionUpTo32) {
  CounterRng rng = rng_for(23);
  for (std::size_t n = 1; n <= 32; n += 3) {
    const Matrix a = oracle::random_symmetric(rng, n);
    const EigenResult e = jacobi_eigen(a);
    EXPECT_LT(frobenius_norm(reconstruct(e) - a), 1e-10) << "n=" << n;
    EXPECT_LT(orthonormality_error(e.vectors), 1e-10);
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t arg = 0;
      for (std::size_t r = 1; r < n; ++r)
        if (std::abs(e.vectors(r, c)) > std::abs(e.vectors(arg, c)) + 1e-12) arg = r;
      EXPECT_GT(e.vectors(arg, c), 0.0);
    }
  }
}

TEST(Kronecker, IdentityAndHandExample) {
  EXPECT_EQ(kronecker(Matrix::identity(2), Matrix::identity(3)), Matrix::identity(6));
  EXPECT_EQ(kronecker(Matrix{{1, 2}}, Matrix{{3}, {4}}), (Matrix{{3, 6}, {4, 8}}));
}

TEST(Kronecker, MixedProductAndTransposeIdentities) {
  CounterRng rng = rng_for(24);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = oracle::random_matrix(rng, 2, 2), b = oracle::random_matrix(rng, 2, 2);
    const Matrix a2 = oracle::random_matrix(rng, 2, 2), b2 = oracle::random_matrix(rng, 2, 2);
    EXPECT_LT(max_abs_diff(matmul(kronecker(a, b), kronecker(a2, b2)), kronecker(matmul(a, a2), matmul(b, b2))),
              1e-12);
    EXPECT_EQ(kronecker(a, b).transpose(), kronecker(a.transpose(), b.transpose()));
  }
}

TEST(Kronecker, VecIdentity) {
  // vec(A X B) = (B^T kron A) vec(X), column-major vec.
  CounterRng rng = rng_for(25);
  const Matrix a = oracle::random_matrix(rng, 3, 2), x = oracle::random_matrix(rng, 2, 4),
               b = oracle::random_matrix(rng, 4, 5);
  EXPECT_LT(max_abs_diff(vec(matmul(matmul(a, x), b)), matmul(kronecker(b.transpose(), a), vec(x))), 1e-12);
  EXPECT_EQ(unvec(vec(x), 2, 4), x);
}

TEST(OneOneNorm, HandExamples) {
  EXPECT_EQ(one_one_norm(Matrix::diagonal(std::vector<double>{3, -1})), 4.0);
  EXPECT_EQ(one_one_norm(Matrix{{1, -2}, {3, -4}}), 10.0);
}

TEST(OneOneNorm, KroneckerIsMultiplicative) {
  CounterRng rng = rng_for(26);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = oracle::random_matrix(rng, 3, 2), b = oracle::random_matrix(rng, 2, 4);
    const double lhs = one_one_norm(kronecker(a, b));
    EXPECT_NEAR(lhs, one_one_norm(a) * one_one_norm(b), 1e-12 * lhs);
  }
}

TEST(OneOneNorm, MinimizedByDiagonalForm) {
  CounterRng rng = rng_for(27);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.below(5);
    std::vector<double> lam(n);
    for (double& l : lam) l = rng.uniform(-3.0, 3.0);
    const Matrix d = Matrix::diagonal(lam);
    const Matrix v = oracle::random_orthogonal(rng, n);
    EXPECT_GE(one_one_norm(matmul(matmul(v, d), v.transpose())) * (1 + 1e-12), one_one_norm(d));
  }
}
