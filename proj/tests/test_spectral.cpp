#include <gtest/gtest.h>

#include <random>

#include <wavegrf/spectral.hpp>

using namespace wavegrf;

namespace {

// SPD test matrix Q diag(lambda) Q^T with a prescribed spectrum
Matrix spd_with_spectrum(const Vector& lambda, unsigned seed)
{
    std::mt19937_64 g(seed);
    std::normal_distribution<double> N;
    const auto n = lambda.size();
    Matrix X(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            X(i, j) = N(g);
    Eigen::HouseholderQR<Matrix> qr(X);
    const Matrix Q = qr.householderQ();
    return Q * lambda.asDiagonal() * Q.transpose();
}

Matrix banded_spd(int n)
{
    Matrix A = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = 4.0 + 0.01 * i;
        if (i + 1 < n)
            A(i, i + 1) = A(i + 1, i) = -1.0;
        if (i + 3 < n)
            A(i, i + 3) = A(i + 3, i) = 0.5;
    }
    return A;
}

} // namespace

TEST(Spectral, SparseMatchesDense)
{
    const Matrix A = banded_spd(50);
    const auto S = SparseSymMatrix::from_dense(A);
    EXPECT_EQ(S.nnz(), (A.array() != 0.0).count());
    EXPECT_EQ(S.to_dense(), A);
    const Vector x = Vector::LinSpaced(50, -1.0, 2.0);
    EXPECT_LE((S * x - A * x).norm(), 1e-13);
    EXPECT_EQ(S.diagonal(), A.diagonal());
    EXPECT_EQ(Matrix(S.to_eigen()), A);
}

TEST(Spectral, CompactDropsZeros)
{
    auto S = SparseSymMatrix::from_dense(banded_spd(10));
    S.values()[1] = 0.0;
    const long before = S.nnz();
    S.compact();
    EXPECT_EQ(S.nnz(), before - 1);
}

TEST(Spectral, Preconditioning)
{
    const Matrix A = banded_spd(8);
    DiagScaling D;
    D.entries = Vector::LinSpaced(8, 1.0, 8.0);
    const Matrix P = precondition(A, D);
    EXPECT_DOUBLE_EQ(P(2, 3), 3.0 * 4.0 * A(2, 3));
    EXPECT_LE((precondition(SparseSymMatrix::from_dense(A), D).to_dense() - P).norm(), 1e-13 * P.norm());
}

TEST(Spectral, ConjugateGradients)
{
    const Matrix A = banded_spd(200);
    const auto S = SparseSymMatrix::from_dense(A);
    const Vector b = Vector::Ones(200);
    const auto r = cg_solve(S.as_operator(), b, 1e-12, 1000);
    ASSERT_TRUE(r.converged);
    EXPECT_LE((A * r.x - b).norm(), 1e-11 * b.norm());
    EXPECT_LE((r.x - A.llt().solve(b)).norm(), 1e-10);
    const auto z = cg_solve(S.as_operator(), Vector::Zero(200), 1e-12, 10);
    EXPECT_TRUE(z.converged);
    EXPECT_EQ(z.x.norm(), 0.0);
}

TEST(Spectral, ConjugateGradientsDetectsIndefinite)
{
    Matrix A = Matrix::Identity(4, 4);
    A(3, 3) = -1.0;
    const auto S = SparseSymMatrix::from_dense(A);
    EXPECT_THROW(cg_solve(S.as_operator(), Vector::Unit(4, 3), 1e-10, 10), NumericalError);
}

TEST(Spectral, BlockCgMatchesSingle)
{
    const Matrix A = banded_spd(60);
    const RowSparse S = SparseSymMatrix::from_dense(A).to_eigen();
    Matrix B(60, 3);
    B.col(0) = Vector::Ones(60);
    B.col(1) = Vector::LinSpaced(60, 0, 1);
    B.col(2).setZero();
    Matrix X;
    cg_solve_block(S, 0.5, B, X, 1e-13, 500);
    const Matrix Ashift = A + 0.5 * Matrix::Identity(60, 60);
    EXPECT_LE((Ashift * X - B).norm(), 1e-11 * B.norm());
    EXPECT_EQ(X.col(2).norm(), 0.0);
}

TEST(Spectral, DenseOracleFunctions)
{
    Vector lambda(6);
    lambda << 0.5, 1, 2, 3, 5, 9;
    const Matrix A = spd_with_spectrum(lambda, 3);
    const auto o = dense_oracle(A);
    const Matrix R = o.sqrt();
    EXPECT_LE((R * R - A).norm(), 1e-12);
    EXPECT_NEAR(o.bounds().lambda_min, 0.5, 1e-12);
    EXPECT_NEAR(o.bounds().lambda_max, 9.0, 1e-12);
    EXPECT_NEAR(condition_number(A), 18.0, 1e-10);
    const Matrix L = dense_cholesky(A);
    EXPECT_LE((L * L.transpose() - A).norm(), 1e-12);
}

TEST(Spectral, LanczosExtremes)
{
    Vector lambda = Vector::LinSpaced(300, 1.0, 2.0);
    lambda[0] = 0.01;
    lambda[299] = 40.0;
    const Matrix A = spd_with_spectrum(lambda, 11);
    const auto S = SparseSymMatrix::from_dense(A);
    const auto b = lanczos_extremes(S.as_operator(), 300, 1e-8);
    EXPECT_NEAR(b.lambda_min, 0.01, 1e-6);
    EXPECT_NEAR(b.lambda_max, 40.0, 1e-5);
    const auto w = b.widened(0.1);
    EXPECT_LT(w.lambda_min, b.lambda_min);
    EXPECT_GT(w.lambda_max, b.lambda_max);
}

TEST(Spectral, SparseConditionNumber)
{
    const Matrix A = banded_spd(100);
    EXPECT_NEAR(condition_number(SparseSymMatrix::from_dense(A)), condition_number(A), 1e-8 * condition_number(A));
}

TEST(Spectral, RejectsAsymmetric)
{
    Matrix A = Matrix::Identity(3, 3);
    A(0, 1) = 1.0;
    EXPECT_THROW(dense_oracle(A), ConfigError);
}
