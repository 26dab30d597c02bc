#ifndef WAVEGRF_SPECTRAL_HPP
#define WAVEGRF_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "error.hpp"
#include "mra.hpp"
#include "rng.hpp"

namespace wavegrf {

using Matrix = Eigen::MatrixXd;
using ApplyFn = std::function<void(const Vector&, Vector&)>;
using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Structurally symmetric sparse matrix in compressed-row form, both
/// triangles stored.
class SparseSymMatrix
{
public:
    SparseSymMatrix() = default;

    SparseSymMatrix(int n, std::vector<int> row_ptr, std::vector<int> cols, std::vector<double> vals)
        : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), vals_(std::move(vals))
    {
        if (static_cast<int>(row_ptr_.size()) != n_ + 1 || cols_.size() != vals_.size()
            || row_ptr_.back() != static_cast<int>(cols_.size()))
            throw Error("inconsistent compressed-row arrays");
    }

    /// Keep the entries of a dense symmetric matrix whose value is nonzero.
    static SparseSymMatrix from_dense(const Matrix& A)
    {
        if (A.rows() != A.cols())
            throw ConfigError("matrix is not square");
        const int n = static_cast<int>(A.rows());
        std::vector<int> rp(static_cast<std::size_t>(n) + 1, 0), c;
        std::vector<double> v;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j)
                if (A(i, j) != 0.0) {
                    c.push_back(j);
                    v.push_back(A(i, j));
                }
            rp[static_cast<std::size_t>(i) + 1] = static_cast<int>(c.size());
        }
        return {n, std::move(rp), std::move(c), std::move(v)};
    }

    int size() const { return n_; }
    long nnz() const { return static_cast<long>(vals_.size()); }
    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& cols() const { return cols_; }
    const std::vector<double>& values() const { return vals_; }
    std::vector<double>& values() { return vals_; }

    void apply(const Vector& x, Vector& y) const
    {
        if (x.size() != n_)
            throw ConfigError("dimension mismatch in sparse product");
        y.resize(n_);
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (int q = row_ptr_[i]; q < row_ptr_[i + 1]; ++q)
                s += vals_[q] * x[cols_[q]];
            y[i] = s;
        }
    }

    Vector operator*(const Vector& x) const
    {
        Vector y;
        apply(x, y);
        return y;
    }

    Matrix to_dense() const
    {
        Matrix A = Matrix::Zero(n_, n_);
        for (int i = 0; i < n_; ++i)
            for (int q = row_ptr_[i]; q < row_ptr_[i + 1]; ++q)
                A(i, cols_[q]) = vals_[q];
        return A;
    }

    Vector diagonal() const
    {
        Vector d = Vector::Zero(n_);
        for (int i = 0; i < n_; ++i)
            for (int q = row_ptr_[i]; q < row_ptr_[i + 1]; ++q)
                if (cols_[q] == i)
                    d[i] = vals_[q];
        return d;
    }

    /// Remove stored zeros.
    void compact()
    {
        std::vector<int> rp(static_cast<std::size_t>(n_) + 1, 0), c;
        std::vector<double> v;
        for (int i = 0; i < n_; ++i) {
            for (int q = row_ptr_[i]; q < row_ptr_[i + 1]; ++q)
                if (vals_[q] != 0.0) {
                    c.push_back(cols_[q]);
                    v.push_back(vals_[q]);
                }
            rp[static_cast<std::size_t>(i) + 1] = static_cast<int>(c.size());
        }
        row_ptr_ = std::move(rp);
        cols_ = std::move(c);
        vals_ = std::move(v);
    }

    RowSparse to_eigen() const
    {
        RowSparse S(n_, n_);
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(vals_.size());
        for (int i = 0; i < n_; ++i)
            for (int q = row_ptr_[i]; q < row_ptr_[i + 1]; ++q)
                t.emplace_back(i, cols_[q], vals_[q]);
        S.setFromTriplets(t.begin(), t.end());
        return S;
    }

    ApplyFn as_operator() const
    {
        return [this](const Vector& x, Vector& y) { apply(x, y); };
    }

private:
    int n_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> cols_;
    std::vector<double> vals_;
};

/// D^s A D^s with D = diag(2^{s|lambda|}).
inline Matrix precondition(const Matrix& A, const DiagScaling& D)
{
    if (A.rows() != D.entries.size() || A.cols() != D.entries.size())
        throw ConfigError("dimension mismatch between matrix and diagonal scaling");
    return D.entries.asDiagonal() * A * D.entries.asDiagonal();
}

inline SparseSymMatrix precondition(SparseSymMatrix A, const DiagScaling& D)
{
    if (A.size() != D.entries.size())
        throw ConfigError("dimension mismatch between matrix and diagonal scaling");
    auto& v = A.values();
    for (int i = 0; i < A.size(); ++i)
        for (int q = A.row_ptr()[i]; q < A.row_ptr()[i + 1]; ++q)
            v[q] *= D.entries[i] * D.entries[A.cols()[q]];
    return A;
}

/// Scaling by the inverse square roots of the actual diagonal entries.
inline DiagScaling jacobi_scaling(const Vector& diag)
{
    DiagScaling D;
    D.s = std::nan("");
    D.entries.resize(diag.size());
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        if (!(diag[i] > 0.0))
            throw NumericalError("non-positive diagonal entry in Jacobi scaling");
        D.entries[i] = 1.0 / std::sqrt(diag[i]);
    }
    return D;
}

struct CgResult
{
    Vector x;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Conjugate gradients for SPD operators; stops when ||r|| <= tol ||b||.
inline CgResult cg_solve(const ApplyFn& A, const Vector& b, double tol, int max_iter)
{
    if (!(tol > 0.0))
        throw ConfigError("CG tolerance must be positive");
    CgResult res;
    const Eigen::Index n = b.size();
    res.x = Vector::Zero(n);
    const double bnorm = b.norm();
    if (!std::isfinite(bnorm))
        throw NumericalError("non-finite right-hand side in CG");
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    Vector r = b, p = b, Ap(n);
    double rr = r.squaredNorm();
    for (int it = 1; it <= max_iter; ++it) {
        A(p, Ap);
        const double pAp = p.dot(Ap);
        if (!std::isfinite(pAp))
            throw NumericalError("non-finite value in CG");
        if (pAp <= 0.0)
            throw NumericalError("CG breakdown: operator is not positive definite");
        const double alpha = rr / pAp;
        res.x += alpha * p;
        r -= alpha * Ap;
        const double rr_new = r.squaredNorm();
        res.iterations = it;
        res.relative_residual = std::sqrt(rr_new) / bnorm;
        if (res.relative_residual <= tol) {
            res.converged = true;
            return res;
        }
        p = r + (rr_new / rr) * p;
        rr = rr_new;
    }
    return res;
}

/// CG on (A + shift I) X = B column by column, with the products for all
/// columns done as one matrix-matrix product. Returns the largest iteration
/// count; throws if a column does not reach the tolerance.
template <class Op>
int cg_solve_block(const Op& A, double shift, const Matrix& B, Matrix& X, double tol, int max_iter)
{
    const Eigen::Index n = B.rows(), m = B.cols();
    X = Matrix::Zero(n, m);
    Matrix R = B, P = B, AP(n, m);
    Vector rr = R.colwise().squaredNorm().transpose();
    const Vector bnorm = rr.cwiseSqrt();
    if (!bnorm.allFinite())
        throw NumericalError("non-finite right-hand side in CG");
    std::vector<char> active(static_cast<std::size_t>(m));
    int remaining = 0;
    for (Eigen::Index c = 0; c < m; ++c) {
        active[static_cast<std::size_t>(c)] = bnorm[c] > 0.0;
        remaining += active[static_cast<std::size_t>(c)];
    }
    int it = 0;
    while (remaining > 0) {
        if (it == max_iter)
            throw NumericalError("block CG did not converge in " + std::to_string(max_iter) + " iterations");
        ++it;
        AP.noalias() = A * P;
        AP += shift * P;
        for (Eigen::Index c = 0; c < m; ++c) {
            if (!active[static_cast<std::size_t>(c)])
                continue;
            const double pAp = P.col(c).dot(AP.col(c));
            if (!std::isfinite(pAp))
                throw NumericalError("non-finite value in CG");
            if (pAp <= 0.0)
                throw NumericalError("CG breakdown: operator is not positive definite");
            const double alpha = rr[c] / pAp;
            X.col(c) += alpha * P.col(c);
            R.col(c) -= alpha * AP.col(c);
            const double rr_new = R.col(c).squaredNorm();
            if (std::sqrt(rr_new) <= tol * bnorm[c]) {
                active[static_cast<std::size_t>(c)] = 0;
                --remaining;
                P.col(c).setZero();
                continue;
            }
            P.col(c) = R.col(c) + (rr_new / rr[c]) * P.col(c);
            rr[c] = rr_new;
        }
    }
    return it;
}

struct SpectralBounds
{
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    std::string method;
    double tolerance = 0.0;

    double condition() const { return lambda_max / lambda_min; }
    /// Widen the interval by a relative safety margin.
    SpectralBounds widened(double rel) const
    {
        SpectralBounds b = *this;
        b.lambda_min = lambda_min / (1.0 + rel);
        b.lambda_max = lambda_max * (1.0 + rel);
        return b;
    }
};

/// Extreme eigenvalues by Lanczos with full reorthogonalisation and a
/// deterministic start vector.
inline SpectralBounds lanczos_extremes(const ApplyFn& A, int n, double tol, std::uint64_t seed = 20240607,
                                       int max_steps = -1)
{
    if (n <= 0)
        throw ConfigError("Lanczos needs a positive dimension");
    if (max_steps < 0)
        max_steps = std::min(n, 600);
    max_steps = std::min(max_steps, n);
    NormalStream rng(seed, 0x4C414E43ULL);
    Matrix V(n, max_steps + 1);
    Vector v0 = rng.vector(0, n);
    V.col(0) = v0 / v0.norm();
    std::vector<double> alpha, beta;
    Vector w(n);
    double prev_min = 0.0, prev_max = 0.0;
    SpectralBounds best;
    best.method = "lanczos";
    best.tolerance = tol;
    for (int m = 0; m < max_steps; ++m) {
        A(V.col(m), w);
        const double a = V.col(m).dot(w);
        alpha.push_back(a);
        w -= a * V.col(m);
        if (m > 0)
            w -= beta.back() * V.col(m - 1);
        // two passes of classical Gram-Schmidt against the whole basis
        for (int pass = 0; pass < 2; ++pass)
            w -= V.leftCols(m + 1) * (V.leftCols(m + 1).transpose() * w);
        const double b = w.norm();
        const int k = m + 1;
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) {
            T(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < k)
                T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(k - 1);
        // residual norms of the extreme Ritz pairs
        const double res_min = std::abs(b * es.eigenvectors()(k - 1, 0));
        const double res_max = std::abs(b * es.eigenvectors()(k - 1, k - 1));
        best.lambda_min = lmin;
        best.lambda_max = lmax;
        const bool exhausted = b <= 1e-14 * std::max(std::abs(lmax), 1.0) || k == n;
        const bool small_res = res_min <= tol * std::abs(lmin) && res_max <= tol * std::abs(lmax);
        const bool stalled = m > 4 && std::abs(lmin - prev_min) <= 0.01 * tol * std::abs(lmin)
                             && std::abs(lmax - prev_max) <= 0.01 * tol * std::abs(lmax);
        if (exhausted || small_res || (stalled && res_min <= std::sqrt(tol) * std::abs(lmin))) {
            return best;
        }
        prev_min = lmin;
        prev_max = lmax;
        beta.push_back(b);
        V.col(m + 1) = w / b;
    }
    throw NumericalError("Lanczos did not converge: best bounds [" + std::to_string(best.lambda_min) + ", "
                         + std::to_string(best.lambda_max) + "]");
}

struct DenseOracle
{
    Vector eigenvalues;
    Matrix eigenvectors;

    Matrix sqrt() const
    {
        if (eigenvalues.size() > 0 && eigenvalues.minCoeff() < 0.0)
            throw NumericalError("matrix square root of an indefinite matrix");
        return eigenvectors * eigenvalues.cwiseSqrt().asDiagonal() * eigenvectors.transpose();
    }

    /// Apply a function of the matrix through its eigendecomposition.
    template <class F>
    Matrix function(F&& f) const
    {
        Vector fl = eigenvalues.unaryExpr(f);
        return eigenvectors * fl.asDiagonal() * eigenvectors.transpose();
    }

    SpectralBounds bounds() const
    {
        return {eigenvalues(0), eigenvalues(eigenvalues.size() - 1), "dense", 0.0};
    }
};

inline void require_symmetric(const Matrix& A)
{
    if (A.rows() != A.cols())
        throw ConfigError("matrix is not square");
    const double scale = std::max(A.cwiseAbs().maxCoeff(), 1e-300);
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw ConfigError("matrix is not symmetric");
}

/// Full symmetric eigendecomposition (ascending eigenvalues).
inline DenseOracle dense_oracle(const Matrix& A)
{
    require_symmetric(A);
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    if (es.info() != Eigen::Success)
        throw NumericalError("symmetric eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

/// Lower Cholesky factor; throws if A is not positive definite.
inline Matrix dense_cholesky(const Matrix& A)
{
    require_symmetric(A);
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success)
        throw NumericalError("Cholesky factorisation failed: matrix is not positive definite");
    return llt.matrixL();
}

inline double condition_number(const Matrix& A)
{
    require_symmetric(A);
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(A, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(ev(0) > 0.0))
        throw NumericalError("condition number requested for an indefinite matrix");
    return ev(ev.size() - 1) / ev(0);
}

/// Dense path up to p = 2048, Lanczos beyond.
inline double condition_number(const SparseSymMatrix& A, double tol = 1e-8)
{
    if (A.size() <= 2048)
        return condition_number(A.to_dense());
    const auto b = lanczos_extremes(A.as_operator(), A.size(), tol);
    if (!(b.lambda_min > 0.0))
        throw NumericalError("condition number requested for an indefinite matrix");
    return b.condition();
}

} // namespace wavegrf

#endif
