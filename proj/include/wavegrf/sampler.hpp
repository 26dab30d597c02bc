#ifndef WAVEGRF_SAMPLER_HPP
#define WAVEGRF_SAMPLER_HPP

//
// Matrix square root by the contour integral rational approximation
//   sqrt(R) ~ S_K = (2 K(m) sqrt(c-) / (pi K)) R sum_k dn(t_k)/cn(t_k)^2 (R + w_k^2 I)^{-1}
// with m = 1 - c-/c+, t_k = (k - 1/2) K(m) / K, w_k = sqrt(c-) sn(t_k)/cn(t_k),
// and GRF sampling z = D^{-ra} S_K xi in dual wavelet coordinates.
//

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "elliptic.hpp"
#include "error.hpp"
#include "manifold.hpp"
#include "mra.hpp"
#include "rng.hpp"
#include "spectral.hpp"

namespace wavegrf {

struct ContourQuadrature
{
    int K = 0;
    SpectralBounds bounds;
    EllipticParams elliptic;
    std::vector<double> nodes;   // t_k
    std::vector<double> poles;   // w_k^2
    std::vector<double> weights; // dn(t_k) / cn(t_k)^2
    double prefactor = 0.0;      // 2 K(m) sqrt(c-) / (pi K)
    bool scalar = false;         // c- == c+: S_K = sqrt(c-) I
    double scalar_root = 0.0;

    /// The rational function S_K applied to a scalar lambda.
    double evaluate(double lambda) const
    {
        if (scalar)
            return scalar_root;
        double s = 0.0;
        for (int k = 0; k < K; ++k)
            s += weights[static_cast<std::size_t>(k)] / (lambda + poles[static_cast<std::size_t>(k)]);
        return prefactor * lambda * s;
    }
};

inline ContourQuadrature build_contour(const SpectralBounds& bounds, int K)
{
    if (K < 1)
        throw ConfigError("contour quadrature needs K >= 1 nodes");
    if (!(bounds.lambda_min > 0.0) || !(bounds.lambda_max >= bounds.lambda_min) || !std::isfinite(bounds.lambda_max))
        throw ConfigError("contour quadrature needs bounds 0 < c- <= c+");
    ContourQuadrature q;
    q.K = K;
    q.bounds = bounds;
    if (bounds.lambda_max <= bounds.lambda_min * (1.0 + 1e-15)) {
        q.scalar = true;
        q.scalar_root = std::sqrt(bounds.lambda_min);
        return q;
    }
    const double cm = bounds.lambda_min;
    const double m = 1.0 - bounds.lambda_min / bounds.lambda_max;
    q.elliptic = elliptic_complete(m);
    const double Kc = q.elliptic.K_complete;
    q.prefactor = 2.0 * Kc * std::sqrt(cm) / (std::numbers::pi * K);
    for (int k = 1; k <= K; ++k) {
        const double t = (k - 0.5) * Kc / K;
        const auto j = jacobi_sn_cn_dn(t, m);
        q.nodes.push_back(t);
        q.poles.push_back(cm * (j.sn / j.cn) * (j.sn / j.cn));
        q.weights.push_back(j.dn / (j.cn * j.cn));
    }
    return q;
}

/// Smallest K <= K_max whose rational approximation matches sqrt to relative
/// accuracy tol on a logarithmic grid over [c-, c+].
inline int choose_nodes(const SpectralBounds& bounds, double tol, int K_max = 200)
{
    for (int K = 1; K <= K_max; ++K) {
        const auto q = build_contour(bounds, K);
        if (q.scalar)
            return K;
        double worst = 0.0;
        const int n = 512;
        for (int i = 0; i <= n; ++i) {
            const double l = bounds.lambda_min * std::pow(bounds.condition(), double(i) / n);
            worst = std::max(worst, std::abs(q.evaluate(l) - std::sqrt(l)) / std::sqrt(l));
        }
        if (worst <= tol)
            return K;
    }
    throw NumericalError("no contour rule with at most " + std::to_string(K_max) + " nodes reaches the tolerance");
}

/// y = S_K x, each shifted system solved by CG to relative tolerance cg_tol.
inline Vector apply_sqrt(const ApplyFn& R, int n, const ContourQuadrature& q, const Vector& x, double cg_tol = 1e-12,
                         int max_iter = -1)
{
    if (x.size() != n)
        throw ConfigError("dimension mismatch in apply_sqrt");
    if (q.scalar)
        return q.scalar_root * x;
    if (max_iter < 0)
        max_iter = 10 * n + 100;
    std::vector<Vector> parts(static_cast<std::size_t>(q.K));
    std::vector<int> failed(static_cast<std::size_t>(q.K), 0);
#pragma omp parallel for schedule(dynamic, 1)
    for (int k = 0; k < q.K; ++k) {
        const double shift = q.poles[static_cast<std::size_t>(k)];
        ApplyFn shifted = [&R, shift](const Vector& v, Vector& out) {
            R(v, out);
            out += shift * v;
        };
        const auto res = cg_solve(shifted, x, cg_tol, max_iter);
        failed[static_cast<std::size_t>(k)] = res.converged ? 0 : 1;
        parts[static_cast<std::size_t>(k)] = q.weights[static_cast<std::size_t>(k)] * res.x;
    }
    for (int f : failed)
        if (f)
            throw NumericalError("shifted CG solve did not converge in apply_sqrt");
    Vector sum = Vector::Zero(n);
    for (const auto& v : parts)
        sum += v;
    Vector y(n);
    R(sum, y);
    return q.prefactor * y;
}

/// S_K applied to the columns of X.
template <class Op>
Matrix apply_sqrt_batch(const Op& R, const ContourQuadrature& q, const Matrix& X, double cg_tol = 1e-12,
                        int max_iter = -1)
{
    if (X.rows() != R.rows())
        throw ConfigError("dimension mismatch in apply_sqrt_batch");
    if (q.scalar)
        return q.scalar_root * X;
    if (max_iter < 0)
        max_iter = 10 * static_cast<int>(X.rows()) + 100;
    Matrix sum = Matrix::Zero(X.rows(), X.cols()), Y;
    for (int k = 0; k < q.K; ++k) {
        cg_solve_block(R, q.poles[static_cast<std::size_t>(k)], X, Y, cg_tol, max_iter);
        sum += q.weights[static_cast<std::size_t>(k)] * Y;
    }
    return q.prefactor * (R * sum);
}

/// Dense matrix S_K = V f(Lambda) V^T, evaluated exactly on an eigendecomposition.
inline Matrix contour_matrix(const DenseOracle& oracle, const ContourQuadrature& q)
{
    return oracle.function([&q](double l) { return q.evaluate(l); });
}

struct GrfSampleMeta
{
    int J = 0;
    int K = 0;
    double kappa_hat = 1.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t sample = 0;
    double a = 0.0;
    double a_prime = 0.0;
    double epsilon = 0.0;
};

struct GrfSample
{
    Vector coefficients; // dual wavelet coordinates z over Lambda_J
    GrfSampleMeta meta;
};

/// Draws z = D^{-ra} S_K xi for the preconditioned tapered covariance
/// R = D^{ra} C D^{ra}.
class GrfSampler
{
public:
    GrfSampler(const LevelIndexSet& idx, const SparseSymMatrix& Ceps, double ra, const ContourQuadrature& contour,
               std::uint64_t seed)
        : idx_(idx), D_(diag_scaling(idx, ra)), R_(precondition(Ceps, D_)), contour_(contour), rng_(seed)
    {
        if (Ceps.size() != idx.size())
            throw ConfigError("covariance matrix does not match the index set");
    }

    const SparseSymMatrix& preconditioned() const { return R_; }
    const ContourQuadrature& contour() const { return contour_; }
    const DiagScaling& scaling() const { return D_; }

    GrfSample draw(std::uint64_t sample, double cg_tol = 1e-12) const
    {
        const int n = idx_.size();
        const Vector xi = rng_.vector(sample, n);
        Vector y = apply_sqrt(R_.as_operator(), n, contour_, xi, cg_tol);
        GrfSample s;
        s.coefficients = y.cwiseQuotient(D_.entries);
        if (!s.coefficients.allFinite())
            throw NumericalError("non-finite GRF sample");
        s.meta.J = idx_.J();
        s.meta.K = contour_.K;
        s.meta.kappa_hat = contour_.bounds.condition();
        s.meta.lambda_min = contour_.bounds.lambda_min;
        s.meta.lambda_max = contour_.bounds.lambda_max;
        s.meta.seed = rng_.seed();
        s.meta.sample = sample;
        return s;
    }

    /// Coefficients of samples first .. first+count-1 as columns.
    Matrix draw_batch(std::uint64_t first, int count, double cg_tol = 1e-12) const
    {
        const int n = idx_.size();
        Matrix Xi(n, count);
        for (int c = 0; c < count; ++c)
            Xi.col(c) = rng_.vector(first + static_cast<std::uint64_t>(c), n);
        Matrix Z;
        // dense storage wins once a quarter of the entries is populated
        if (4 * R_.nnz() > static_cast<long>(n) * n) {
            if (Rd_.rows() == 0)
                Rd_ = R_.to_dense();
            Z = apply_sqrt_batch(Rd_, contour_, Xi, cg_tol);
        } else {
            if (Rs_.rows() == 0)
                Rs_ = R_.to_eigen();
            Z = apply_sqrt_batch(Rs_, contour_, Xi, cg_tol);
        }
        Z = D_.entries.cwiseInverse().asDiagonal() * Z;
        if (!Z.allFinite())
            throw NumericalError("non-finite GRF sample");
        return Z;
    }

private:
    LevelIndexSet idx_;
    DiagScaling D_;
    SparseSymMatrix R_;
    ContourQuadrature contour_;
    NormalStream rng_;
    mutable RowSparse Rs_;
    mutable Matrix Rd_;
};

/// One draw; see GrfSampler.
inline GrfSample sample_grf(const LevelIndexSet& idx, const SparseSymMatrix& Ceps, double ra,
                            const ContourQuadrature& contour, std::uint64_t seed, std::uint64_t sample = 0)
{
    return GrfSampler(idx, Ceps, ra, contour, seed).draw(sample);
}

/// sum_lambda z_lambda psit_lambda(t) on the parameter grid t_i = i 2^{-level},
/// level >= J. Values are with respect to the parameter domain.
inline Vector synthesize_parameter_field(const WaveletSystem& sys, const Vector& z, int grid_level)
{
    int J = 0;
    while ((Eigen::Index{1} << J) < z.size())
        ++J;
    if ((Eigen::Index{1} << J) != z.size())
        throw ConfigError("coefficient vector length must be a power of two");
    if (grid_level < J)
        throw ConfigError("synthesis grid is coarser than the finest wavelet level");
    if (grid_level > J + 12)
        throw ConfigError("synthesis grid too fine");
    return evaluate_dual_expansion(sys, sys.ifwt_dual(z), grid_level - J);
}

/// Field values on the curve: with the weight |gamma'|^e of the Galerkin
/// assembly the dual functions on the curve are psit / |gamma'|^e.
inline Vector synthesize_field(const WaveletSystem& sys, const Vector& z, int grid_level,
                               const UnitParametrization& curve, double weight_exponent = 0.0)
{
    Vector f = synthesize_parameter_field(sys, z, grid_level);
    if (weight_exponent == 0.0)
        return f;
    const double h = std::ldexp(1.0, -grid_level);
    for (Eigen::Index i = 0; i < f.size(); ++i)
        f[i] /= std::pow(curve.speed(static_cast<double>(i) * h), weight_exponent);
    return f;
}

} // namespace wavegrf

#endif
