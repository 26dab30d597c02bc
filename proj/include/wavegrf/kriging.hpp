#ifndef WAVEGRF_KRIGING_HPP
#define WAVEGRF_KRIGING_HPP

//
// Posterior mean of the field given noisy local averages
//   y_i = <g_i, Z> + eta_i,   g_i = 1_{[c_i - w_i/2, c_i + w_i/2]} / w_i,
// in dual wavelet coordinates: mu = C G^T (G C G^T + sigma^2 I)^{-1} y with
// G_{i,lambda} = <g_i, psit_lambda>. G is never formed in the solve; it is
// applied as G_phit * ifwt_dual and its transpose as fwt * G_phit^T, where
// G_phit holds the single-scale entries <g_i, phit_{J,k}> (a few per row).
//

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "error.hpp"
#include "manifold.hpp"
#include "mra.hpp"
#include "spectral.hpp"

namespace wavegrf {

struct ObservationSet
{
    std::vector<double> centers; // parameter in [0, 1)
    std::vector<double> widths;
    std::vector<double> values;
    double sigma2 = 0.0;

    int size() const { return static_cast<int>(centers.size()); }

    /// ||g_i||_{L^2} with respect to the parameter.
    double l2_norm(int i) const { return 1.0 / std::sqrt(widths[static_cast<std::size_t>(i)]); }

    void validate() const
    {
        const std::size_t K = centers.size();
        if (K == 0)
            throw ConfigError("no observations");
        if (widths.size() != K || values.size() != K)
            throw ConfigError("observation centers, widths and values differ in length");
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
            throw ConfigError("kriging needs a noise variance sigma2 > 0");
        for (std::size_t i = 0; i < K; ++i) {
            if (!(widths[i] > 0.0) || widths[i] > 1.0)
                throw ConfigError("observation width must lie in (0, 1]");
            if (!std::isfinite(centers[i]) || !std::isfinite(values[i]))
                throw ConfigError("non-finite observation");
        }
        if (K == 1)
            return;
        std::vector<std::pair<double, double>> iv; // (start, end) with start in [0, 1)
        for (std::size_t i = 0; i < K; ++i) {
            double s = centers[i] - 0.5 * widths[i];
            s -= std::floor(s);
            iv.emplace_back(s, s + widths[i]);
        }
        std::sort(iv.begin(), iv.end());
        const double tol = 1e-12;
        for (std::size_t i = 0; i + 1 < K; ++i)
            if (iv[i].second > iv[i + 1].first + tol)
                throw ConfigError("observation supports overlap");
        if (iv.back().second > iv.front().first + 1.0 + tol)
            throw ConfigError("observation supports overlap");
    }
};

/// K boxes of the given width centred at (i + 1/2) / K.
inline ObservationSet equispaced_observations(int K, double width, double sigma2)
{
    ObservationSet o;
    for (int i = 0; i < K; ++i) {
        o.centers.push_back((i + 0.5) / K);
        o.widths.push_back(width);
        o.values.push_back(0.0);
    }
    o.sigma2 = sigma2;
    return o;
}

/// CSV rows "center,width,value"; '#' lines are comments.
inline ObservationSet read_observation_csv(const std::string& path, double sigma2)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open observation file '" + path + "'");
    ObservationSet o;
    o.sigma2 = sigma2;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            try {
                v.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
            }
        if (v.size() != 3)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected center,width,value");
        o.centers.push_back(v[0]);
        o.widths.push_back(v[1]);
        o.values.push_back(v[2]);
    }
    o.validate();
    return o;
}

struct ObservationMatrix
{
    int J = 0;
    RowSparse single_scale; // G_phit, K x 2^J
    Matrix wavelet;         // G, K x 2^J
    std::vector<double> l2_norms;

    int rows() const { return static_cast<int>(single_scale.rows()); }
    int cols() const { return static_cast<int>(single_scale.cols()); }
};

/// Box endpoints are rounded to the grid 2^{-(J+R)} on which the cell
/// integrals of the dual scaling function are exact.
inline ObservationMatrix build_observation_matrix(const WaveletSystem& sys, const ObservationSet& obs, int J,
                                                  const UnitParametrization* curve = nullptr,
                                                  double weight_exponent = 0.0, int R = 8)
{
    obs.validate();
    if (J < sys.j0())
        throw ConfigError("observation level below the coarsest level");
    const long N = 1L << J;
    const long fine = N << R;
    for (int i = 0; i < obs.size(); ++i)
        if (obs.widths[static_cast<std::size_t>(i)] * double(N) < 1.0 - 1e-12)
            throw ConfigError("observation width below one cell of level " + std::to_string(J) +
                              " is not resolved");
    if (weight_exponent != 0.0 && curve == nullptr)
        throw ConfigError("a curve is needed for observations with a measure weight");
    const auto table = cascade_cell_integrals(sys.dual_low(), R);
    const long tlen = static_cast<long>(table.values.size());
    const int span = table.last - table.first;
    const int K = obs.size();
    std::vector<std::vector<Eigen::Triplet<double>>> trip(static_cast<std::size_t>(K));

#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < K; ++i) {
        const double c = obs.centers[static_cast<std::size_t>(i)];
        const double w = obs.widths[static_cast<std::size_t>(i)];
        const long A = std::lround((c - 0.5 * w) * double(fine));
        const long B = std::lround((c + 0.5 * w) * double(fine));
        const double mass = double(B - A) / double(fine);
        std::vector<double> row(static_cast<std::size_t>(N), 0.0);
        for (long g = A; g < B; ++g) {
            double rho = 1.0;
            if (weight_exponent != 0.0)
                rho = std::pow(curve->speed((double(g) + 0.5) / double(fine)), -weight_exponent);
            const long cell = g >= 0 ? g >> R : -((-g + (1L << R) - 1) >> R);
            for (int q = 0; q < span; ++q) {
                const long k = cell - table.first - q;
                const long ti = g - (k + table.first) * (1L << R);
                if (ti < 0 || ti >= tlen)
                    continue;
                long kk = k % N;
                if (kk < 0)
                    kk += N;
                row[static_cast<std::size_t>(kk)] += rho * table.values[static_cast<std::size_t>(ti)];
            }
        }
        const double scale = std::exp2(-0.5 * J) / mass;
        for (long k = 0; k < N; ++k)
            if (row[static_cast<std::size_t>(k)] != 0.0)
                trip[static_cast<std::size_t>(i)].emplace_back(i, static_cast<int>(k),
                                                              scale * row[static_cast<std::size_t>(k)]);
    }
    ObservationMatrix G;
    G.J = J;
    std::vector<Eigen::Triplet<double>> all;
    for (const auto& t : trip)
        all.insert(all.end(), t.begin(), t.end());
    G.single_scale.resize(K, N);
    G.single_scale.setFromTriplets(all.begin(), all.end());
    G.wavelet.resize(K, N);
    for (int i = 0; i < K; ++i) {
        const Vector r = G.single_scale.row(i).transpose();
        G.wavelet.row(i) = sys.fwt(r).transpose();
        G.l2_norms.push_back(obs.l2_norm(i));
    }
    return G;
}

/// v -> G C G^T v + sigma^2 v in factored form.
inline ApplyFn gram_operator(const WaveletSystem& sys, const ObservationMatrix& G, const SparseSymMatrix& Ceps,
                             double sigma2)
{
    if (Ceps.size() != G.cols())
        throw ConfigError("covariance matrix does not match the observation matrix");
    return [&sys, &G, &Ceps, sigma2](const Vector& v, Vector& out) {
        const Vector u = sys.fwt(G.single_scale.transpose() * v);
        const Vector Cu = Ceps * u;
        out = G.single_scale * sys.ifwt_dual(Cu) + sigma2 * v;
    };
}

struct KrigingResult
{
    Vector mu; // posterior mean in dual wavelet coordinates
    Vector weights; // (G C G^T + sigma^2 I)^{-1} y
    int iterations = 0;
    double relative_residual = 0.0;
};

inline KrigingResult posterior_mean(const WaveletSystem& sys, const SparseSymMatrix& Ceps, const ObservationMatrix& G,
                                    const Vector& y, double sigma2, double cg_tol = 1e-10, int max_iter = -1)
{
    if (!(sigma2 > 0.0))
        throw ConfigError("kriging needs a noise variance sigma2 > 0");
    if (y.size() != G.rows())
        throw ConfigError("observation vector does not match the observation matrix");
    if (max_iter < 0)
        max_iter = 10 * G.rows() + 100;
    const auto res = cg_solve(gram_operator(sys, G, Ceps, sigma2), y, cg_tol, max_iter);
    if (!res.converged)
        throw NumericalError("kriging CG did not converge (residual " + std::to_string(res.relative_residual) + ")");
    KrigingResult k;
    k.weights = res.x;
    k.mu = Ceps * sys.fwt(G.single_scale.transpose() * res.x);
    k.iterations = res.iterations;
    k.relative_residual = res.relative_residual;
    return k;
}

/// Dense G C G^T + sigma^2 I.
inline Matrix gram_matrix(const Matrix& C, const ObservationMatrix& G, double sigma2)
{
    Matrix S = G.wavelet * C * G.wavelet.transpose();
    S = 0.5 * (S + S.transpose());
    S.diagonal().array() += sigma2;
    return S;
}

/// Dense evaluation of C G^T (G C G^T + sigma^2 I)^{-1} y.
inline Vector posterior_mean_dense(const Matrix& C, const ObservationMatrix& G, const Vector& y, double sigma2)
{
    const Matrix S = gram_matrix(C, G, sigma2);
    Eigen::LLT<Matrix> llt(S);
    if (llt.info() != Eigen::Success)
        throw NumericalError("kriging Gram matrix is not positive definite");
    return C * (G.wavelet.transpose() * llt.solve(y));
}

struct GramSpectrum
{
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double condition() const { return lambda_max / lambda_min; }
};

inline GramSpectrum gram_condition(const SparseSymMatrix& Ceps, const ObservationMatrix& G, double sigma2)
{
    if (G.rows() > 2048)
        throw ConfigError("dense Gram spectrum limited to 2048 observations");
    const Matrix S = gram_matrix(Ceps.to_dense(), G, sigma2);
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    return {es.eigenvalues()(0), es.eigenvalues()(S.rows() - 1)};
}

/// Field sum_lambda mu_lambda psit_lambda at parameter points, divided by
/// |gamma'|^e; off-grid points interpolate the dual scaling function
/// linearly on the grid 2^{-(J+R)}.
inline Vector predict_at(const WaveletSystem& sys, const Vector& mu, const std::vector<double>& targets,
                         const UnitParametrization* curve = nullptr, double weight_exponent = 0.0, int R = 10)
{
    const long N = mu.size();
    int J = 0;
    while ((1L << J) < N)
        ++J;
    if ((1L << J) != N)
        throw ConfigError("coefficient vector length must be a power of two");
    if (weight_exponent != 0.0 && curve == nullptr)
        throw ConfigError("a curve is needed for predictions with a measure weight");
    const Vector s = sys.ifwt_dual(mu);
    const auto table = cascade_values(sys.dual_low(), R);
    const double amp = std::exp2(0.5 * J);
    const double step = table.step();
    Vector out(static_cast<Eigen::Index>(targets.size()));
    for (std::size_t n = 0; n < targets.size(); ++n) {
        double t = targets[n] - std::floor(targets[n]);
        const double x = t * double(N);
        double v = 0.0;
        const long kmin = static_cast<long>(std::floor(x)) - table.last;
        const long kmax = static_cast<long>(std::ceil(x)) - table.first;
        for (long k = kmin; k <= kmax; ++k) {
            const double local = x - double(k) - table.first;
            if (local < 0.0 || local > table.last - table.first)
                continue;
            const double pos = local / step;
            const long i = static_cast<long>(std::floor(pos));
            const double f = pos - double(i);
            const double phi = (1.0 - f) * table.at(i) + f * table.at(i + 1);
            long kk = k % N;
            if (kk < 0)
                kk += N;
            v += s[kk] * phi;
        }
        v *= amp;
        if (weight_exponent != 0.0)
            v /= std::pow(curve->speed(t), weight_exponent);
        out[static_cast<Eigen::Index>(n)] = v;
    }
    return out;
}

} // namespace wavegrf

#endif
