#ifndef WAVEGRF_MLMC_HPP
#define WAVEGRF_MLMC_HPP

//
// Multilevel Monte Carlo estimation of a covariance matrix in wavelet
// coordinates. Block (j, j') of the estimate averages z(j) z(j')^T over
// M_{j,j'} = M_{max(j,j')} independent samples, where z(j) is the level-j
// part of a coefficient sample. Only entries on the taper pattern are kept.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "compression.hpp"
#include "error.hpp"
#include "mra.hpp"
#include "rng.hpp"
#include "spectral.hpp"

namespace wavegrf {

enum class MlmcRegime { AboveDimension, Borderline, BelowDimension }; // 2 alpha > n, = n, < n

inline std::string to_string(MlmcRegime r)
{
    switch (r) {
    case MlmcRegime::AboveDimension: return "2alpha>n";
    case MlmcRegime::Borderline: return "2alpha=n";
    case MlmcRegime::BelowDimension: return "2alpha<n";
    }
    return {};
}

struct SampleSchedule
{
    int j0 = 0;
    int J = 0; // finest level label
    int n = 1;
    double alpha = 0.5;
    double alpha0 = 2.0;
    std::vector<long> M; // M[j - j0]
    MlmcRegime regime = MlmcRegime::Borderline;

    long samples_at(int j) const { return M[static_cast<std::size_t>(j - j0)]; }
    long samples_for_block(int j, int jp) const { return samples_at(std::max(j, jp)); }

    /// sum_j M_j 2^{j n}
    double work() const
    {
        double w = 0.0;
        for (int j = j0; j <= J; ++j)
            w += double(samples_at(j)) * std::exp2(double(j * n));
        return w;
    }
};

/// M_j = ceil(M_finest 2^{(J - j)(n + alpha) 2/3}), j = j0..J.
inline SampleSchedule schedule(int j0, int J, int n, double alpha, double alpha0, long M_finest)
{
    if (J < j0)
        throw ConfigError("finest level below the coarsest level in the MLMC schedule");
    if (n < 1)
        throw ConfigError("dimension must be positive");
    if (!(alpha > 0.0) || !(alpha <= alpha0))
        throw ConfigError("MLMC rates need 0 < alpha <= alpha0");
    if (M_finest < 1)
        throw ConfigError("at least one sample is needed on the finest level");
    SampleSchedule s;
    s.j0 = j0;
    s.J = J;
    s.n = n;
    s.alpha = alpha;
    s.alpha0 = alpha0;
    const double growth = (n + alpha) * 2.0 / 3.0;
    for (int j = j0; j <= J; ++j) {
        const double m = double(M_finest) * std::exp2((J - j) * growth);
        s.M.push_back(static_cast<long>(std::ceil(m - 1e-9 * m)));
    }
    const double two_a = 2.0 * alpha;
    s.regime = std::abs(two_a - n) < 1e-12 ? MlmcRegime::Borderline
                                           : (two_a > n ? MlmcRegime::AboveDimension : MlmcRegime::BelowDimension);
    return s;
}

/// Source of coefficient samples. draw(stream, sample, n) returns the first
/// n coordinates (the levels up to some j, in level-major layout) of sample
/// number `sample` of stream `stream`; distinct streams are independent.
class SampleSource
{
public:
    virtual ~SampleSource() = default;
    virtual int dimension() const = 0;
    virtual Vector draw(std::uint64_t stream, std::uint64_t sample, int n) const = 0;

    /// Samples first .. first+count-1 as the columns of an n x count matrix.
    virtual Matrix draw_batch(std::uint64_t stream, std::uint64_t first, int count, int n) const
    {
        Matrix Z(n, count);
        for (int c = 0; c < count; ++c)
            Z.col(c) = draw(stream, first + static_cast<std::uint64_t>(c), n);
        return Z;
    }
};

/// Exact Gaussian samples z = L xi from a lower Cholesky factor of C; the
/// first n rows of L xi only involve the leading n x n block.
class CholeskySource : public SampleSource
{
public:
    CholeskySource(const Matrix& C, std::uint64_t seed) : L_(dense_cholesky(C)), seed_(seed) {}

    int dimension() const override { return static_cast<int>(L_.rows()); }

    Vector draw(std::uint64_t stream, std::uint64_t sample, int n) const override
    {
        check(n);
        const NormalStream rng(seed_, stream);
        const Vector xi = rng.vector(sample, n);
        return L_.topLeftCorner(n, n).triangularView<Eigen::Lower>() * xi;
    }

    Matrix draw_batch(std::uint64_t stream, std::uint64_t first, int count, int n) const override
    {
        check(n);
        const NormalStream rng(seed_, stream);
        Matrix Xi(n, count);
        for (int c = 0; c < count; ++c)
            Xi.col(c) = rng.vector(first + static_cast<std::uint64_t>(c), n);
        return L_.topLeftCorner(n, n).triangularView<Eigen::Lower>() * Xi;
    }

    void reseed(std::uint64_t seed) { seed_ = seed; }

private:
    void check(int n) const
    {
        if (n > dimension())
            throw ConfigError("requested sample prefix longer than the dimension");
    }

    Matrix L_;
    std::uint64_t seed_;
};

/// Samples supplied externally, one per row, handed out in order.
class TableSource : public SampleSource
{
public:
    explicit TableSource(std::vector<Vector> rows) : rows_(std::move(rows))
    {
        if (rows_.empty())
            throw ConfigError("empty coefficient sample table");
        for (const auto& r : rows_)
            if (r.size() != rows_.front().size())
                throw ConfigError("coefficient sample rows differ in length");
    }

    int dimension() const override { return static_cast<int>(rows_.front().size()); }

    Vector draw(std::uint64_t, std::uint64_t, int n) const override
    {
        const auto pos = next_++;
        if (pos >= rows_.size())
            throw Error("coefficient samples exhausted after " + std::to_string(rows_.size()) + " draws");
        return rows_[pos].head(n);
    }

    void rewind() const { next_ = 0; }
    std::size_t consumed() const { return next_; }

private:
    std::vector<Vector> rows_;
    mutable std::size_t next_ = 0;
};

/// Every draw returns the same vector.
class ConstantSource : public SampleSource
{
public:
    explicit ConstantSource(Vector v) : v_(std::move(v)) {}
    int dimension() const override { return static_cast<int>(v_.size()); }
    Vector draw(std::uint64_t, std::uint64_t, int n) const override { return v_.head(n); }

private:
    Vector v_;
};

struct MlmcEstimate
{
    SparseSymMatrix matrix;
    std::vector<long> block_samples; // row-major over level pairs (j - j0, j' - j0)
    int num_levels = 0;
    std::uint64_t seed = 0;
    double work = 0.0; // sum over blocks of M_{j,j'} times sample length
};

/// Range of flat positions carrying level j.
inline std::pair<int, int> level_range(const LevelIndexSet& idx, int j)
{
    int lo = -1, hi = -1;
    for (int b = 0; b < idx.num_blocks(); ++b)
        if (idx.level(b) == j) {
            if (lo < 0)
                lo = idx.block_offset(b);
            hi = idx.block_offset(b) + idx.block_size(b);
        }
    if (lo < 0)
        throw ConfigError("level not present in the index set");
    return {lo, hi};
}

inline MlmcEstimate estimate(const TaperPattern& pattern, const SampleSchedule& sched, const SampleSource& source,
                             std::uint64_t seed)
{
    const LevelIndexSet& idx = pattern.index_set();
    if (source.dimension() != idx.size())
        throw ConfigError("sample dimension does not match the pattern");
    if (sched.j0 != idx.level(0) || sched.J != idx.finest_level())
        throw ConfigError("MLMC schedule levels do not match the index set");
    const int L = sched.J - sched.j0 + 1;
    MlmcEstimate est;
    est.num_levels = L;
    est.seed = seed;
    est.block_samples.assign(static_cast<std::size_t>(L * L), 0);
    const auto& rp = pattern.row_ptr();
    const auto& cols = pattern.cols();
    std::vector<double> vals(cols.size(), 0.0);

    for (int j = sched.j0; j <= sched.J; ++j)
        for (int jp = j; jp <= sched.J; ++jp) {
            const long M = sched.samples_for_block(j, jp);
            const auto [lo, hi] = level_range(idx, j);
            const auto [lop, hip] = level_range(idx, jp);
            const int prefix = hip;
            const std::uint64_t stream = static_cast<std::uint64_t>((j - sched.j0) * L + (jp - sched.j0)) + 1;
            Matrix S = Matrix::Zero(hi - lo, hip - lop);
            constexpr long chunk = 256;
            for (long m0 = 0; m0 < M; m0 += chunk) {
                const int count = static_cast<int>(std::min(chunk, M - m0));
                const Matrix Z = source.draw_batch(stream, static_cast<std::uint64_t>(m0), count, prefix);
                S.noalias() += Z.middleRows(lo, hi - lo) * Z.middleRows(lop, hip - lop).transpose();
            }
            S /= double(M);
            for (int i = lo; i < hi; ++i)
                for (int q = rp[static_cast<std::size_t>(i)]; q < rp[static_cast<std::size_t>(i) + 1]; ++q) {
                    const int c = cols[static_cast<std::size_t>(q)];
                    if (c >= lop && c < hip)
                        vals[static_cast<std::size_t>(q)] = S(i - lo, c - lop);
                }
            est.block_samples[static_cast<std::size_t>((j - sched.j0) * L + (jp - sched.j0))] = M;
            est.block_samples[static_cast<std::size_t>((jp - sched.j0) * L + (j - sched.j0))] = M;
            est.work += double(M) * prefix;
        }
    // mirror blocks (j', j) from (j, j'), j < j'
    const auto lev = idx.levels();
    for (int i = 0; i < idx.size(); ++i)
        for (int q = rp[static_cast<std::size_t>(i)]; q < rp[static_cast<std::size_t>(i) + 1]; ++q) {
            const int c = cols[static_cast<std::size_t>(q)];
            if (lev[static_cast<std::size_t>(i)] > lev[static_cast<std::size_t>(c)]) {
                const auto b = cols.begin() + rp[static_cast<std::size_t>(c)];
                const auto e = cols.begin() + rp[static_cast<std::size_t>(c) + 1];
                vals[static_cast<std::size_t>(q)] = vals[static_cast<std::size_t>(std::lower_bound(b, e, i) - cols.begin())];
            }
        }
    est.matrix = SparseSymMatrix(idx.size(), rp, cols, std::move(vals));
    return est;
}

struct MlmcErrorReport
{
    double op_norm_error = 0.0;
    double weighted_error = 0.0;
    double relative_error = 0.0;
};

/// ||truth - estimate||_2 and ||D^t (truth - estimate) D^{t'}||_2.
inline MlmcErrorReport error_report(const SparseSymMatrix& est, const Matrix& truth, const LevelIndexSet& idx,
                                    double t, double tp)
{
    if (truth.rows() != est.size() || truth.cols() != est.size() || idx.size() != est.size())
        throw ConfigError("dimension mismatch in MLMC error report");
    const Matrix diff = truth - est.to_dense();
    auto norm2 = [](const Matrix& M) {
        if (M.isApprox(M.transpose(), 1e-14) || M.isZero(0.0)) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
            return es.eigenvalues().cwiseAbs().maxCoeff();
        }
        Eigen::BDCSVD<Matrix> svd(M);
        return svd.singularValues()(0);
    };
    MlmcErrorReport r;
    r.op_norm_error = norm2(diff);
    const auto Dt = diag_scaling(idx, t), Dtp = diag_scaling(idx, tp);
    r.weighted_error = norm2(Dt.entries.asDiagonal() * diff * Dtp.entries.asDiagonal());
    r.relative_error = r.op_norm_error / norm2(truth);
    return r;
}

/// Read coefficient samples: one CSV row per sample, lines starting with '#'
/// are header/comments.
inline std::vector<Vector> read_coefficient_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open coefficient file '" + path + "'");
    std::vector<Vector> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            v.push_back(std::stod(cell));
        rows.emplace_back(Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return rows;
}

} // namespace wavegrf

#endif
