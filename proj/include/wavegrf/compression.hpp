#ifndef WAVEGRF_COMPRESSION_HPP
#define WAVEGRF_COMPRESSION_HPP

//
// A-priori tapering of wavelet Galerkin matrices: an entry (lambda, lambda')
// is dropped when the supports are far apart relative to tau_{jj'}, or when
// the supports are close but the singular support of the coarser function
// is far from the support of the finer one relative to tau'_{jj'}.
//

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "error.hpp"
#include "manifold.hpp"
#include "mra.hpp"
#include "spectral.hpp"

namespace wavegrf {

struct CompressionParams
{
    int d = 2;
    int dt = 6;
    double r = -2.0; // order of the operator being compressed
    double a = 2.0;
    double a_prime = 2.0;
    double d_prime = 2.5;

    /// a = a' = 2 and d' = d + (dt - d + r)/4.
    static CompressionParams defaults(int d, int dt, double r)
    {
        CompressionParams c;
        c.d = d;
        c.dt = dt;
        c.r = r;
        c.d_prime = d + (dt - d + r) / 4.0;
        return c;
    }

    /// d < d' < dt + r, the condition for compression with optimal complexity.
    bool optimal() const { return d < d_prime && d_prime < dt + r; }

    /// a^{-2(d + r/2)} + a'^{-(dt + r)}
    double consistency_scale() const
    {
        return std::pow(a, -2.0 * (d + r / 2.0)) + std::pow(a_prime, -(dt + r));
    }
};

inline void validate(const CompressionParams& c)
{
    if (!(c.a > 1.0) || !(c.a_prime > 1.0))
        throw ConfigError("tapering constants a and a' must exceed 1");
    if (!(2.0 * c.dt + c.r > 0.0) || !(c.dt + c.r > 0.0))
        throw ConfigError("dual order too small for the operator order: need dt + r > 0");
    if (!(c.d_prime >= c.d) || !(c.d_prime <= c.dt + c.r))
        throw ConfigError("need d <= d' <= dt + r");
}

struct TaperParams
{
    double tau = 0.0;
    double tau_prime = 0.0;
};

inline TaperParams taper_params(const CompressionParams& c, int j, int jp, int J)
{
    validate(c);
    if (j > J || jp > J || j < 0 || jp < 0)
        throw ConfigError("levels out of range in taper_params");
    const double dt = c.dt, r = c.r, dp = c.d_prime;
    const int jmin = std::min(j, jp), jmax = std::max(j, jp);
    TaperParams t;
    t.tau = c.a * std::max(std::exp2(-jmin), std::exp2((2.0 * J * (dp - r / 2.0) - (j + jp) * (dp + dt)) / (2.0 * dt + r)));
    t.tau_prime = c.a_prime
                  * std::max(std::exp2(-jmax), std::exp2((2.0 * J * (dp - r / 2.0) - (j + jp) * dp - jmax * dt) / (dt + r)));
    return t;
}

/// How dist(S, S') is measured: periodic gap in the parameter domain
/// [0, 1), or chordal distance of the arcs on the curve.
enum class DistanceMode { Parameter, Chordal };

inline std::string to_string(DistanceMode m)
{
    return m == DistanceMode::Parameter ? "parameter" : "chordal";
}

inline DistanceMode parse_distance_mode(const std::string& s)
{
    if (s == "parameter")
        return DistanceMode::Parameter;
    if (s == "chordal")
        return DistanceMode::Chordal;
    throw ConfigError("unknown distance mode '" + s + "' (expected parameter or chordal)");
}

/// Geometry of supports and singular supports.
class SupportGeometry
{
public:
    static constexpr int samples = 8;

    SupportGeometry(const WaveletSystem& sys, const LevelIndexSet& idx, const UnitParametrization& curve,
                    DistanceMode mode = DistanceMode::Parameter)
        : sys_(sys), idx_(idx), curve_(curve), mode_(mode)
    {
        const int p = idx.size();
        arcs_.resize(static_cast<std::size_t>(p));
        pts_.resize(static_cast<std::size_t>(p) * samples);
        for (int i = 0; i < p; ++i) {
            arcs_[static_cast<std::size_t>(i)] = sys.support(idx, i);
            const auto& a = arcs_[static_cast<std::size_t>(i)];
            const double len = std::min(a.length, 1.0);
            for (int m = 0; m < samples; ++m)
                pts_[static_cast<std::size_t>(i) * samples + m] = curve.point(a.start + len * m / (samples - 1.0));
        }
        // lower bound of chord / periodic parameter distance
        constexpr int n = 256;
        double cmin = 1e300;
        for (int i = 0; i < n; ++i)
            for (int k = 1; k <= n / 2; ++k) {
                const double s = double(i) / n, t = double(i + k) / n;
                cmin = std::min(cmin, curve.distance(s, t) / (double(k) / n));
            }
        chord_per_param_ = mode == DistanceMode::Parameter ? 1.0 : 0.9 * cmin;
    }

    DistanceMode mode() const { return mode_; }

    const PeriodicInterval& arc(int i) const { return arcs_[static_cast<std::size_t>(i)]; }
    double chord_per_param() const { return chord_per_param_; }

    /// Gap between two periodic intervals in parameter units (0 if they meet).
    static double param_gap(const PeriodicInterval& A, const PeriodicInterval& B)
    {
        if (A.covers_all() || B.covers_all())
            return 0.0;
        const double ab = frac(B.start - A.start) - A.length;
        const double ba = frac(A.start - B.start) - B.length;
        if (ab <= 1e-14 || ba <= 1e-14)
            return 0.0;
        return std::min(ab, ba);
    }

    static bool contains(const PeriodicInterval& A, double t)
    {
        return A.covers_all() || frac(t - A.start) <= A.length + 1e-14 || frac(t - A.start) >= 1.0 - 1e-14;
    }

    /// dist(S_i, S_j)
    double support_distance(int i, int j) const
    {
        const auto &A = arc(i), &B = arc(j);
        const double g = param_gap(A, B);
        if (g == 0.0 || mode_ == DistanceMode::Parameter)
            return g;
        double best = 1e300;
        for (int m = 0; m < samples; ++m) {
            const auto& P = pts_[static_cast<std::size_t>(i) * samples + m];
            for (int n = 0; n < samples; ++n) {
                const auto& Q = pts_[static_cast<std::size_t>(j) * samples + n];
                best = std::min(best, chord(P, Q));
            }
        }
        return best;
    }

    /// dist(S'_i, S_j): knots of function i against the support of j.
    double singular_distance(int i, int j) const
    {
        const auto& B = arc(j);
        double best = 1e300;
        for (double knot : sys_.singular_support(idx_, i)) {
            if (contains(B, knot))
                return 0.0;
            if (mode_ == DistanceMode::Parameter) {
                best = std::min(best, param_gap({knot, 0.0}, B));
                continue;
            }
            const auto P = curve_.point(knot);
            for (int n = 0; n < samples; ++n)
                best = std::min(best, chord(P, pts_[static_cast<std::size_t>(j) * samples + n]));
        }
        return best;
    }

private:
    static double frac(double x) { return x - std::floor(x); }

    const WaveletSystem& sys_;
    LevelIndexSet idx_;
    UnitParametrization curve_;
    DistanceMode mode_;
    std::vector<PeriodicInterval> arcs_;
    std::vector<CurvePoint> pts_;
    double chord_per_param_ = 1.0;
};

/// Boolean symmetric sparsity pattern over Lambda_J in compressed-row form.
class TaperPattern
{
public:
    TaperPattern(LevelIndexSet idx, CompressionParams params, std::vector<int> row_ptr, std::vector<int> cols)
        : idx_(idx), params_(params), row_ptr_(std::move(row_ptr)), cols_(std::move(cols))
    {
        const int nb = idx_.num_blocks();
        block_nnz_.assign(static_cast<std::size_t>(nb * nb), 0);
        for (int i = 0; i < idx_.size(); ++i) {
            const int bi = idx_.block_of(i);
            for (int q = row_ptr_[static_cast<std::size_t>(i)]; q < row_ptr_[static_cast<std::size_t>(i) + 1]; ++q)
                ++block_nnz_[static_cast<std::size_t>(bi * nb + idx_.block_of(cols_[static_cast<std::size_t>(q)]))];
        }
    }

    static TaperPattern full(const LevelIndexSet& idx, const CompressionParams& params = {})
    {
        const int p = idx.size();
        std::vector<int> rp(static_cast<std::size_t>(p) + 1), c;
        c.reserve(static_cast<std::size_t>(p) * p);
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j)
                c.push_back(j);
            rp[static_cast<std::size_t>(i) + 1] = static_cast<int>(c.size());
        }
        return {idx, params, std::move(rp), std::move(c)};
    }

    static TaperPattern diagonal(const LevelIndexSet& idx, const CompressionParams& params = {})
    {
        const int p = idx.size();
        std::vector<int> rp(static_cast<std::size_t>(p) + 1), c(static_cast<std::size_t>(p));
        for (int i = 0; i < p; ++i) {
            c[static_cast<std::size_t>(i)] = i;
            rp[static_cast<std::size_t>(i) + 1] = i + 1;
        }
        return {idx, params, std::move(rp), std::move(c)};
    }

    const LevelIndexSet& index_set() const { return idx_; }
    const CompressionParams& params() const { return params_; }
    int size() const { return idx_.size(); }
    long nnz() const { return static_cast<long>(cols_.size()); }
    double nnz_fraction() const { return double(nnz()) / (double(size()) * double(size())); }
    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& cols() const { return cols_; }

    bool contains(int i, int j) const
    {
        const auto b = cols_.begin() + row_ptr_[static_cast<std::size_t>(i)];
        const auto e = cols_.begin() + row_ptr_[static_cast<std::size_t>(i) + 1];
        return std::binary_search(b, e, j);
    }

    /// Number of kept entries in level block (b, b').
    long block_nnz(int b, int bp) const
    {
        return block_nnz_[static_cast<std::size_t>(b * idx_.num_blocks() + bp)];
    }

private:
    LevelIndexSet idx_;
    CompressionParams params_;
    std::vector<int> row_ptr_;
    std::vector<int> cols_;
    std::vector<long> block_nnz_;
};

/// Apply the three-branch tapering rule to all pairs of Lambda_J.
inline TaperPattern build_pattern(const WaveletSystem& sys, const UnitParametrization& curve,
                                  const CompressionParams& params, int J,
                                  DistanceMode mode = DistanceMode::Parameter)
{
    validate(params);
    const LevelIndexSet idx = sys.index_set(J);
    const SupportGeometry geo(sys, idx, curve, mode);
    const int p = idx.size(), nb = idx.num_blocks();
    const int j0 = idx.level(0);
    std::vector<std::vector<int>> rows(static_cast<std::size_t>(p));

    auto keep = [&](int i, int j, int li, int lj, const TaperParams& tp) {
        const double dist = geo.support_distance(i, j);
        if (dist > tp.tau && li > j0 && lj > j0)
            return false;
        if (li != lj && dist <= std::exp2(-std::min(li, lj))) {
            const double ds = li < lj ? geo.singular_distance(i, j) : geo.singular_distance(j, i);
            if (ds > tp.tau_prime)
                return false;
        }
        return true;
    };

    for (int b = 0; b < nb; ++b)
        for (int bp = b; bp < nb; ++bp) {
            const int lb = idx.level(b), lbp = idx.level(bp);
            const TaperParams tp = taper_params(params, lb, lbp, idx.finest_level());
            const int nbp = idx.block_size(bp);
            const double hp = std::ldexp(1.0, -idx.scale(bp));
            const double wp = sys.support_width(idx, bp);
            const bool all = lb == j0 || lbp == j0;
            const double gap = tp.tau / geo.chord_per_param();
#pragma omp parallel for schedule(dynamic, 16)
            for (int k = 0; k < idx.block_size(b); ++k) {
                const int i = idx.flatten(b, k);
                std::vector<int> found;
                auto consider = [&](int kp) {
                    const int j = idx.flatten(bp, kp);
                    if (all || keep(i, j, lb, lbp, tp))
                        found.push_back(j);
                };
                const auto& A = geo.arc(i);
                const double lo = A.start - wp - gap, hi = A.start + std::min(A.length, 1.0) + gap;
                const double off = idx.is_scaling_block(bp) ? 1.0 : sys.dt() / 2.0;
                const long k_lo = static_cast<long>(std::floor(lo / hp + off)) - 1;
                const long k_hi = static_cast<long>(std::ceil(hi / hp + off)) + 1;
                if (all || k_hi - k_lo + 1 >= nbp) {
                    for (int kp = 0; kp < nbp; ++kp)
                        consider(kp);
                } else {
                    for (long kk = k_lo; kk <= k_hi; ++kk)
                        consider(static_cast<int>(((kk % nbp) + nbp) % nbp));
                }
#pragma omp critical
                {
                    for (int j : found) {
                        rows[static_cast<std::size_t>(i)].push_back(j);
                        if (b != bp)
                            rows[static_cast<std::size_t>(j)].push_back(i);
                    }
                }
            }
        }

    std::vector<int> rp(static_cast<std::size_t>(p) + 1, 0), cols;
    for (int i = 0; i < p; ++i) {
        auto& r = rows[static_cast<std::size_t>(i)];
        std::sort(r.begin(), r.end());
        r.erase(std::unique(r.begin(), r.end()), r.end());
        cols.insert(cols.end(), r.begin(), r.end());
        rp[static_cast<std::size_t>(i) + 1] = static_cast<int>(cols.size());
    }
    return {idx, params, std::move(rp), std::move(cols)};
}

/// Keep the entries of A on the pattern (bit-exact), zero the rest.
inline SparseSymMatrix apply_pattern(const Matrix& A, const TaperPattern& pattern)
{
    if (A.rows() != pattern.size() || A.cols() != pattern.size())
        throw ConfigError("dimension mismatch between matrix and pattern");
    std::vector<double> vals(pattern.cols().size());
    for (int i = 0; i < pattern.size(); ++i)
        for (int q = pattern.row_ptr()[static_cast<std::size_t>(i)]; q < pattern.row_ptr()[static_cast<std::size_t>(i) + 1]; ++q)
            vals[static_cast<std::size_t>(q)] = A(i, pattern.cols()[static_cast<std::size_t>(q)]);
    return {pattern.size(), pattern.row_ptr(), pattern.cols(), std::move(vals)};
}

/// Compressed assembly on a pattern with any entry callback f(i, j), i <= j.
template <class EntryFn>
SparseSymMatrix assemble_on_pattern(const TaperPattern& pattern, EntryFn&& f)
{
    const auto& rp = pattern.row_ptr();
    const auto& cols = pattern.cols();
    std::vector<double> vals(cols.size(), 0.0);
    for (int i = 0; i < pattern.size(); ++i)
        for (int q = rp[static_cast<std::size_t>(i)]; q < rp[static_cast<std::size_t>(i) + 1]; ++q) {
            const int j = cols[static_cast<std::size_t>(q)];
            if (j >= i)
                vals[static_cast<std::size_t>(q)] = f(i, j);
        }
    // mirror the upper triangle
    for (int i = 0; i < pattern.size(); ++i)
        for (int q = rp[static_cast<std::size_t>(i)]; q < rp[static_cast<std::size_t>(i) + 1]; ++q) {
            const int j = cols[static_cast<std::size_t>(q)];
            if (j < i) {
                const auto b = cols.begin() + rp[static_cast<std::size_t>(j)];
                const auto e = cols.begin() + rp[static_cast<std::size_t>(j) + 1];
                const auto it = std::lower_bound(b, e, i);
                vals[static_cast<std::size_t>(q)] = vals[static_cast<std::size_t>(it - cols.begin())];
            }
        }
    return {pattern.size(), rp, cols, std::move(vals)};
}

/// Drop off-diagonal entries whose diagonally scaled magnitude
/// |2^{ra(|l|+|l'|)} A_{l,l'}| is below delta.
inline SparseSymMatrix aposteriori_threshold(const SparseSymMatrix& A, const LevelIndexSet& idx, double ra,
                                             double delta)
{
    if (!(delta >= 0.0))
        throw ConfigError("threshold must be non-negative");
    if (A.size() != idx.size())
        throw ConfigError("dimension mismatch between matrix and index set");
    const auto lev = idx.levels();
    std::vector<int> rp(static_cast<std::size_t>(A.size()) + 1, 0), c;
    std::vector<double> v;
    for (int i = 0; i < A.size(); ++i) {
        for (int q = A.row_ptr()[static_cast<std::size_t>(i)]; q < A.row_ptr()[static_cast<std::size_t>(i) + 1]; ++q) {
            const int j = A.cols()[static_cast<std::size_t>(q)];
            const double val = A.values()[static_cast<std::size_t>(q)];
            const double scaled = std::abs(val) * std::exp2(ra * (lev[static_cast<std::size_t>(i)] + lev[static_cast<std::size_t>(j)]));
            if (i == j || !(scaled < delta)) {
                c.push_back(j);
                v.push_back(val);
            }
        }
        rp[static_cast<std::size_t>(i) + 1] = static_cast<int>(c.size());
    }
    return {A.size(), std::move(rp), std::move(c), std::move(v)};
}

struct SparsityReport
{
    long nnz = 0;
    double nnz_fraction = 0.0;
    std::vector<long> block_nnz; // row-major num_blocks x num_blocks
    int num_blocks = 0;
};

inline SparsityReport sparsity_report(const TaperPattern& pattern)
{
    SparsityReport r;
    r.nnz = pattern.nnz();
    r.nnz_fraction = pattern.nnz_fraction();
    r.num_blocks = pattern.index_set().num_blocks();
    for (int b = 0; b < r.num_blocks; ++b)
        for (int bp = 0; bp < r.num_blocks; ++bp)
            r.block_nnz.push_back(pattern.block_nnz(b, bp));
    return r;
}

inline SparsityReport sparsity_report(const SparseSymMatrix& A, const LevelIndexSet& idx)
{
    SparsityReport r;
    r.num_blocks = idx.num_blocks();
    r.block_nnz.assign(static_cast<std::size_t>(r.num_blocks * r.num_blocks), 0);
    for (int i = 0; i < A.size(); ++i)
        for (int q = A.row_ptr()[static_cast<std::size_t>(i)]; q < A.row_ptr()[static_cast<std::size_t>(i) + 1]; ++q)
            if (A.values()[static_cast<std::size_t>(q)] != 0.0) {
                ++r.nnz;
                ++r.block_nnz[static_cast<std::size_t>(idx.block_of(i) * r.num_blocks
                                                       + idx.block_of(A.cols()[static_cast<std::size_t>(q)]))];
            }
    r.nnz_fraction = double(r.nnz) / (double(A.size()) * double(A.size()));
    return r;
}

} // namespace wavegrf

#endif
