#ifndef WAVEGRF_MRA_HPP
#define WAVEGRF_MRA_HPP

//
// Periodic biorthogonal spline wavelets of Cohen-Daubechies-Feauveau type on
// the unit interval [0,1) with primal order d = 2 (hat functions) and dual
// order dt (number of vanishing moments of the primal wavelets).
//
// Conventions
//   phi_{j,k}(x) = 2^{j/2} phi(2^j x - k), periodised, k = 0..2^j-1
//   masks sum to 2:   phi(x) = sum_k m_k phi(2x - k)
//   wavelets          psi(x) = sum_k g_k phi(2x - k),   g_k  = (-1)^k mt_{1-k}
//                     psit(x) = sum_k gt_k phit(2x - k), gt_k = (-1)^k m_{1-k}
//
// The index set of p = 2^J functions consists of the coarse scaling
// functions Phi_{j0} followed by the complement wavelets Psi_s, s = j0..J-1.
// Block b = 0 is Phi_{j0}, block b >= 1 is Psi_{j0+b-1}. A function carries
// the level of its dilation, |lambda| = j0 for both Phi_{j0} and Psi_{j0}
// (together they span V_{j0+1}), so the finest level is J-1 and
// p = 2^{(J-1)+1}.
//

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace wavegrf {

using Vector = Eigen::VectorXd;

/// Finitely supported filter, coefficient k stored at coeff[k - first].
struct Mask
{
    int first = 0;
    std::vector<double> coeff;

    int last() const { return first + static_cast<int>(coeff.size()) - 1; }
    double operator[](int k) const
    {
        return (k < first || k > last()) ? 0.0 : coeff[static_cast<std::size_t>(k - first)];
    }
};

/// Dyadic-rational filter: coefficient k equals numer[k - first] / 2^log2_denom.
struct ExactMask
{
    int first = 0;
    std::vector<std::int64_t> numer;
    int log2_denom = 0;

    Mask to_mask() const
    {
        Mask m;
        m.first = first;
        m.coeff.reserve(numer.size());
        for (auto n : numer)
            m.coeff.push_back(std::ldexp(static_cast<double>(n), -log2_denom));
        return m;
    }
};

namespace detail {

using IntPoly = std::vector<std::int64_t>; // coefficient i of z^(i + shift), shift tracked by caller

inline IntPoly poly_mul(const IntPoly& a, const IntPoly& b)
{
    IntPoly c(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            c[i + j] += a[i] * b[j];
    return c;
}

inline std::int64_t binomial(int n, int k)
{
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

} // namespace detail

/// Primal low-pass mask of the hat function: (1/2, 1, 1/2) on k = -1, 0, 1.
inline ExactMask primal_lowpass_exact(int d)
{
    if (d != 2)
        throw ConfigError("only primal order d = 2 is supported");
    return {-1, {1, 2, 1}, 1};
}

/// Dual low-pass mask of CDF(d, dt), built from
///   mt(z) = 2 ((1+z)/2)^dt z^{-dt/2} sum_{n<K} C(K-1+n, n) ((2 - z - 1/z)/4)^n,
/// K = (d + dt)/2, evaluated in exact integer arithmetic.
inline ExactMask dual_lowpass_exact(int d, int dt)
{
    if (d != 2)
        throw ConfigError("only primal order d = 2 is supported");
    if (dt < 2 || (d + dt) % 2 != 0)
        throw ConfigError("dual order must be >= 2 with d + dt even");
    const int K = (d + dt) / 2;
    // (1+z)^dt
    detail::IntPoly binom{1};
    for (int i = 0; i < dt; ++i)
        binom = detail::poly_mul(binom, {1, 1});
    // sum_n C(K-1+n, n) (2 - z - 1/z)^n 4^{K-1-n}; polynomial in z with
    // lowest power z^{-(K-1)}
    detail::IntPoly sum(2 * (K - 1) + 1, 0);
    detail::IntPoly power{1}; // (-1 + 2z - z^2)^n, lowest power z^{-n}
    for (int n = 0; n < K; ++n) {
        const std::int64_t w = detail::binomial(K - 1 + n, n) * (std::int64_t{1} << (2 * (K - 1 - n)));
        // power has lowest power z^{-n}; align with z^{-(K-1)}
        for (std::size_t i = 0; i < power.size(); ++i)
            sum[i + static_cast<std::size_t>(K - 1 - n)] += w * power[i];
        power = detail::poly_mul(power, {-1, 2, -1});
    }
    ExactMask m;
    m.numer = detail::poly_mul(binom, sum);
    // lowest power: z^{-dt/2} * z^{-(K-1)}
    m.first = -dt / 2 - (K - 1);
    // 2 / 2^dt / 4^{K-1}
    m.log2_denom = dt - 1 + 2 * (K - 1);
    return m;
}

/// (-1)^k source_{1-k}
inline Mask highpass_from(const Mask& low)
{
    Mask h;
    h.first = 1 - low.last();
    h.coeff.resize(low.coeff.size());
    for (int k = h.first; k <= h.last(); ++k)
        h.coeff[static_cast<std::size_t>(k - h.first)] = ((k % 2 == 0) ? 1.0 : -1.0) * low[1 - k];
    return h;
}

/// Level bookkeeping for Lambda_J, level-major and translate-minor.
class LevelIndexSet
{
public:
    LevelIndexSet(int j0, int J) : j0_(j0), J_(J)
    {
        if (J < j0)
            throw ConfigError("finest level J must be >= coarsest level j0");
        if (J > 24)
            throw ConfigError("finest level too large");
    }

    int j0() const { return j0_; }
    int J() const { return J_; }
    int size() const { return 1 << J_; }
    int num_blocks() const { return J_ - j0_ + 1; }

    /// Number of functions in block b.
    int block_size(int b) const { return b == 0 ? (1 << j0_) : (1 << (j0_ + b - 1)); }
    int block_offset(int b) const { return b == 0 ? 0 : (1 << (j0_ + b - 1)); }
    /// |lambda| of block b, equal to its dilation level.
    int level(int b) const { return b == 0 ? j0_ : j0_ + b - 1; }
    int scale(int b) const { return level(b); }
    /// |lambda| of the finest block.
    int finest_level() const { return level(num_blocks() - 1); }
    bool is_scaling_block(int b) const { return b == 0; }

    int block_of(int flat) const
    {
        if (flat < (1 << j0_))
            return 0;
        int b = 1;
        while (flat >= block_offset(b) + block_size(b))
            ++b;
        return b;
    }

    struct Index
    {
        int block;
        int k;
    };
    Index unflatten(int flat) const
    {
        const int b = block_of(flat);
        return {b, flat - block_offset(b)};
    }
    int flatten(int b, int k) const { return block_offset(b) + k; }

    /// |lambda| for every flat position.
    std::vector<int> levels() const
    {
        std::vector<int> out(static_cast<std::size_t>(size()));
        for (int b = 0; b < num_blocks(); ++b)
            for (int k = 0; k < block_size(b); ++k)
                out[static_cast<std::size_t>(flatten(b, k))] = level(b);
        return out;
    }

private:
    int j0_;
    int J_;
};

/// Periodic parameter interval [start, start + length) on the unit circle.
struct PeriodicInterval
{
    double start = 0.0;
    double length = 0.0;

    bool covers_all() const { return length >= 1.0; }
    double end() const { return start + length; }
};

/// Diagonal matrix diag(2^{s |lambda|}).
struct DiagScaling
{
    double s = 0.0;
    Vector entries;
};

inline DiagScaling diag_scaling(const LevelIndexSet& idx, double s)
{
    DiagScaling D;
    D.s = s;
    D.entries.resize(idx.size());
    for (int b = 0; b < idx.num_blocks(); ++b) {
        const double v = std::exp2(s * idx.level(b));
        D.entries.segment(idx.block_offset(b), idx.block_size(b)).setConstant(v);
    }
    return D;
}

/// Values of a refinable function at the dyadic points x = first + i 2^{-R}.
struct CascadeTable
{
    int first = 0;      // left end of the support
    int last = 0;       // right end of the support
    int R = 0;          // dyadic refinement depth
    std::vector<double> values;

    double step() const { return std::ldexp(1.0, -R); }
    /// value at x = first + i * step()
    double at(long i) const
    {
        return (i < 0 || i >= static_cast<long>(values.size())) ? 0.0 : values[static_cast<std::size_t>(i)];
    }
};

namespace detail {

// Point values at the integers from the eigenvector of the refinement
// operator for eigenvalue one, normalised to sum one.
inline std::vector<double> integer_values(const Mask& m)
{
    const int a = m.first, b = m.last();
    const int n = b - a - 1; // interior integers a+1..b-1
    if (n <= 0)
        return {};
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n);
    for (int i = 0; i < n; ++i) {
        const int x = a + 1 + i;
        for (int jj = 0; jj < n; ++jj) {
            const int y = a + 1 + jj;
            M(i, jj) = m[2 * x - y];
        }
        M(i, i) -= 1.0;
    }
    M.row(n).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs(n) = 1.0;
    Vector v = M.colPivHouseholderQr().solve(rhs);
    return {v.data(), v.data() + n};
}

// Integrals over the unit cells [x, x+1], x = a..b-1, normalised to sum one.
inline std::vector<double> integer_cell_integrals(const Mask& m)
{
    const int a = m.first, b = m.last();
    const int n = b - a;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, n);
    // I_x = sum_k m_k / 2 (I_{2x-k} + I_{2x-k+1})
    for (int i = 0; i < n; ++i) {
        const int x = a + i;
        for (int jj = 0; jj < n; ++jj) {
            const int y = a + jj;
            M(i, jj) = 0.5 * (m[2 * x - y] + m[2 * x - y + 1]);
        }
        M(i, i) -= 1.0;
    }
    M.row(n).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs(n) = 1.0;
    Vector v = M.colPivHouseholderQr().solve(rhs);
    return {v.data(), v.data() + n};
}

} // namespace detail

/// Point values of the refinable function with mask m on the grid 2^{-R},
/// via exact dyadic refinement of the integer values.
inline CascadeTable cascade_values(const Mask& m, int R)
{
    CascadeTable t;
    t.first = m.first;
    t.last = m.last();
    t.R = 0;
    const auto iv = detail::integer_values(m);
    t.values.assign(static_cast<std::size_t>(t.last - t.first + 1), 0.0);
    for (std::size_t i = 0; i < iv.size(); ++i)
        t.values[i + 1] = iv[i];
    for (int r = 1; r <= R; ++r) {
        // phi(x) = sum_k m_k phi(2x - k), x on grid 2^{-r}, 2x - k on grid 2^{-(r-1)}
        const long n = static_cast<long>(t.last - t.first) << r;
        std::vector<double> next(static_cast<std::size_t>(n + 1), 0.0);
        for (long i = 0; i <= n; ++i) {
            // x = first + i 2^{-r}; 2x - k = 2 first - k + i 2^{-(r-1)}
            double v = 0.0;
            for (int k = m.first; k <= m.last(); ++k) {
                // index into previous table: (2x - k - first) * 2^{r-1}
                const long idx = (static_cast<long>(t.first - k) << (r - 1)) + i;
                v += m[k] * t.at(idx);
            }
            next[static_cast<std::size_t>(i)] = v;
        }
        t.values = std::move(next);
        t.R = r;
    }
    return t;
}

/// Integrals of the refinable function over the cells [x, x + 2^{-R}], x on
/// the grid first + i 2^{-R}. Exact up to rounding; needs only L^2 regularity.
inline CascadeTable cascade_cell_integrals(const Mask& m, int R)
{
    CascadeTable t;
    t.first = m.first;
    t.last = m.last();
    t.R = 0;
    t.values = detail::integer_cell_integrals(m);
    for (int r = 1; r <= R; ++r) {
        const long n = static_cast<long>(t.last - t.first) << r;
        std::vector<double> next(static_cast<std::size_t>(n), 0.0);
        for (long i = 0; i < n; ++i) {
            double v = 0.0;
            for (int k = m.first; k <= m.last(); ++k) {
                const long idx = (static_cast<long>(t.first - k) << (r - 1)) + i;
                v += 0.5 * m[k] * t.at(idx);
            }
            next[static_cast<std::size_t>(i)] = v;
        }
        t.values = std::move(next);
        t.R = r;
    }
    return t;
}

struct SupportedPair
{
    int d;
    int dt;
    int j0;
    double gamma_t; // published Sobolev regularity of the dual generator
};

/// Supported CDF pairs with their default coarsest level.
inline const std::vector<SupportedPair>& supported_pairs()
{
    // Sobolev exponents of the dual scaling functions as tabulated for the
    // CDF family (d = 2 column); only gamma_t > ra is relied upon.
    static const std::vector<SupportedPair> pairs{
        {2, 4, 2, 1.08}, {2, 6, 2, 1.68}, {2, 8, 3, 2.16}, {2, 10, 3, 2.55}};
    return pairs;
}

inline int minimal_coarse_level(int dt)
{
    // the coarsest complement wavelets must not wrap around the circle more
    // than once: (dt + 1) 2^{-j0} <= 2
    int j0 = 0;
    while ((dt + 1) > (2 << j0))
        ++j0;
    return j0;
}

class WaveletSystem
{
public:
    WaveletSystem(int d, int dt, int j0) : d_(d), dt_(dt), j0_(j0)
    {
        const auto& pairs = supported_pairs();
        auto it = std::find_if(pairs.begin(), pairs.end(),
                               [&](const SupportedPair& p) { return p.d == d && p.dt == dt; });
        if (it == pairs.end())
            throw ConfigError("unsupported wavelet pair (" + std::to_string(d) + "," + std::to_string(dt)
                              + "); supported: (2,4) (2,6) (2,8) (2,10)");
        if (j0 < minimal_coarse_level(dt))
            throw ConfigError("coarsest level j0 = " + std::to_string(j0)
                              + " too small for the filter support; need j0 >= "
                              + std::to_string(minimal_coarse_level(dt)));
        gamma_t_ = it->gamma_t;
        exact_primal_low_ = primal_lowpass_exact(d);
        exact_dual_low_ = dual_lowpass_exact(d, dt);
        m_ = exact_primal_low_.to_mask();
        mt_ = exact_dual_low_.to_mask();
        g_ = highpass_from(mt_);
        gt_ = highpass_from(m_);
    }

    static WaveletSystem with_default_level(int d, int dt)
    {
        const auto& pairs = supported_pairs();
        for (const auto& p : pairs)
            if (p.d == d && p.dt == dt)
                return WaveletSystem(d, dt, p.j0);
        return WaveletSystem(d, dt, 0); // throws
    }

    int d() const { return d_; }
    int dt() const { return dt_; }
    int j0() const { return j0_; }
    double gamma() const { return d_ - 0.5; }
    double gamma_t() const { return gamma_t_; }

    const Mask& primal_low() const { return m_; }
    const Mask& dual_low() const { return mt_; }
    const Mask& primal_high() const { return g_; }
    const Mask& dual_high() const { return gt_; }
    const ExactMask& primal_low_exact() const { return exact_primal_low_; }
    const ExactMask& dual_low_exact() const { return exact_dual_low_; }

    LevelIndexSet index_set(int J) const { return LevelIndexSet(j0_, J); }

    // Transforms act on vectors of length 2^J laid out as in LevelIndexSet.

    /// Single-scale coefficients of sum c_k phi_{J,k} -> coefficients in the
    /// primal wavelet basis (analysis with the dual filters).
    Vector fwt(const Vector& x) const { return analysis(x, mt_, gt_); }
    /// Inverse of fwt: wavelet coefficients -> single-scale coefficients.
    Vector ifwt(const Vector& x) const { return synthesis(x, m_, g_); }
    /// Same as fwt for the dual basis (filters exchanged). Equals ifwt^T.
    Vector fwt_dual(const Vector& x) const { return analysis(x, m_, g_); }
    /// Inverse of fwt_dual. Equals fwt^T.
    Vector ifwt_dual(const Vector& x) const { return synthesis(x, mt_, gt_); }

    /// Convex hull of supp psi_lambda in the parameter domain.
    PeriodicInterval support(const LevelIndexSet& idx, int flat) const
    {
        const auto [b, k] = idx.unflatten(flat);
        const double h = std::ldexp(1.0, -idx.scale(b));
        double lo, len;
        if (idx.is_scaling_block(b)) {
            lo = (k - 1) * h;
            len = 2.0 * h;
        } else {
            lo = (k - dt_ / 2.0) * h;
            len = (dt_ + 1.0) * h;
        }
        return {wrap_unit(lo), len};
    }

    /// Width of supp psi_lambda for a block (parameter units).
    double support_width(const LevelIndexSet& idx, int b) const
    {
        const double h = std::ldexp(1.0, -idx.scale(b));
        return idx.is_scaling_block(b) ? 2.0 * h : (dt_ + 1.0) * h;
    }

    /// Knots of the piecewise linear psi_lambda (parameter values in [0,1)).
    std::vector<double> singular_support(const LevelIndexSet& idx, int flat) const
    {
        const auto [b, k] = idx.unflatten(flat);
        std::vector<double> out;
        const double h = std::ldexp(1.0, -idx.scale(b));
        if (idx.is_scaling_block(b)) {
            for (int n = -1; n <= 1; ++n)
                out.push_back(wrap_unit((k + n) * h));
        } else {
            for (int n = -dt_; n <= dt_ + 2; ++n)
                out.push_back(wrap_unit((k + 0.5 * n) * h));
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end(),
                              [](double a, double c) { return std::abs(a - c) < 1e-15; }),
                  out.end());
        return out;
    }

    static double wrap_unit(double t)
    {
        double r = t - std::floor(t);
        return r >= 1.0 ? 0.0 : r;
    }

private:
    static constexpr double inv_sqrt2 = 0.70710678118654752440;

    int levels_of(const Vector& x) const
    {
        const auto n = x.size();
        int J = 0;
        while ((Eigen::Index{1} << J) < n)
            ++J;
        if ((Eigen::Index{1} << J) != n)
            throw ConfigError("transform length must be a power of two");
        if (J < j0_)
            throw ConfigError("transform length smaller than the coarsest level");
        return J;
    }

    Vector analysis(const Vector& x, const Mask& low, const Mask& high) const
    {
        const int J = levels_of(x);
        Vector out = x;
        Vector c = x;
        for (int s = J - 1; s >= j0_; --s) {
            const int half = 1 << s;
            const int N = 2 * half;
            Vector lo(half), hi(half);
            for (int k = 0; k < half; ++k) {
                double a = 0.0, bsum = 0.0;
                for (int i = low.first; i <= low.last(); ++i)
                    a += low[i] * c[pmod(2 * k + i, N)];
                for (int i = high.first; i <= high.last(); ++i)
                    bsum += high[i] * c[pmod(2 * k + i, N)];
                lo[k] = inv_sqrt2 * a;
                hi[k] = inv_sqrt2 * bsum;
            }
            out.segment(half, half) = hi;
            c = std::move(lo);
        }
        out.head(1 << j0_) = c;
        return out;
    }

    Vector synthesis(const Vector& x, const Mask& low, const Mask& high) const
    {
        const int J = levels_of(x);
        Vector c = x.head(1 << j0_);
        for (int s = j0_; s < J; ++s) {
            const int half = 1 << s;
            const int N = 2 * half;
            Vector next = Vector::Zero(N);
            for (int k = 0; k < half; ++k) {
                const double a = inv_sqrt2 * c[k];
                const double bval = inv_sqrt2 * x[half + k];
                for (int i = low.first; i <= low.last(); ++i)
                    next[pmod(2 * k + i, N)] += low[i] * a;
                for (int i = high.first; i <= high.last(); ++i)
                    next[pmod(2 * k + i, N)] += high[i] * bval;
            }
            c = std::move(next);
        }
        return c;
    }

    static int pmod(int a, int n)
    {
        const int r = a % n;
        return r < 0 ? r + n : r;
    }

    int d_;
    int dt_;
    int j0_;
    double gamma_t_ = 0.0;
    ExactMask exact_primal_low_;
    ExactMask exact_dual_low_;
    Mask m_, mt_, g_, gt_;
};

/// Samples of a periodised, L^2-normalised dual scaling function
/// phit_{J,k} on the grid i 2^{-(J+R)}, i = 0..2^{J+R}-1, for k = 0.
/// Other translates are cyclic shifts by k 2^R.
inline std::vector<double> periodized_dual_scaling_samples(const WaveletSystem& sys, int J, int R)
{
    const auto table = cascade_values(sys.dual_low(), R);
    const long n = 1L << (J + R);
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    const double amp = std::exp2(0.5 * J);
    for (std::size_t i = 0; i < table.values.size(); ++i) {
        // local coordinate x_loc = first + i 2^{-R}, grid index x_loc * 2^R
        long g = static_cast<long>(table.first) * (1L << R) + static_cast<long>(i);
        g %= n;
        if (g < 0)
            g += n;
        out[static_cast<std::size_t>(g)] += amp * table.values[i];
    }
    return out;
}

/// Evaluate sum_k c_k phit_{J,k} on the grid i 2^{-(J+R)} (periodic).
inline Vector evaluate_dual_expansion(const WaveletSystem& sys, const Vector& single_scale, int R)
{
    const long N = single_scale.size();
    int J = 0;
    while ((1L << J) < N)
        ++J;
    const auto table = cascade_values(sys.dual_low(), R);
    const long n = N << R;
    const double amp = std::exp2(0.5 * J);
    Vector out = Vector::Zero(n);
    const long stride = 1L << R;
    for (long k = 0; k < N; ++k) {
        const double ck = single_scale[k];
        if (ck == 0.0)
            continue;
        const long base = k * stride + static_cast<long>(table.first) * stride;
        for (std::size_t i = 0; i < table.values.size(); ++i) {
            long g = (base + static_cast<long>(i)) % n;
            if (g < 0)
                g += n;
            out[g] += amp * ck * table.values[i];
        }
    }
    return out;
}

} // namespace wavegrf

#endif
