#ifndef WAVEGRF_ASSEMBLY_HPP
#define WAVEGRF_ASSEMBLY_HPP

//
// Galerkin matrices of an integral operator with kernel k(|gamma(s) - gamma(t)|)
// on the unit parameter interval, for piecewise linear trial functions.
//
// All integrals reduce to moments over pairs of dyadic cells
//   M_ab = int_A int_B k(|gamma(s) - gamma(t)|) L_a(s) L_b(t) w(s) w(t) dt ds
// with the linear shape functions L_0 = 1 - u, L_1 = u of each cell and the
// weight w = |gamma'|^e. e = 0 pairs functions in L^2 of the parameter interval,
// e = 1 in L^2 of arc length; both describe the same random field. The kernel is analytic away from s = t, so cells that
// are disjoint or share an endpoint use tensor Gauss rules; a cell paired with
// itself is split along the diagonal into two triangles, each integrated by a
// collapsed (Duffy) Gauss rule.
//

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "manifold.hpp"
#include "mra.hpp"
#include "spectral.hpp"

namespace wavegrf {

enum class Measure { Parameter, ArcLength };

inline double weight_exponent(Measure m) { return m == Measure::Parameter ? 0.0 : 1.0; }

inline std::string to_string(Measure m) { return m == Measure::Parameter ? "parameter" : "arclength"; }

inline Measure parse_measure(const std::string& s)
{
    if (s == "parameter")
        return Measure::Parameter;
    if (s == "arclength")
        return Measure::ArcLength;
    throw ConfigError("unknown measure '" + s + "' (expected parameter or arclength)");
}

struct QuadratureRule
{
    int q = 8;              // Gauss points per cell direction
    int max_cell_level = 6; // cells coarser than this are subdivided
    double weight_exponent = 0.0;
};

/// Gauss-Legendre nodes and weights on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int q)
{
    if (q < 1)
        throw ConfigError("quadrature order must be positive");
    std::vector<double> x(static_cast<std::size_t>(q)), w(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= q; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = q * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
        w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

using Moments = std::array<double, 4>; // [a][b] at index 2a + b

template <class Kernel>
class CellIntegrator
{
public:
    CellIntegrator(const UnitParametrization& curve, Kernel kernel, QuadratureRule rule, int max_level)
        : curve_(curve), kernel_(std::move(kernel)), rule_(rule)
    {
        if (max_level > 20)
            throw ConfigError("quadrature level too deep");
        std::tie(xi_, wi_) = gauss_legendre(rule.q);
        max_level_ = std::max(max_level, rule.max_cell_level);
        cache_.resize(static_cast<std::size_t>(max_level_) + 1);
        for (int l = 0; l <= max_level_; ++l)
            fill_level(l);
    }

    const QuadratureRule& rule() const { return rule_; }
    const Kernel& kernel() const { return kernel_; }

    /// Moments of the cell pair (level la, index ia) x (level lb, index ib);
    /// indices may be unwrapped (any integer).
    Moments moments(int la, long ia, int lb, long ib) const
    {
        Moments m{0.0, 0.0, 0.0, 0.0};
        const Cell A{la, ia}, B{lb, ib};
        rect(A, B, A, B, m);
        return m;
    }

    /// Integrals of L_a w over a single cell.
    std::array<double, 2> single_moments(int l, long i) const
    {
        std::array<double, 2> out{0.0, 0.0};
        const Cell A{l, i};
        single(A, A, out);
        return out;
    }

private:
    struct Cell
    {
        int level;
        long index;
        double h() const { return std::ldexp(1.0, -level); }
        double start() const { return static_cast<double>(index) * h(); }
    };

    struct Node
    {
        double x, y, w;
    };

    void fill_level(int l)
    {
        const long n = 1L << l;
        const double h = std::ldexp(1.0, -l);
        auto& c = cache_[static_cast<std::size_t>(l)];
        c.resize(static_cast<std::size_t>(n * rule_.q));
        for (long i = 0; i < n; ++i)
            for (int g = 0; g < rule_.q; ++g) {
                const double t = (i + xi_[static_cast<std::size_t>(g)]) * h;
                const auto p = curve_.point(t);
                c[static_cast<std::size_t>(i * rule_.q + g)] = {p.x, p.y, wi_[static_cast<std::size_t>(g)] * h * weight(t)};
            }
    }

    double weight(double t) const
    {
        const double s = curve_.speed(t);
        if (rule_.weight_exponent == 0.0)
            return 1.0;
        return rule_.weight_exponent == 1.0 ? s : std::pow(s, rule_.weight_exponent);
    }

    static long wrap(long i, int l)
    {
        const long n = 1L << l;
        long r = i % n;
        return r < 0 ? r + n : r;
    }

    static bool overlap(const Cell& a, const Cell& b)
    {
        if (a.level <= b.level)
            return wrap(b.index >> (b.level - a.level), a.level) == wrap(a.index, a.level);
        return overlap(b, a);
    }

    static std::pair<Cell, Cell> children(const Cell& c)
    {
        return {{c.level + 1, 2 * c.index}, {c.level + 1, 2 * c.index + 1}};
    }

    void single(const Cell& A, const Cell& sa, std::array<double, 2>& out) const
    {
        if (sa.level < rule_.max_cell_level) {
            const auto [c0, c1] = children(sa);
            single(A, c0, out);
            single(A, c1, out);
            return;
        }
        const auto& na = cache_[static_cast<std::size_t>(sa.level)];
        const long ia = wrap(sa.index, sa.level);
        for (int g = 0; g < rule_.q; ++g) {
            const auto& P = na[static_cast<std::size_t>(ia * rule_.q + g)];
            const double u = (sa.start() + xi_[static_cast<std::size_t>(g)] * sa.h() - A.start()) / A.h();
            out[0] += P.w * (1.0 - u);
            out[1] += P.w * u;
        }
    }

    void rect(const Cell& A, const Cell& B, const Cell& sa, const Cell& sb, Moments& m) const
    {
        // subdivide coarse cells so Gauss rules act on short arcs
        if (sa.level < rule_.max_cell_level || sb.level < rule_.max_cell_level) {
            if (sa.level <= sb.level) {
                const auto [c0, c1] = children(sa);
                rect(A, B, c0, sb, m);
                rect(A, B, c1, sb, m);
            } else {
                const auto [c0, c1] = children(sb);
                rect(A, B, sa, c0, m);
                rect(A, B, sa, c1, m);
            }
            return;
        }
        if (overlap(sa, sb)) {
            if (sa.level < sb.level) {
                const auto [c0, c1] = children(sa);
                rect(A, B, c0, sb, m);
                rect(A, B, c1, sb, m);
            } else if (sb.level < sa.level) {
                const auto [c0, c1] = children(sb);
                rect(A, B, sa, c0, m);
                rect(A, B, sa, c1, m);
            } else {
                diagonal(A, B, sa, sb, m);
            }
            return;
        }
        tensor(A, B, sa, sb, m);
    }

    void tensor(const Cell& A, const Cell& B, const Cell& sa, const Cell& sb, Moments& m) const
    {
        const auto& na = cache_[static_cast<std::size_t>(sa.level)];
        const auto& nb = cache_[static_cast<std::size_t>(sb.level)];
        const long ia = wrap(sa.index, sa.level), ib = wrap(sb.index, sb.level);
        const int q = rule_.q;
        double ua[32], ub[32];
        for (int g = 0; g < q; ++g) {
            ua[g] = (sa.start() + xi_[static_cast<std::size_t>(g)] * sa.h() - A.start()) / A.h();
            ub[g] = (sb.start() + xi_[static_cast<std::size_t>(g)] * sb.h() - B.start()) / B.h();
        }
        for (int g = 0; g < q; ++g) {
            const auto& P = na[static_cast<std::size_t>(ia * q + g)];
            double s0 = 0.0, s1 = 0.0;
            for (int e = 0; e < q; ++e) {
                const auto& Q = nb[static_cast<std::size_t>(ib * q + e)];
                const double kv = kernel_(std::hypot(P.x - Q.x, P.y - Q.y)) * Q.w;
                s0 += kv * (1.0 - ub[e]);
                s1 += kv * ub[e];
            }
            const double la0 = P.w * (1.0 - ua[g]), la1 = P.w * ua[g];
            m[0] += la0 * s0;
            m[1] += la0 * s1;
            m[2] += la1 * s0;
            m[3] += la1 * s1;
        }
    }

    // Same physical cell: two triangles x < y and x > y in local coordinates,
    // each mapped from the unit square by (u, v) -> (u v, u).
    void diagonal(const Cell& A, const Cell& B, const Cell& sa, const Cell& sb, Moments& m) const
    {
        const int q = rule_.q;
        const double h = sa.h();
        for (int g = 0; g < q; ++g) {
            const double u = xi_[static_cast<std::size_t>(g)];
            for (int e = 0; e < q; ++e) {
                const double v = xi_[static_cast<std::size_t>(e)];
                const double wq = wi_[static_cast<std::size_t>(g)] * wi_[static_cast<std::size_t>(e)] * u * h * h;
                for (int tri = 0; tri < 2; ++tri) {
                    const double x = tri == 0 ? u * v : u;
                    const double y = tri == 0 ? u : u * v;
                    const double s = sa.start() + x * h, t = sb.start() + y * h;
                    const auto P = curve_.point(s), Q = curve_.point(t);
                    const double kv = kernel_(std::hypot(P.x - Q.x, P.y - Q.y)) * weight(s) * weight(t) * wq;
                    const double a1 = (s - A.start()) / A.h(), b1 = (t - B.start()) / B.h();
                    m[0] += kv * (1.0 - a1) * (1.0 - b1);
                    m[1] += kv * (1.0 - a1) * b1;
                    m[2] += kv * a1 * (1.0 - b1);
                    m[3] += kv * a1 * b1;
                }
            }
        }
    }

    UnitParametrization curve_;
    Kernel kernel_;
    QuadratureRule rule_;
    int max_level_ = 0;
    std::vector<double> xi_, wi_;
    std::vector<std::vector<Node>> cache_;
};

/// Single-scale Galerkin matrix for the p = 2^J periodic hat functions
/// phi_{J,k} = 2^{J/2} phi(2^J x - k).
template <class Kernel>
Matrix assemble_single_scale(const UnitParametrization& curve, const Kernel& kernel, int J,
                             const QuadratureRule& rule = {})
{
    if (J < 1 || J > 14)
        throw ConfigError("single-scale assembly needs 1 <= J <= 14");
    if (rule.q > 32)
        throw ConfigError("quadrature order above 32 is not supported");
    const long p = 1L << J;
    CellIntegrator<Kernel> integ(curve, kernel, rule, J);
    Matrix A = Matrix::Zero(p, p);
    const double scale = std::ldexp(1.0, J); // (2^{J/2})^2
    constexpr long chunk = 64;
    std::vector<Moments> buf;
    for (long a0 = 0; a0 < p; a0 += chunk) {
        const long a1 = std::min(p, a0 + chunk);
        buf.assign(static_cast<std::size_t>((a1 - a0) * p), Moments{});
#pragma omp parallel for schedule(dynamic, 1)
        for (long a = a0; a < a1; ++a)
            for (long b = a; b < p; ++b)
                buf[static_cast<std::size_t>((a - a0) * p + b)] = integ.moments(J, a, J, b);
        for (long a = a0; a < a1; ++a)
            for (long b = a; b < p; ++b) {
                const auto& M = buf[static_cast<std::size_t>((a - a0) * p + b)];
                for (int al = 0; al < 2; ++al)
                    for (int be = 0; be < 2; ++be) {
                        const long r = (a + al) % p, c = (b + be) % p;
                        const double v = scale * M[static_cast<std::size_t>(2 * al + be)];
                        A(r, c) += v;
                        if (a != b)
                            A(c, r) += v;
                    }
            }
    }
    if (!A.allFinite())
        throw NumericalError("non-finite kernel value during assembly");
    Matrix S = 0.5 * (A + A.transpose());
    return S;
}

/// C_psi = T^T A T with T the synthesis map from wavelet to single-scale
/// coordinates; T^T is the dual analysis transform.
inline Matrix to_wavelet_coordinates(const WaveletSystem& sys, const Matrix& A)
{
    if (A.rows() != A.cols())
        throw ConfigError("matrix is not square");
    const Eigen::Index p = A.rows();
    Matrix tmp(p, p);
    for (Eigen::Index j = 0; j < p; ++j)
        tmp.col(j) = sys.fwt_dual(A.col(j));
    Matrix out(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        out.row(i) = sys.fwt_dual(tmp.row(i).transpose()).transpose();
    return 0.5 * (out + out.transpose());
}

/// Inverse congruence of to_wavelet_coordinates.
inline Matrix from_wavelet_coordinates(const WaveletSystem& sys, const Matrix& C)
{
    if (C.rows() != C.cols())
        throw ConfigError("matrix is not square");
    const Eigen::Index p = C.rows();
    Matrix tmp(p, p);
    for (Eigen::Index j = 0; j < p; ++j)
        tmp.col(j) = sys.ifwt_dual(C.col(j));
    Matrix out(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        out.row(i) = sys.ifwt_dual(tmp.row(i).transpose()).transpose();
    return out;
}

/// A basis function written as a continuous piecewise linear function on
/// the cells of one dyadic level: nodal values at nodes first..first+n-1.
struct PiecewiseLinear
{
    int level = 0;
    long first = 0;
    std::vector<double> nodal;
};

/// psi_lambda on the grid of level scale+1 (wavelets) or j0 (scaling functions).
inline PiecewiseLinear piecewise_linear(const WaveletSystem& sys, const LevelIndexSet& idx, int flat)
{
    const auto [b, k] = idx.unflatten(flat);
    PiecewiseLinear f;
    if (idx.is_scaling_block(b)) {
        f.level = idx.scale(b);
        f.first = k;
        f.nodal = {std::exp2(0.5 * f.level)};
        return f;
    }
    const int s = idx.scale(b);
    f.level = s + 1;
    const auto& g = sys.primal_high();
    f.first = 2L * k + g.first;
    const double amp = std::exp2(0.5 * (s + 1)) / std::sqrt(2.0);
    for (int n = g.first; n <= g.last(); ++n)
        f.nodal.push_back(amp * g[n]);
    return f;
}

/// Entries of C_psi restricted to a sparsity structure, computed directly
/// from the wavelets' piecewise linear representations (cost per entry
/// independent of J).
template <class Kernel>
class CompressedAssembler
{
public:
    CompressedAssembler(const UnitParametrization& curve, const Kernel& kernel, const WaveletSystem& sys, int J,
                        const QuadratureRule& rule = {})
        : sys_(sys), idx_(sys.index_set(J)), integ_(curve, kernel, rule, J + 1)
    {
        funcs_.reserve(static_cast<std::size_t>(idx_.size()));
        for (int i = 0; i < idx_.size(); ++i)
            funcs_.push_back(piecewise_linear(sys, idx_, i));
    }

    const LevelIndexSet& index_set() const { return idx_; }

    double entry(int i, int j)
    {
        const auto& f = funcs_[static_cast<std::size_t>(i)];
        const auto& g = funcs_[static_cast<std::size_t>(j)];
        double sum = 0.0;
        const long nf = static_cast<long>(f.nodal.size()), ng = static_cast<long>(g.nodal.size());
        // cells first-1 .. first+n-1 carry the nonzero pieces
        for (long ca = f.first - 1; ca < f.first + nf; ++ca) {
            const double va0 = value(f, ca), va1 = value(f, ca + 1);
            if (va0 == 0.0 && va1 == 0.0)
                continue;
            for (long cb = g.first - 1; cb < g.first + ng; ++cb) {
                const double vb0 = value(g, cb), vb1 = value(g, cb + 1);
                if (vb0 == 0.0 && vb1 == 0.0)
                    continue;
                const Moments M = moments(f.level, ca, g.level, cb);
                sum += va0 * (M[0] * vb0 + M[1] * vb1) + va1 * (M[2] * vb0 + M[3] * vb1);
            }
        }
        if (!std::isfinite(sum))
            throw NumericalError("non-finite kernel value during compressed assembly");
        return sum;
    }

    long cached_moments() const { return static_cast<long>(memo_.size()); }

private:
    static double value(const PiecewiseLinear& f, long node)
    {
        const long i = node - f.first;
        return (i < 0 || i >= static_cast<long>(f.nodal.size())) ? 0.0 : f.nodal[static_cast<std::size_t>(i)];
    }

    Moments moments(int la, long ca, int lb, long cb)
    {
        const long wa = ca & ((1L << la) - 1), wb = cb & ((1L << lb) - 1);
        const bool swap = (la > lb) || (la == lb && wa > wb);
        const std::uint64_t key = swap ? pack(lb, wb, la, wa) : pack(la, wa, lb, wb);
        auto it = memo_.find(key);
        Moments M;
        if (it != memo_.end()) {
            M = it->second;
        } else {
            M = swap ? integ_.moments(lb, wb, la, wa) : integ_.moments(la, wa, lb, wb);
            memo_.emplace(key, M);
        }
        if (swap)
            std::swap(M[1], M[2]);
        return M;
    }

    static std::uint64_t pack(int la, long a, int lb, long b)
    {
        return (static_cast<std::uint64_t>(la) << 58) | (static_cast<std::uint64_t>(a) << 32)
               | (static_cast<std::uint64_t>(lb) << 26) | static_cast<std::uint64_t>(b);
    }

    const WaveletSystem& sys_;
    LevelIndexSet idx_;
    CellIntegrator<Kernel> integ_;
    std::vector<PiecewiseLinear> funcs_;
    std::unordered_map<std::uint64_t, Moments> memo_;
};

/// Row integrals of the hat functions: int phi_{J,k} w dt.
template <class Kernel>
Vector hat_integrals(const CellIntegrator<Kernel>& integ, int J)
{
    const long p = 1L << J;
    Vector out = Vector::Zero(p);
    const double amp = std::exp2(0.5 * J);
    for (long c = 0; c < p; ++c) {
        const auto m = integ.single_moments(J, c);
        out[c] += amp * m[0];
        out[(c + 1) % p] += amp * m[1];
    }
    return out;
}

} // namespace wavegrf

#endif
