#ifndef WAVEGRF_ELLIPTIC_HPP
#define WAVEGRF_ELLIPTIC_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "error.hpp"

namespace wavegrf {

struct EllipticParams
{
    double m = 0.0;
    double K_complete = std::numbers::pi / 2; // first kind
    double E_complete = std::numbers::pi / 2; // second kind
};

/// Complete elliptic integrals K(m), E(m) by the arithmetic-geometric mean.
inline EllipticParams elliptic_complete(double m)
{
    if (!(m >= 0.0 && m < 1.0))
        throw ConfigError("elliptic parameter m must lie in [0, 1)");
    double a = 1.0, b = std::sqrt(1.0 - m), c = std::sqrt(m);
    double sum = 0.5 * m; // 2^{n-1} c_n^2 for n = 0
    double pow2 = 0.5;
    for (int n = 0; n < 64 && std::abs(c) > 1e-17 * a; ++n) {
        const double an = 0.5 * (a + b);
        c = 0.25 * c * c / an;
        b = std::sqrt(a * b);
        a = an;
        pow2 *= 2.0;
        sum += pow2 * c * c;
    }
    EllipticParams p;
    p.m = m;
    p.K_complete = std::numbers::pi / (2.0 * a);
    p.E_complete = p.K_complete * (1.0 - sum);
    return p;
}

struct JacobiValues
{
    double sn = 0.0;
    double cn = 1.0;
    double dn = 1.0;
};

/// sn, cn, dn by the descending Landen (AGM) scheme.
inline JacobiValues jacobi_sn_cn_dn(double u, double m)
{
    if (!(m >= 0.0 && m < 1.0))
        throw ConfigError("elliptic parameter m must lie in [0, 1)");
    if (m == 0.0)
        return {std::sin(u), std::cos(u), 1.0};
    std::vector<double> a{1.0}, c{std::sqrt(m)};
    double b = std::sqrt(1.0 - m);
    while (std::abs(c.back()) > 1e-16 * a.back() && a.size() < 64) {
        const double an = 0.5 * (a.back() + b);
        c.push_back(0.5 * (a.back() - b));
        b = std::sqrt(a.back() * b);
        a.push_back(an);
    }
    const std::size_t N = a.size() - 1;
    double phi = std::ldexp(a[N] * u, static_cast<int>(N));
    double phi_prev = phi;
    for (std::size_t n = N; n >= 1; --n) {
        phi_prev = phi;
        phi = 0.5 * (phi + std::asin(c[n] / a[n] * std::sin(phi)));
    }
    JacobiValues v;
    v.sn = std::sin(phi);
    v.cn = std::cos(phi);
    v.dn = N >= 1 ? v.cn / std::cos(phi_prev - phi) : 1.0;
    return v;
}

} // namespace wavegrf

#endif
