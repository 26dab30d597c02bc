#ifndef WAVEGRF_KERNEL_HPP
#define WAVEGRF_KERNEL_HPP

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"

namespace wavegrf {

enum class Smoothness { Half, ThreeHalves, FiveHalves };

inline double nu_value(Smoothness s)
{
    switch (s) {
    case Smoothness::Half: return 0.5;
    case Smoothness::ThreeHalves: return 1.5;
    case Smoothness::FiveHalves: return 2.5;
    }
    return 0.0;
}

/// Matern kernel of half-integer smoothness nu as a function of distance.
struct KernelSpec
{
    Smoothness nu = Smoothness::Half;
    double ell = 1.0;
    double sigma2 = 1.0;

    double operator()(double z) const
    {
        const double x = z / ell;
        switch (nu) {
        case Smoothness::Half: return sigma2 * std::exp(-x);
        case Smoothness::ThreeHalves: {
            const double s = std::sqrt(3.0) * x;
            return sigma2 * (1.0 + s) * std::exp(-s);
        }
        case Smoothness::FiveHalves: {
            const double s = std::sqrt(5.0) * x;
            return sigma2 * (1.0 + s + 5.0 / 3.0 * x * x) * std::exp(-s);
        }
        }
        return 0.0;
    }
};

inline void validate(const KernelSpec& k)
{
    if (!(k.ell > 0.0) || !std::isfinite(k.ell))
        throw ConfigError("kernel correlation length must be positive");
    if (!(k.sigma2 > 0.0) || !std::isfinite(k.sigma2))
        throw ConfigError("kernel variance must be positive");
}

inline double eval_kernel(const KernelSpec& k, double z)
{
    return k(z);
}

inline std::string kernel_id(Smoothness s)
{
    switch (s) {
    case Smoothness::Half: return "matern12";
    case Smoothness::ThreeHalves: return "matern32";
    case Smoothness::FiveHalves: return "matern52";
    }
    return {};
}

inline Smoothness parse_kernel_id(const std::string& id)
{
    if (id == "matern12")
        return Smoothness::Half;
    if (id == "matern32")
        return Smoothness::ThreeHalves;
    if (id == "matern52")
        return Smoothness::FiveHalves;
    throw ConfigError("unknown kernel identifier '" + id + "'");
}

/// Order r of the covariance operator and order ra = -r/2 of its coloring.
struct OperatorOrder
{
    double r = 0.0;
    double ra = 0.0;
};

inline OperatorOrder operator_order(const KernelSpec& k, int n)
{
    if (n != 1)
        throw ConfigError("only curves (n = 1) are supported");
    const double r = -(2.0 * nu_value(k.nu) + n);
    return {r, -r / 2.0};
}

/// Whittle-Matern covariance (-Laplace + kappa^2)^(-2 beta) on the circle of
/// circumference 2 pi, given through its exact Fourier eigenvalues.
struct CircleSpectrum
{
    double kappa = 1.0;
    double beta = 1.0;
    int modes = 0;

    double eigenvalue(int m) const
    {
        return std::pow(kappa * kappa + double(m) * double(m), -2.0 * beta);
    }

    /// Upper bound of sum_{|m|>M} lambda_m via the integral test.
    double tail_bound(int M) const
    {
        const double e = 4.0 * beta;
        return 2.0 * std::pow(double(M), 1.0 - e) / (e - 1.0);
    }

    int required_modes(double tol) const
    {
        int M = 1;
        while (tail_bound(M) >= tol) {
            if (M >= (1 << 29))
                throw ConfigError("circle spectrum tail decays too slowly for tolerance " + std::to_string(tol));
            M *= 2;
        }
        int lo = M / 2, hi = M;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            (tail_bound(mid) < tol ? hi : lo) = mid;
        }
        return hi;
    }
};

inline double circle_wm_kernel(const CircleSpectrum& s, double theta, double tail_tol = 1e-12)
{
    if (!(s.beta > 0.25))
        throw ConfigError("circle spectrum requires beta > 1/4 for a summable tail");
    if (s.modes < 1 || s.tail_bound(s.modes) >= tail_tol)
        throw ConfigError("circle spectrum truncated too early: need at least M = "
                          + std::to_string(s.required_modes(tail_tol)) + " modes");
    double sum = s.eigenvalue(0);
    for (int m = 1; m <= s.modes; ++m)
        sum += 2.0 * s.eigenvalue(m) * std::cos(m * theta);
    return sum / (2.0 * std::numbers::pi);
}

} // namespace wavegrf

#endif
