#ifndef WAVEGRF_MANIFOLD_HPP
#define WAVEGRF_MANIFOLD_HPP

//
// Closed parametrized curves gamma : [0, 2pi) -> R^2 in polar form
//   gamma(phi) = scale * g(phi) * (cos phi, sin phi)
// with g either a constant radius or a finite Fourier series.
//

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"

namespace wavegrf {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct CurveSpec
{
    enum class Kind { FourierBoundary, Circle };

    Kind kind = Kind::Circle;
    // alpha[k + 5] holds alpha_k, k = -5..5; unused for circles
    std::array<double, 11> alpha{};
    double radius = 1.0;
    double scale = 1.0;

    static CurveSpec circle(double radius, double scale = 1.0)
    {
        CurveSpec c;
        c.kind = Kind::Circle;
        c.radius = radius;
        c.scale = scale;
        return c;
    }

    static CurveSpec fourier(const std::array<double, 11>& alpha, double scale = 1.0)
    {
        CurveSpec c;
        c.kind = Kind::FourierBoundary;
        c.alpha = alpha;
        c.scale = scale;
        return c;
    }

    // The "paper-boundary" preset: a smooth, slightly non-convex-looking
    // perturbation of a circle of radius 50.
    static CurveSpec paper_boundary()
    {
        return fourier({2.2, 0.56, 0.14, 1.1, 1.4, 50.0, -0.57, -1.5, -1.2, -1.5, 0.89});
    }

    double alpha_at(int k) const { return alpha[static_cast<std::size_t>(k + 5)]; }
};

struct CurvePoint
{
    double phi = 0.0;
    double x = 0.0;
    double y = 0.0;
};

/// Reduce an angle to [0, 2pi).
inline double wrap_angle(double phi)
{
    double r = std::fmod(phi, two_pi);
    if (r < 0.0)
        r += two_pi;
    if (r >= two_pi)
        r = 0.0;
    return r;
}

/// Unscaled radius function g(phi).
inline double radius_function(const CurveSpec& c, double phi)
{
    if (c.kind == CurveSpec::Kind::Circle)
        return c.radius;
    double g = c.alpha_at(0);
    double s = 0.0;
    for (int k = 1; k <= 5; ++k)
        s += c.alpha_at(-k) * std::sin(k * phi) + c.alpha_at(k) * std::cos(k * phi);
    return g + s / 100.0;
}

/// Analytic derivative g'(phi).
inline double radius_derivative(const CurveSpec& c, double phi)
{
    if (c.kind == CurveSpec::Kind::Circle)
        return 0.0;
    double s = 0.0;
    for (int k = 1; k <= 5; ++k)
        s += k * (c.alpha_at(-k) * std::cos(k * phi) - c.alpha_at(k) * std::sin(k * phi));
    return s / 100.0;
}

inline void validate(const CurveSpec& c)
{
    if (!(c.scale > 0.0) || !std::isfinite(c.scale))
        throw ConfigError("curve scale must be positive and finite");
    if (c.kind == CurveSpec::Kind::Circle) {
        if (!(c.radius > 0.0))
            throw ConfigError("circle radius must be positive");
        return;
    }
    for (int i = 0; i < 4096; ++i)
        if (!(radius_function(c, two_pi * i / 4096.0) > 0.0))
            throw ConfigError("Fourier boundary radius function is not positive");
}

inline CurvePoint evaluate(const CurveSpec& c, double phi)
{
    phi = wrap_angle(phi);
    const double g = c.scale * radius_function(c, phi);
    return {phi, g * std::cos(phi), g * std::sin(phi)};
}

/// Arc-length density |gamma'(phi)|.
inline double measure_weight(const CurveSpec& c, double phi)
{
    const double g = radius_function(c, phi);
    const double dg = radius_derivative(c, phi);
    return c.scale * std::sqrt(g * g + dg * dg);
}

inline double chord(const CurvePoint& a, const CurvePoint& b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Euclidean (chordal) distance between gamma(phi1) and gamma(phi2).
inline double distance(const CurveSpec& c, double phi1, double phi2)
{
    return chord(evaluate(c, phi1), evaluate(c, phi2));
}

namespace detail {

// Golden-section maximisation of f on [lo, hi].
template <class F>
double golden_max(F&& f, double lo, double hi, double tol)
{
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

/// Maximal chordal distance between two curve points: brute force over a
/// 4096-point parameter grid, then alternating golden-section refinement.
inline double diameter(const CurveSpec& c)
{
    constexpr int n = 4096;
    std::vector<CurvePoint> pts(n);
    for (int i = 0; i < n; ++i)
        pts[i] = evaluate(c, two_pi * i / n);
    double best = -1.0;
    int bi = 0, bj = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
            const double d2 = dx * dx + dy * dy;
            if (d2 > best) {
                best = d2;
                bi = i;
                bj = j;
            }
        }
    double p1 = pts[bi].phi, p2 = pts[bj].phi;
    const double h = two_pi / n;
    double prev = -1.0;
    for (int sweep = 0; sweep < 400; ++sweep) {
        p1 = detail::golden_max([&](double t) { return distance(c, t, p2); }, p1 - h, p1 + h, 1e-12);
        p2 = detail::golden_max([&](double t) { return distance(c, p1, t); }, p2 - h, p2 + h, 1e-12);
        const double d = distance(c, p1, p2);
        if (d <= prev * (1.0 + 1e-16))
            break;
        prev = d;
    }
    return std::max(std::sqrt(best), distance(c, p1, p2));
}

/// Rescale so that the diameter equals one.
inline CurveSpec normalize_to_unit_diameter(const CurveSpec& c)
{
    const double diam = diameter(c);
    if (!(diam > 0.0) || !std::isfinite(diam))
        throw ConfigError("cannot normalise a curve of zero diameter");
    CurveSpec out = c;
    out.scale = c.scale / diam;
    return out;
}

/// Curve re-parametrised over the unit interval t in [0,1), phi = 2 pi t.
/// This is the parameter domain of the wavelet bases.
class UnitParametrization
{
public:
    explicit UnitParametrization(CurveSpec curve) : curve_(std::move(curve)) {}

    const CurveSpec& curve() const { return curve_; }
    CurvePoint point(double t) const { return evaluate(curve_, two_pi * t); }
    /// |d gamma / dt|
    double speed(double t) const { return two_pi * measure_weight(curve_, two_pi * t); }
    double distance(double s, double t) const { return chord(point(s), point(t)); }

private:
    CurveSpec curve_;
};

inline std::string to_string(CurveSpec::Kind k)
{
    return k == CurveSpec::Kind::Circle ? "circle" : "fourier";
}

} // namespace wavegrf

#endif
