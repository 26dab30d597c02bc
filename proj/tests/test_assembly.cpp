#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <wavegrf/assembly.hpp>
#include <wavegrf/kernel.hpp>

using namespace wavegrf;

namespace {

const UnitParametrization& curve()
{
    static const UnitParametrization c(normalize_to_unit_diameter(CurveSpec::paper_boundary()));
    return c;
}

double hat(double t, int J, int k)
{
    const double n = std::exp2(J);
    double x = t * n - k;
    x -= n * std::round(x / n);
    return std::exp2(0.5 * J) * std::max(0.0, 1.0 - std::abs(x));
}

// midpoint rule on an m x m grid over the two hat supports
double brute_entry(const KernelSpec& k, int J, int i, int j, double e, int m)
{
    const double h = std::exp2(-J), d = 2.0 * h / m;
    std::vector<CurvePoint> P(m), Q(m);
    std::vector<double> wp(m), wq(m);
    for (int n = 0; n < m; ++n) {
        const double s = (i - 1) * h + (n + 0.5) * d, t = (j - 1) * h + (n + 0.5) * d;
        P[n] = curve().point(s);
        Q[n] = curve().point(t);
        wp[n] = std::pow(curve().speed(s), e) * hat(s, J, i);
        wq[n] = std::pow(curve().speed(t), e) * hat(t, J, j);
    }
    double sum = 0.0;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            sum += k(std::hypot(P[a].x - Q[b].x, P[a].y - Q[b].y)) * wp[a] * wq[b];
    return sum * d * d;
}

} // namespace

TEST(Assembly, GaussLegendreNodes)
{
    const auto [x, w] = gauss_legendre(8);
    EXPECT_NEAR(x.back(), 0.9801449282487681, 1e-15);
    EXPECT_NEAR(w.back(), 0.050614268145188344, 1e-15);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += w[i] * std::pow(x[i], 15);
    EXPECT_NEAR(s, 1.0 / 16.0, 1e-15);
}

TEST(Assembly, SingleScaleEntriesMatchBruteForce)
{
    const int J = 5;
    for (auto nu : {Smoothness::Half, Smoothness::FiveHalves})
        for (double e : {0.0, 1.0}) {
            KernelSpec k;
            k.nu = nu;
            QuadratureRule rule;
            rule.weight_exponent = e;
            const Matrix A = assemble_single_scale(curve(), k, J, rule);
            for (auto [i, j] : {std::pair{3, 3}, std::pair{3, 4}, std::pair{0, 31}, std::pair{2, 17}}) {
                const double ref = brute_entry(k, J, i, j, e, 1200);
                EXPECT_NEAR(A(i, j), ref, 2e-6 * std::abs(ref)) << i << "," << j << " e=" << e;
            }
        }
}

TEST(Assembly, SymmetricPositiveDefinite)
{
    KernelSpec k;
    const Matrix A = assemble_single_scale(curve(), k, 6);
    EXPECT_LE((A - A.transpose()).norm(), 1e-15 * A.norm());
    Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
    EXPECT_GT(es.eigenvalues()(0), 0.0);
}

TEST(Assembly, WaveletCoordinatesRoundTrip)
{
    const auto sys = WaveletSystem::with_default_level(2, 6);
    KernelSpec k;
    const Matrix A = assemble_single_scale(curve(), k, 6);
    const Matrix C = to_wavelet_coordinates(sys, A);
    EXPECT_LE((from_wavelet_coordinates(sys, C) - A).norm(), 1e-12 * A.norm());
}

TEST(Assembly, CompressedAssemblerMatchesDense)
{
    const auto sys = WaveletSystem::with_default_level(2, 6);
    KernelSpec k;
    k.nu = Smoothness::ThreeHalves;
    const int J = 7;
    const Matrix C = to_wavelet_coordinates(sys, assemble_single_scale(curve(), k, J));
    CompressedAssembler<KernelSpec> asmb(curve(), k, sys, J);
    const double scale = C.cwiseAbs().maxCoeff();
    for (int i : {0, 3, 4, 9, 40, 77, 127})
        for (int j : {0, 5, 8, 30, 64, 100, 127})
            EXPECT_NEAR(asmb.entry(i, j), C(i, j), 1e-10 * scale) << i << "," << j;
    EXPECT_GT(asmb.cached_moments(), 0);
}

TEST(Assembly, PiecewiseLinearWaveletsReproduceSynthesis)
{
    const auto sys = WaveletSystem::with_default_level(2, 6);
    const int J = 6;
    const auto idx = sys.index_set(J);
    for (int flat : {0, 3, 4, 20, 63}) {
        const auto f = piecewise_linear(sys, idx, flat);
        // periodize the nodal values, then compare on the coarser grid
        const long nl = 1L << f.level;
        std::vector<double> wrapped(static_cast<std::size_t>(nl), 0.0);
        for (std::size_t n = 0; n < f.nodal.size(); ++n) {
            const long node = ((f.first + static_cast<long>(n)) % nl + nl) % nl;
            wrapped[static_cast<std::size_t>(node)] += f.nodal[n];
        }
        const Vector single = sys.ifwt(Vector::Unit(idx.size(), flat)) * std::exp2(0.5 * J);
        const int up = J - f.level;
        for (long node = 0; node < nl; ++node)
            EXPECT_NEAR(single[node << up], wrapped[static_cast<std::size_t>(node)], 1e-12) << flat;
    }
}

TEST(Assembly, MeasureParsing)
{
    EXPECT_EQ(parse_measure("parameter"), Measure::Parameter);
    EXPECT_EQ(weight_exponent(parse_measure("arclength")), 1.0);
    EXPECT_THROW(parse_measure("geodesic"), ConfigError);
}
