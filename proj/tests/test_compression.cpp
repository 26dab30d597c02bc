#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include <wavegrf/assembly.hpp>
#include <wavegrf/compression.hpp>
#include <wavegrf/kernel.hpp>

using namespace wavegrf;

namespace {

const UnitParametrization& curve()
{
    static const UnitParametrization c(normalize_to_unit_diameter(CurveSpec::paper_boundary()));
    return c;
}

double order_r(Smoothness nu)
{
    KernelSpec k;
    k.nu = nu;
    return operator_order(k, 1).r;
}

// level-J cells touched by psi_i, read off the single-scale coefficients
std::set<long> cells_of(const WaveletSystem& sys, int J, int i)
{
    const long n = 1L << J;
    const Vector c = sys.ifwt(Vector::Unit(n, i));
    std::set<long> out;
    for (long k = 0; k < n; ++k)
        if (std::abs(c[k]) > 1e-14) {
            out.insert((k - 1 + n) % n);
            out.insert(k);
        }
    return out;
}

double cell_gap(const std::set<long>& A, const std::set<long>& B, int J)
{
    const long n = 1L << J;
    long best = n;
    for (long a : A)
        for (long b : B) {
            const long d = std::abs(a - b) % n;
            best = std::min(best, std::min(d, n - d));
        }
    return best == 0 ? 0.0 : (best - 1) * std::exp2(-J);
}

} // namespace

TEST(Compression, DefaultParameters)
{
    const auto c = CompressionParams::defaults(2, 6, -2.0);
    EXPECT_DOUBLE_EQ(c.d_prime, 2.5);
    EXPECT_TRUE(c.optimal());
    EXPECT_DOUBLE_EQ(c.consistency_scale(), std::pow(2.0, -2.0) + std::pow(2.0, -4.0));
    EXPECT_NO_THROW(validate(c));
}

TEST(Compression, RejectsInvalidParameters)
{
    auto c = CompressionParams::defaults(2, 6, -2.0);
    c.a = 1.0;
    EXPECT_THROW(validate(c), ConfigError);
    c = CompressionParams::defaults(2, 6, -2.0);
    c.d_prime = 4.5;
    EXPECT_THROW(validate(c), ConfigError);
    EXPECT_THROW(validate(CompressionParams::defaults(2, 6, -6.0)), ConfigError);
    EXPECT_THROW(parse_distance_mode("manhattan"), ConfigError);
    EXPECT_EQ(parse_distance_mode("chordal"), DistanceMode::Chordal);
}

TEST(Compression, CutoffsAreSymmetricAndBoundedBelow)
{
    const auto c = CompressionParams::defaults(2, 6, -2.0);
    for (int j = 2; j <= 9; ++j)
        for (int jp = 2; jp <= 9; ++jp) {
            const auto t = taper_params(c, j, jp, 10);
            const auto s = taper_params(c, jp, j, 10);
            EXPECT_DOUBLE_EQ(t.tau, s.tau);
            EXPECT_DOUBLE_EQ(t.tau_prime, s.tau_prime);
            EXPECT_GE(t.tau, c.a * std::exp2(-std::min(j, jp)) * (1 - 1e-15));
            EXPECT_GE(t.tau_prime, c.a_prime * std::exp2(-std::max(j, jp)) * (1 - 1e-15));
        }
}

TEST(Compression, SupportDistanceMatchesCellOracle)
{
    const auto sys = WaveletSystem::with_default_level(2, 6);
    const int J = 7;
    const auto idx = sys.index_set(J);
    const SupportGeometry geo(sys, idx, curve());
    std::vector<std::set<long>> cells;
    for (int i = 0; i < idx.size(); ++i)
        cells.push_back(cells_of(sys, J, i));
    for (int i = 0; i < idx.size(); i += 3)
        for (int j = 0; j < idx.size(); j += 5)
            EXPECT_NEAR(geo.support_distance(i, j), cell_gap(cells[i], cells[j], J), 1e-12) << i << "," << j;
}

TEST(Compression, PatternStructure)
{
    for (auto mode : {DistanceMode::Parameter, DistanceMode::Chordal}) {
        const auto sys = WaveletSystem::with_default_level(2, 6);
        const auto params = CompressionParams::defaults(2, 6, order_r(Smoothness::Half));
        const auto P = build_pattern(sys, curve(), params, 8, mode);
        const auto& idx = P.index_set();
        for (int i = 0; i < P.size(); ++i) {
            EXPECT_TRUE(P.contains(i, i));
            for (int q = P.row_ptr()[i]; q < P.row_ptr()[i + 1]; ++q) {
                EXPECT_TRUE(P.contains(P.cols()[q], i));
                if (q > P.row_ptr()[i]) {
                    EXPECT_LT(P.cols()[q - 1], P.cols()[q]);
                }
            }
        }
        const int n0 = idx.block_size(0);
        EXPECT_EQ(P.block_nnz(0, 0), long(n0) * n0);
        long total = 0;
        const auto rep = sparsity_report(P);
        for (long v : rep.block_nnz)
            total += v;
        EXPECT_EQ(total, P.nnz());
        EXPECT_LT(P.nnz_fraction(), 1.0);
    }
}

TEST(Compression, LargeCutoffsKeepEverything)
{
    const auto sys = WaveletSystem::with_default_level(2, 6);
    auto params = CompressionParams::defaults(2, 6, -2.0);
    params.a = params.a_prime = 1e3;
    const auto P = build_pattern(sys, curve(), params, 6);
    EXPECT_EQ(P.nnz(), long(P.size()) * P.size());
}

TEST(Compression, FillMatchesPublishedPercentages)
{
    // kept fraction for piecewise linears with 6 vanishing moments, nu = 1/2
    const auto sys = WaveletSystem::with_default_level(2, 6);
    const auto params = CompressionParams::defaults(2, 6, order_r(Smoothness::Half));
    const std::pair<int, double> published[] = {{8, 0.42}, {10, 0.16}};
    for (auto [J, frac] : published) {
        const auto P = build_pattern(sys, curve(), params, J);
        EXPECT_NEAR(P.nnz_fraction(), frac, 0.3 * frac) << "J=" << J;
    }
}

TEST(Compression, PatternApplicationAndAssemblyAgree)
{
    const auto sys = WaveletSystem::with_default_level(2, 6);
    const int J = 6;
    KernelSpec k;
    const Matrix C = to_wavelet_coordinates(sys, assemble_single_scale(curve(), k, J));
    const auto P = build_pattern(sys, curve(), CompressionParams::defaults(2, 6, -2.0), J);
    const auto A = apply_pattern(C, P);
    const auto B = assemble_on_pattern(P, [&](int i, int j) { return C(i, j); });
    const Matrix Ad = A.to_dense(), Bd = B.to_dense();
    EXPECT_LE((Ad - Bd).norm(), 1e-14 * C.norm());
    for (int i = 0; i < P.size(); ++i)
        for (int j = 0; j < P.size(); ++j)
            EXPECT_EQ(Ad(i, j), P.contains(i, j) ? C(i, j) : 0.0);
}

TEST(Compression, ThresholdKeepsDiagonal)
{
    const auto sys = WaveletSystem::with_default_level(2, 6);
    const int J = 6;
    KernelSpec k;
    const Matrix C = to_wavelet_coordinates(sys, assemble_single_scale(curve(), k, J));
    const auto S = SparseSymMatrix::from_dense(C);
    const auto idx = sys.index_set(J);
    EXPECT_EQ(sparsity_report(aposteriori_threshold(S, idx, 1.0, 0.0), idx).nnz, sparsity_report(S, idx).nnz);
    const auto D = aposteriori_threshold(S, idx, 1.0, 1e300);
    EXPECT_EQ(sparsity_report(D, idx).nnz, idx.size());
    EXPECT_THROW(aposteriori_threshold(S, idx, 1.0, -1.0), ConfigError);
}
