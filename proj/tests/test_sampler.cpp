#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <wavegrf/assembly.hpp>
#include <wavegrf/elliptic.hpp>
#include <wavegrf/kernel.hpp>
#include <wavegrf/sampler.hpp>

using namespace wavegrf;

namespace {

SpectralBounds interval(double lo, double hi)
{
    SpectralBounds b;
    b.lambda_min = lo;
    b.lambda_max = hi;
    return b;
}

double worst_relative_error(const ContourQuadrature& q, double lo, double hi)
{
    double worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double l = lo * std::pow(hi / lo, i / 400.0);
        worst = std::max(worst, std::abs(q.evaluate(l) - std::sqrt(l)) / std::sqrt(l));
    }
    return worst;
}

Matrix random_spd(int n, double cond, unsigned seed)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    Matrix G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            G(i, j) = nd(gen);
    Eigen::HouseholderQR<Matrix> qr(G);
    const Matrix Q = qr.householderQ();
    Vector ev(n);
    for (int i = 0; i < n; ++i)
        ev[i] = std::pow(cond, -double(i) / (n - 1));
    return Q * ev.asDiagonal() * Q.transpose();
}

} // namespace

TEST(Elliptic, CompleteIntegralsMatchReference)
{
    // scipy.special.ellipk / ellipe
    EXPECT_NEAR(elliptic_complete(0.5).K_complete, 1.8540746773013719, 1e-14);
    EXPECT_NEAR(elliptic_complete(0.99).K_complete, 3.6956373629898747, 1e-13);
    EXPECT_NEAR(elliptic_complete(0.5).E_complete, 1.3506438810476755, 1e-14);
    EXPECT_NEAR(elliptic_complete(0.0).K_complete, std::numbers::pi / 2, 1e-15);
    EXPECT_THROW(elliptic_complete(1.0), ConfigError);
}

TEST(Elliptic, JacobiFunctionsMatchReference)
{
    // scipy.special.ellipj
    auto j = jacobi_sn_cn_dn(0.7, 0.8);
    EXPECT_NEAR(j.sn, 0.6123654841172453, 1e-14);
    EXPECT_NEAR(j.cn, 0.7905747996627844, 1e-14);
    EXPECT_NEAR(j.dn, 0.8366640969286787, 1e-14);
    j = jacobi_sn_cn_dn(1.9, 0.995);
    EXPECT_NEAR(j.sn, 0.9572237787601345, 1e-13);
    EXPECT_NEAR(j.cn, 0.28934864329415644, 1e-13);
    EXPECT_NEAR(j.dn, 0.29715993032252536, 1e-13);
    for (double u : {0.1, 0.9, 2.5})
        for (double m : {0.0, 0.3, 0.999999}) {
            const auto v = jacobi_sn_cn_dn(u, m);
            EXPECT_NEAR(v.sn * v.sn + v.cn * v.cn, 1.0, 1e-14);
            EXPECT_NEAR(v.dn * v.dn + m * v.sn * v.sn, 1.0, 1e-14);
        }
}

TEST(Contour, ErrorDecaysGeometrically)
{
    for (double kappa : {10.0, 200.0, 1e4}) {
        double prev = 1.0;
        for (int K : {4, 8, 16, 32}) {
            const double e = worst_relative_error(build_contour(interval(0.5, 0.5 * kappa), K), 0.5, 0.5 * kappa);
            if (prev > 1e-13) {
                EXPECT_LT(e, prev) << kappa << " " << K;
            }
            prev = e;
        }
        EXPECT_LT(prev, 1e-12) << kappa;
    }
}

TEST(Contour, ScalarIntervalAndBadInput)
{
    const auto q = build_contour(interval(4.0, 4.0), 3);
    EXPECT_TRUE(q.scalar);
    EXPECT_DOUBLE_EQ(q.evaluate(4.0), 2.0);
    EXPECT_THROW(build_contour(interval(0.0, 1.0), 3), ConfigError);
    EXPECT_THROW(build_contour(interval(1.0, 2.0), 0), ConfigError);
}

TEST(Contour, ChooseNodesIsMinimal)
{
    const auto b = interval(1e-3, 1.0);
    const int K = choose_nodes(b, 1e-10);
    EXPECT_LE(worst_relative_error(build_contour(b, K), 1e-3, 1.0), 1e-10);
    EXPECT_GT(worst_relative_error(build_contour(b, K - 1), 1e-3, 1.0), 1e-10);
    EXPECT_THROW(choose_nodes(b, 1e-15, 3), NumericalError);
}

TEST(Contour, MatrixSquareRoot)
{
    const int n = 40;
    const Matrix R = random_spd(n, 1e3, 5);
    const auto oracle = dense_oracle(R);
    const auto q = build_contour(oracle.bounds(), 24);
    const Matrix S = contour_matrix(oracle, q);
    EXPECT_LE((S * S - R).norm(), 1e-11 * R.norm());
    EXPECT_LE((S - oracle.sqrt()).norm(), 1e-11 * S.norm());

    const auto Rs = SparseSymMatrix::from_dense(R);
    Vector x = Vector::LinSpaced(n, -1.0, 2.0);
    const Vector y = apply_sqrt(Rs.as_operator(), n, q, x, 1e-14);
    EXPECT_LE((y - S * x).norm(), 1e-10 * y.norm());

    Matrix X(n, 3);
    X << x, x.reverse(), Vector::Ones(n);
    const Matrix Y = apply_sqrt_batch(R, q, X, 1e-14);
    EXPECT_LE((Y - S * X).norm(), 1e-10 * Y.norm());
    const Matrix Ys = apply_sqrt_batch(Rs.to_eigen(), q, X, 1e-14);
    EXPECT_LE((Ys - Y).norm(), 1e-10 * Y.norm());
}

TEST(Sampler, BatchMatchesSingleDrawsAndIsReproducible)
{
    const auto sys = WaveletSystem::with_default_level(2, 6);
    const int J = 5;
    const auto idx = sys.index_set(J);
    const UnitParametrization curve(normalize_to_unit_diameter(CurveSpec::paper_boundary()));
    KernelSpec k;
    const Matrix C = to_wavelet_coordinates(sys, assemble_single_scale(curve, k, J));
    const auto Ceps = SparseSymMatrix::from_dense(C);
    const double ra = operator_order(k, 1).ra;
    const auto D = diag_scaling(idx, ra);
    const auto q = build_contour(dense_oracle(precondition(C, D)).bounds(), 30);
    const GrfSampler sampler(idx, Ceps, ra, q, 11);
    const Matrix Z = sampler.draw_batch(3, 4);
    for (int c = 0; c < 4; ++c)
        EXPECT_LE((sampler.draw(3 + c).coefficients - Z.col(c)).norm(), 1e-9 * Z.col(c).norm());
    EXPECT_EQ(sampler.draw(7).coefficients, sample_grf(idx, Ceps, ra, q, 11, 7).coefficients);
    EXPECT_NE(sampler.draw(7).coefficients, sample_grf(idx, Ceps, ra, q, 12, 7).coefficients);
    const auto meta = sampler.draw(0).meta;
    EXPECT_EQ(meta.J, J);
    EXPECT_EQ(meta.K, 30);
    EXPECT_EQ(meta.seed, 11u);
}

TEST(Sampler, SynthesisReproducesConstants)
{
    const auto sys = WaveletSystem::with_default_level(2, 6);
    const int J = 6;
    const Vector single = Vector::Constant(1L << J, std::exp2(-0.5 * J));
    const Vector z = sys.fwt_dual(single);
    const Vector f = synthesize_parameter_field(sys, z, J + 2);
    ASSERT_EQ(f.size(), 1L << (J + 2));
    EXPECT_LE((f - Vector::Ones(f.size())).cwiseAbs().maxCoeff(), 1e-10);

    const UnitParametrization curve(normalize_to_unit_diameter(CurveSpec::paper_boundary()));
    const Vector g = synthesize_field(sys, z, J + 2, curve, 1.0);
    for (int i : {0, 17, 200})
        EXPECT_NEAR(g[i] * curve.speed(i * std::exp2(-(J + 2))), 1.0, 1e-10);
    EXPECT_THROW(synthesize_parameter_field(sys, z, J - 1), ConfigError);
    EXPECT_THROW(synthesize_parameter_field(sys, Vector::Ones(48), 8), ConfigError);
}
