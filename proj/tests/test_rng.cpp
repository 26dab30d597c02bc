#include <gtest/gtest.h>

#include <cmath>

#include <wavegrf/rng.hpp>

using namespace wavegrf;

// Known-answer values from numpy.random.Philox (4x64, 10 rounds); numpy
// increments the counter before generating, so counter c here corresponds to
// numpy counter c - 1.
TEST(Rng, PhiloxKnownAnswers)
{
    const auto a = Philox4x64::generate({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(a[0], 0x16554d9eca36314cULL);
    EXPECT_EQ(a[1], 0xdb20fe9d672d0fdcULL);
    EXPECT_EQ(a[2], 0xd7e772cee186176bULL);
    EXPECT_EQ(a[3], 0x7e68b68aec7ba23bULL);

    const auto b = Philox4x64::generate({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL,
                                         0x082efa98ec4e6c89ULL},
                                        {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL});
    EXPECT_EQ(b[0], 0xa528f45403e61d95ULL);
    EXPECT_EQ(b[1], 0x38c72dbd566e9788ULL);
    EXPECT_EQ(b[2], 0xa5a1610e72fd18b5ULL);
    EXPECT_EQ(b[3], 0x57bd43b5e52b7fe6ULL);

    const auto c = Philox4x64::generate({5, 3, 2, 1}, {7, 0x5EEDF00DULL});
    EXPECT_EQ(c[0], 0x42e4c272e22bdee1ULL);
    EXPECT_EQ(c[1], 0x6d3d65cb774aa113ULL);
    EXPECT_EQ(c[2], 0xc7f96bb1fcdecc3cULL);
    EXPECT_EQ(c[3], 0x11e63990bc139e8dULL);
}

TEST(Rng, OpenUnitInterval)
{
    EXPECT_GT(to_open_unit(0), 0.0);
    EXPECT_LT(to_open_unit(~0ULL), 1.0);
}

TEST(Rng, AddressableAndReproducible)
{
    const NormalStream s(42, 3);
    const auto v = s.vector(17, 10);
    for (int i = 0; i < 10; ++i)
        EXPECT_EQ(v[i], s.normal(17, static_cast<std::uint64_t>(i)));
    EXPECT_EQ(NormalStream(42, 3).vector(17, 10), v);
    EXPECT_NE(NormalStream(42, 4).vector(17, 10), v);
    EXPECT_NE(NormalStream(43, 3).vector(17, 10), v);
    // a prefix of a longer draw is the shorter draw
    EXPECT_EQ(s.vector(17, 25).head(10), v);
}

TEST(Rng, NormalMoments)
{
    const NormalStream s(7, 0);
    const int n = 200000;
    double m1 = 0, m2 = 0, m4 = 0;
    for (int i = 0; i < n / 8; ++i) {
        const auto v = s.vector(static_cast<std::uint64_t>(i), 8);
        for (int k = 0; k < 8; ++k) {
            m1 += v[k];
            m2 += v[k] * v[k];
            m4 += std::pow(v[k], 4);
        }
    }
    m1 /= n;
    m2 /= n;
    m4 /= n;
    EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(Rng, UniformRange)
{
    const NormalStream s(1, 0);
    double mean = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = s.uniform(0, static_cast<std::uint64_t>(i));
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        mean += u / 10000;
    }
    EXPECT_NEAR(mean, 0.5, 0.012);
}
