#ifndef WAVEGRF_RNG_HPP
#define WAVEGRF_RNG_HPP

//
// Counter-based random numbers: Philox4x64 with 10 rounds.
// A normal deviate is addressed by (seed, stream, sample, coordinate), so any
// entry of any sample can be regenerated independently of evaluation order.
//

#include <array>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace wavegrf {

class Philox4x64
{
public:
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    static Counter generate(Counter ctr, Key key)
    {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B97F4A7C15ULL;
                key[1] += 0xBB67AE8584CAA73BULL;
            }
            const unsigned __int128 p0 = static_cast<unsigned __int128>(0xD2E7470EE14C6C93ULL) * ctr[0];
            const unsigned __int128 p1 = static_cast<unsigned __int128>(0xCA5A826395121157ULL) * ctr[2];
            const auto hi0 = static_cast<std::uint64_t>(p0 >> 64), lo0 = static_cast<std::uint64_t>(p0);
            const auto hi1 = static_cast<std::uint64_t>(p1 >> 64), lo1 = static_cast<std::uint64_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// Map 64 random bits to a double in the open interval (0, 1).
inline double to_open_unit(std::uint64_t x)
{
    return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;
}

/// Standard normal deviates addressed by (stream, sample, coordinate).
class NormalStream
{
public:
    explicit NormalStream(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// Four consecutive deviates for coordinates 4*block .. 4*block+3.
    std::array<double, 4> block(std::uint64_t sample, std::uint64_t block_index) const
    {
        const auto r = Philox4x64::generate({block_index, sample, stream_, 0}, {seed_, 0x5EEDF00DULL});
        std::array<double, 4> out{};
        for (int pair = 0; pair < 2; ++pair) {
            const double u1 = to_open_unit(r[2 * pair]);
            const double u2 = to_open_unit(r[2 * pair + 1]);
            const double rad = std::sqrt(-2.0 * std::log(u1));
            const double ang = 6.283185307179586476925 * u2;
            out[2 * pair] = rad * std::cos(ang);
            out[2 * pair + 1] = rad * std::sin(ang);
        }
        return out;
    }

    double normal(std::uint64_t sample, std::uint64_t coordinate) const
    {
        return block(sample, coordinate / 4)[coordinate % 4];
    }

    /// Deviates for coordinates 0..n-1 of one sample.
    Eigen::VectorXd vector(std::uint64_t sample, Eigen::Index n) const
    {
        Eigen::VectorXd v(n);
        for (Eigen::Index b = 0; 4 * b < n; ++b) {
            const auto blk = block(sample, static_cast<std::uint64_t>(b));
            for (Eigen::Index i = 0; i < 4 && 4 * b + i < n; ++i)
                v[4 * b + i] = blk[static_cast<std::size_t>(i)];
        }
        return v;
    }

    double uniform(std::uint64_t sample, std::uint64_t coordinate) const
    {
        const auto r = Philox4x64::generate({coordinate / 4, sample, stream_, 1}, {seed_, 0x5EEDF00DULL});
        return to_open_unit(r[coordinate % 4]);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

} // namespace wavegrf

#endif
