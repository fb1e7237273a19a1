// SPDX-License-Identifier: Apache-2.0
#pragma once

// Counter-based random streams: every (master seed, stream index) pair
// yields an independent xoshiro256++ generator, so results depend only on
// the seed and the trial index, never on the worker schedule.

#include <cmath>
#include <cstdint>
#include <limits>

namespace relaylab {

inline constexpr std::uint64_t splitmix64(std::uint64_t &state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman and Vigna), usable as a UniformRandomBitGenerator.
class Xoshiro256pp
{
  public:
    using result_type = std::uint64_t;

    explicit Xoshiro256pp(std::uint64_t seed = 0)
    {
        std::uint64_t sm = seed;
        for (auto &w : s_)
            w = splitmix64(sm);
    }

    /// Generator for substream `stream` of `master_seed`.
    static Xoshiro256pp stream(std::uint64_t master_seed, std::uint64_t stream)
    {
        std::uint64_t mix = master_seed;
        const std::uint64_t a = splitmix64(mix);
        std::uint64_t key = a ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL);
        return Xoshiro256pp(splitmix64(key));
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()()
    {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Unit-mean exponential variate.
    double exponential() { return -std::log1p(-uniform()); }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

} // namespace relaylab
