// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "relaylab/rng.hpp"

#include <cmath>
#include <set>

using relaylab::Xoshiro256pp;

TEST_CASE("streams are reproducible and distinct", "[rng]")
{
    auto a = Xoshiro256pp::stream(7, 3);
    auto b = Xoshiro256pp::stream(7, 3);
    for (int i = 0; i < 100; ++i)
        REQUIRE(a() == b());

    std::set<std::uint64_t> firsts;
    for (std::uint64_t s = 0; s < 1000; ++s)
        firsts.insert(Xoshiro256pp::stream(7, s)());
    for (std::uint64_t m = 0; m < 1000; ++m)
        firsts.insert(Xoshiro256pp::stream(m + 100, 0)());
    REQUIRE(firsts.size() == 2000);
}

TEST_CASE("reference output of the generator is frozen", "[rng]")
{
    // Pins the stream derivation so that seeds stay meaningful across versions.
    auto g = Xoshiro256pp::stream(1, 0);
    const auto first = g();
    auto h = Xoshiro256pp::stream(1, 0);
    REQUIRE(h() == first);
    CHECK(first == 0x3c4bd7c36e296ef2ULL);
}

TEST_CASE("uniform and exponential moments", "[rng]")
{
    auto g = Xoshiro256pp::stream(42, 0);
    const int n = 1'000'000;
    double su = 0.0, se = 0.0, se2 = 0.0;
    bool in_range = true;
    for (int i = 0; i < n; ++i)
    {
        const double u = g.uniform();
        in_range = in_range && u >= 0.0 && u < 1.0;
        su += u;
        const double e = g.exponential();
        se += e;
        se2 += e * e;
    }
    REQUIRE(in_range);
    // 5 standard errors.
    CHECK(std::abs(su / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(se / n - 1.0) < 5.0 / std::sqrt(n));
    CHECK(std::abs(se2 / n - 2.0) < 5.0 * std::sqrt(20.0 / n));
}
