// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "relaylab/errors.hpp"
#include "relaylab/quad.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace q = relaylab::quad;
using Catch::Matchers::WithinRel;
using std::numbers::pi;

TEST_CASE("finite interval integrals", "[quad]")
{
    const auto r = q::integrate([](double x) { return std::sin(x); }, 0.0, pi);
    CHECK_THAT(r.value, WithinRel(2.0, 1e-12));
    CHECK(r.error < 1e-8);

    // Endpoint singularity x^-1/2 on [0, 1].
    const auto s = q::integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0);
    CHECK_THAT(s.value, WithinRel(2.0, 1e-7));

    // Vector-valued integrand: both components adapt together.
    const auto v = q::integrate([](double x) { return std::array<double, 2>{x, x * x}; }, 0.0, 3.0);
    CHECK_THAT(v.value[0], WithinRel(4.5, 1e-13));
    CHECK_THAT(v.value[1], WithinRel(9.0, 1e-13));
}

TEST_CASE("breakpoints and kinks", "[quad]")
{
    const std::array<double, 3> br{-1.0, 0.3, 2.0};
    const auto r = q::integrate([](double x) { return std::abs(x - 0.3); }, std::span<const double>(br));
    CHECK_THAT(r.value, WithinRel(0.5 * 1.3 * 1.3 + 0.5 * 1.7 * 1.7, 1e-13));
}

TEST_CASE("semi-infinite integrals", "[quad]")
{
    const auto e = q::integrate_semi_infinite([](double x) { return std::exp(-x); }, 0.0);
    CHECK_THAT(e.value, WithinRel(1.0, 1e-10));

    // Heavy algebraic tail: integral of r^-2.35 from 2 is 2^-1.35 / 1.35.
    const auto t = q::integrate_power_tail([](double r) { return std::pow(r, -2.35); }, 2.0, 1.0 / 1.35);
    CHECK_THAT(t.value, WithinRel(std::pow(2.0, -1.35) / 1.35, 1e-10));
}

TEST_CASE("polar annulus", "[quad]")
{
    // Integral of exp(-r^2) over r >= 1 in the plane is pi / e.
    const auto r = q::integrate_polar_annulus([](double rr, double) { return std::exp(-rr * rr); }, 1.0);
    CHECK_THAT(r.value, WithinRel(pi / std::exp(1.0), 1e-8));

    // Angular dependence: integral of cos^2(theta) r^-4 over r >= 1 is pi / 2.
    const auto a = q::integrate_polar_annulus(
        [](double rr, double th) { return std::cos(th) * std::cos(th) * std::pow(rr, -4.0); }, 1.0);
    CHECK_THAT(a.value, WithinRel(pi / 2.0, 1e-8));
}

TEST_CASE("budget and argument errors", "[quad]")
{
    q::Tolerance tiny{1e-15, 1e-300, 1000};
    CHECK_THROWS_AS(q::integrate([](double x) { return std::sin(1.0 / x); }, 1e-9, 1.0, tiny),
                    relaylab::NumericError);
    CHECK_THROWS_AS(q::integrate([](double x) { return x; }, 0.0, 1.0, q::Tolerance{0.0, 1e-12, 1000}),
                    relaylab::ParameterError);
    const std::array<double, 2> bad{1.0, 1.0};
    CHECK_THROWS_AS(q::integrate([](double x) { return x; }, std::span<const double>(bad)),
                    relaylab::ParameterError);
}

TEST_CASE("2F1 against high-precision references", "[quad][hyp2f1]")
{
    // Reference values: mpmath.hyp2f1 at 40 digits (tests/oracles/reference_values.py).
    struct Case
    {
        double a, b, c, z, ref;
    };
    const double d = 2.0 / 3.7;
    const std::array<Case, 6> cases{{
        {1.0, d, 1.0 + d, -0.5, 0.86396288447666584},
        {1.0, d, 1.0 + d, -10.0, 0.37899056501071109},
        {1.0, d, 1.0 + d, -1e6, 0.00097666132654085591},
        {0.5, 1.5, 2.5, -3.0, 0.61982700184952683},
        {1.0, 0.5, 1.5, -100.0, 0.14711276743037346},
        {0.3, 0.7, 2.0, -0.999, 0.92110922429967864},
    }};
    for (const auto &k : cases)
    {
        INFO("a=" << k.a << " b=" << k.b << " c=" << k.c << " z=" << k.z);
        CHECK_THAT(q::hyp2f1(k.a, k.b, k.c, k.z), WithinRel(k.ref, 1e-11));
    }
    CHECK(q::hyp2f1(1.0, 2.0, 3.0, 0.0) == 1.0);
    CHECK_THROWS_AS(q::hyp2f1(1.0, 1.0, 0.0, -1.0), relaylab::ParameterError);
    CHECK_THROWS_AS(q::hyp2f1(1.0, 1.0, 2.0, 0.5), relaylab::ParameterError);
}
