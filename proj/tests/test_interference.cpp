// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "relaylab/interference.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>

using namespace relaylab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

/// Direct radial integral of the PPP Laplace exponent (oracle).
double exponent_oracle(const NetworkParams &p, double s, double x)
{
    const double c = s * p.Pt * p.A;
    auto f = [&](double r) { return 2.0 * pi * p.lambda * c * r / (std::pow(r, p.alpha) + c); };
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate(f, x, std::numeric_limits<double>::infinity(), 1e-14);
}

/// Nested Boost quadrature of the two-point transform (oracle): Gauss-Kronrod
/// in angle, tanh-sinh style in radius, evaluated independently of the
/// library's polar integrator.
double joint2_oracle(const NetworkParams &p, double s, double t, double d, double x)
{
    const double ptA = p.Pt * p.A;
    auto angular = [&](double th) {
        auto radial = [&](double r) {
            const double rho2 = r * r + d * d - 2.0 * r * d * std::cos(th);
            const double a = s * ptA * std::pow(rho2, -0.5 * p.alpha);
            const double b = t * ptA * std::pow(r, -p.alpha);
            return (1.0 - 1.0 / ((1.0 + a) * (1.0 + b))) * r;
        };
        boost::math::quadrature::exp_sinh<double> q;
        return q.integrate(radial, x, std::numeric_limits<double>::infinity(), 1e-12);
    };
    const double half = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(angular, 0.0, pi, 12, 1e-11);
    return std::exp(-2.0 * p.lambda * half);
}

} // namespace

TEST_CASE("single-point transform against frozen references", "[interference]")
{
    // Reference values: mpmath at 40 digits (tests/oracles/reference_values.py),
    // for s = theta x^alpha / (Pt A) with theta = 3 dB.
    NetworkParams p;
    const std::array<std::pair<double, double>, 3> refs{{
        {50.0, 0.9430405419137096},
        {200.0, 0.39127835120893938},
        {800.0, 3.0183744514714932e-7},
    }};
    for (const auto &[x, ref] : refs)
    {
        const double s = p.theta * std::pow(x, p.alpha) / (p.Pt * p.A);
        CHECK_THAT(laplace_single(p, s, x), WithinRel(ref, 1e-10));
    }
}

TEST_CASE("closed-form exponent agrees with radial quadrature", "[interference]")
{
    NetworkParams p;
    for (double x : {1.0, 37.0, 400.0, 2500.0})
        for (double k : {1e-4, 0.3, 1.0, 30.0, 1e4})
        {
            const double s = k * std::pow(x, p.alpha) / (p.Pt * p.A);
            INFO("x=" << x << " k=" << k);
            CHECK_THAT(laplace_single_exponent(p, s, x), WithinRel(exponent_oracle(p, s, x), 1e-9));
            CHECK_THAT(laplace_single_exponent_quadrature(p, s, x, laplace_tolerance()),
                       WithinRel(exponent_oracle(p, s, x), 1e-7));
        }
    CHECK(laplace_single_exponent(p, 0.0, 100.0) == 0.0);
}

TEST_CASE("joint transform against nested quadrature", "[interference]")
{
    NetworkParams p;
    const double ptA = p.Pt * p.A;
    for (double d : {80.0, 150.0, 400.0})
        for (double x : {60.0, 250.0})
        {
            const double s = 2.0 * std::pow(std::abs(x - d) + 50.0, p.alpha) / ptA;
            const double t = 2.0 * std::pow(x, p.alpha) / ptA;
            INFO("d=" << d << " x=" << x);
            CHECK_THAT(laplace_joint2(p, s, t, d, x), WithinRel(joint2_oracle(p, s, t, d, x), 1e-6));
        }
}

TEST_CASE("transform reductions and limits", "[interference]")
{
    NetworkParams p;
    const double x = 180.0;
    const double s = std::pow(x, p.alpha) / (p.Pt * p.A);
    CHECK_THAT(laplace_joint2(p, 0.0, s, 150.0, x), WithinRel(laplace_single(p, s, x), 1e-9));
    CHECK_THAT(laplace_joint3(p, 0.0, s, 0.0, 150.0, x), WithinRel(laplace_single(p, s, x), 1e-9));
    CHECK_THAT(laplace_joint2_antenna(p, s, s, 150.0, x, AntennaPattern{}),
               WithinRel(laplace_joint2(p, s, s, 150.0, x), 1e-12));

    // A directional relay antenna hears less interference from behind, so
    // the transform grows relative to the pattern without normalization.
    const double omni = laplace_joint2(p, s, 0.0, 150.0, x);
    const double dir = laplace_joint2_antenna(p, s, 0.0, 150.0, x, AntennaPattern{4.0, false});
    CHECK(dir > omni);

    NetworkParams empty = p;
    empty.lambda = 0.0;
    CHECK(laplace_single(empty, s, x) == 1.0);
    CHECK(laplace_joint3(empty, s, s, s, 150.0, x) == 1.0);
    CHECK_THROWS_AS(laplace_joint2(p, -1.0, s, 150.0, x), ParameterError);
}
