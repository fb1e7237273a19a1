// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "relaylab/analytic.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>

using namespace relaylab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SchemeSpec sic(Protocol p) { return {p, Receiver::Sic, ScMode::Off, 0.0}; }

/// Interference-free protocol oracle. Links fade independently; only the
/// slot-2 pair (relay and UE received together with SIC) is coupled, and its
/// two decoding orders are integrated numerically.
struct NoInterferenceOracle
{
    double th, g_ub, g_ur, g_rb;

    static double integral(double mean_b, double lower, const std::function<double(double)> &tail)
    {
        boost::math::quadrature::exp_sinh<double> q;
        auto f = [&](double b) { return std::exp(-b / mean_b) / mean_b * tail(b); };
        return q.integrate([&](double u) { return f(lower + u); }, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
    }

    /// Signal a decoded in the pair with b: a first, or b first then a.
    double pair_decodes(double ga, double gb) const
    {
        const double a_first = integral(gb, 0.0, [&](double b) { return std::exp(-th * (b + 1.0) / ga); });
        const double b_first = integral(ga, th, [&](double a) { return std::exp(-th * (a + 1.0) / gb); });
        return a_first + b_first;
    }

    double e(double g) const { return std::exp(-th / g); }

    double baseline() const
    {
        return e(g_ur) * (pair_decodes(g_rb, g_ub) + pair_decodes(g_ub, g_rb)) + (1.0 - e(g_ur)) * e(g_ub);
    }

    double selection() const
    {
        const double relayed = e(g_ur) * pair_decodes(g_rb, g_ub);
        const double first = e(g_ub) + relayed - e(g_ub) * relayed;
        const double second = e(g_ur) * pair_decodes(g_ub, g_rb) + (1.0 - e(g_ur)) * e(g_ub);
        return first + second;
    }

    double feedback() const
    {
        const double tx = e(g_ur) * (1.0 - e(g_ub));
        const double first = e(g_ub) + (1.0 - e(g_ub)) * e(g_ur) * pair_decodes(g_rb, g_ub);
        const double second = tx * pair_decodes(g_ub, g_rb) + (1.0 - tx) * e(g_ub);
        return first + second;
    }
};

} // namespace

TEST_CASE("SIC pair probability against frozen references", "[analytic]")
{
    // Reference values: mpmath quadrature over the decoding region at 40
    // digits (tests/oracles/reference_values.py).
    CHECK_THAT(sic_pair_prob(10.0, 3.0, 2.0, 0.5), WithinRel(0.098291234936047778, 1e-13));
    CHECK_THAT(sic_pair_prob(50.0, 50.0, 1.5, 0.0), WithinRel(0.72025961806901249, 1e-13));
    CHECK_THAT(sic_pair_prob(5.0, 200.0, 4.0, 2.0), WithinRel(0.061095956612880415, 1e-13));
    CHECK_THROWS_AS(sic_pair_prob(1.0, 1.0, 0.5, 0.0), ParameterError);
}

TEST_CASE("protocols without interference match the link-level oracle", "[analytic]")
{
    NetworkParams p;
    p.lambda = 0.0;
    for (const UePolar ue : {UePolar{250.0, 0.2}, UePolar{90.0, -0.7}, UePolar{420.0, 0.0}})
    {
        const auto g = derive_link_geometry(p, ue);
        const NoInterferenceOracle o{p.theta, g.gamma_ub, g.gamma_ur, g.gamma_rb};
        PointEvaluator ev(p, g);
        INFO("d_ub=" << ue.d_ub << " theta=" << ue.theta_u);
        CHECK_THAT(ev.evaluate(sic(Protocol::Basic)).throughput, WithinRel(2.0 * o.e(g.gamma_ub), 1e-12));
        CHECK_THAT(ev.evaluate(sic(Protocol::BaselineRelay)).throughput, WithinRel(o.baseline(), 1e-9));
        CHECK_THAT(ev.evaluate(sic(Protocol::SelectionRelay)).throughput, WithinRel(o.selection(), 1e-9));
        CHECK_THAT(ev.evaluate(sic(Protocol::FeedbackRelay)).throughput, WithinRel(o.feedback(), 1e-9));

        // Feedback energy: the relay transmits iff it decodes and the BS did not.
        const double relay_prob = o.e(g.gamma_ur) * (1.0 - o.e(g.gamma_ub));
        const double cost = 2.0 * p.Pt * p.slot_T + p.relay_power_actual() * p.slot_T * relay_prob;
        CHECK_THAT(ev.evaluate(sic(Protocol::FeedbackRelay)).cost, WithinRel(cost, 1e-12));

        // Interference-free SC: both streams at the BS iff h >= theta m / gamma.
        const double beta = 0.8;
        const auto sc = sc_probs(p, g, beta);
        const auto scale = ScScale::of(p.theta, beta);
        CHECK_THAT(sc.e_ub_y, WithinRel(std::exp(-p.theta * scale.m / g.gamma_ub), 1e-12));
        CHECK_THAT(sc.p_first, WithinRel(std::exp(-p.theta * scale.m1 / g.gamma_ub), 1e-12));
    }
}

TEST_CASE("energy per packet", "[analytic]")
{
    CHECK(std::isinf(energy_per_packet(SchemeValue{0.0, 1.0})));
    CHECK_THAT(energy_per_packet(SchemeValue{0.5, 1e-3}), WithinRel(2e-3, 1e-15));
}

TEST_CASE("feedback energy variants", "[analytic]")
{
    NetworkParams p;
    const auto g = derive_link_geometry(p, {250.0, 0.2});
    AnalyticOptions exact;
    exact.feedback_energy = FeedbackEnergy::Exact;
    const auto x = chi_expectations(p, g);
    const auto printed = scheme_value(p, x, Protocol::FeedbackRelay, Receiver::Sic);
    const auto joint = scheme_value(p, x, Protocol::FeedbackRelay, Receiver::Sic, FeedbackEnergy::Exact);
    CHECK(printed.throughput == joint.throughput);
    // Direct and access links share the interference field, so their
    // successes are positively correlated and the joint form spends less.
    CHECK(x.e_ub1_ur > x.e_ub1 * x.e_ur);
    CHECK(joint.cost < printed.cost);
}

TEST_CASE("optimal superposition splits", "[analytic]")
{
    NetworkParams p;
    const auto g = derive_link_geometry(p, {300.0, 0.1});
    const auto b = sc_betas(p, g);
    CHECK_THAT(b.beta_direct, WithinRel((p.theta + 1.0) / (p.theta + 2.0), 1e-15));
    CHECK(b.beta_relay >= b.beta_direct);
    CHECK(b.beta_relay < 1.0);
    // The rewritten relay formula equals the printed ratio away from its
    // removable singularity.
    const double q = std::pow(g.ue.d_ub / g.d_ur, p.alpha);
    CHECK_THAT(b.beta_relay, WithinRel(beta_relay_printed(p.theta, q), 1e-12));
}

TEST_CASE("cell averages match frozen cross-checked values", "[analytic][slow]")
{
    // Frozen from this engine at cell tolerance 1e-5 and checked against the
    // Monte Carlo engine (1e5 trials, within 1.1 SE) and, for Basic, against
    // an mpmath evaluation (0.684440071).
    NetworkParams p;
    const auto avg = average_schemes(p, {sic(Protocol::Basic), sic(Protocol::BaselineRelay),
                                         sic(Protocol::SelectionRelay), sic(Protocol::FeedbackRelay)});
    CHECK_THAT(avg.mean[0].throughput, WithinRel(0.684440071, 2e-6));
    CHECK_THAT(avg.mean[1].throughput, WithinRel(0.585117, 1e-5));
    CHECK_THAT(avg.mean[2].throughput, WithinRel(0.786804, 1e-5));
    CHECK_THAT(avg.mean[3].throughput, WithinRel(0.847576, 1e-5));
    CHECK_THAT(avg.energy_per_packet(0), WithinRel(5.83035e-4, 1e-5));
    CHECK_THAT(avg.energy_per_packet(3), WithinRel(4.86315e-4, 1e-5));

    NetworkParams bad = p;
    bad.lambda = 0.0;
    CHECK_THROWS_AS(average_schemes(bad, {sic(Protocol::Basic)}), ParameterError);
}

TEST_CASE("weighted CDF", "[analytic]")
{
    const std::vector<double> th{0.0, 0.5, 1.0, 2.0};
    const auto c = weighted_cdf({{0.2, 1.0}, {0.8, 1.0}, {1.5, 2.0}}, th);
    REQUIRE(c.size() == 4);
    CHECK(c[0].prob == 0.0);
    CHECK_THAT(c[1].prob, WithinAbs(0.25, 1e-15));
    CHECK_THAT(c[2].prob, WithinAbs(0.5, 1e-15));
    CHECK_THAT(c[3].prob, WithinAbs(1.0, 1e-15));
}
