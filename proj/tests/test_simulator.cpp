// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "relaylab/analytic.hpp"
#include "relaylab/simulator.hpp"

#include <cmath>
#include <random>
#include <utility>
#include <vector>

using namespace relaylab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SchemeSpec sic(Protocol p) { return {p, Receiver::Sic, ScMode::Off, 0.0}; }

std::vector<SchemeSpec> four()
{
    return {sic(Protocol::Basic), sic(Protocol::BaselineRelay), sic(Protocol::SelectionRelay),
            sic(Protocol::FeedbackRelay)};
}

McOptions opts(std::size_t n, std::uint64_t seed, unsigned threads = 1)
{
    McOptions o;
    o.n_trials = n;
    o.seed = seed;
    o.threads = threads;
    return o;
}

} // namespace

TEST_CASE("truncation covers the interference field", "[simulator]")
{
    NetworkParams p;
    const auto tr = truncation(p);
    CHECK(tr.radius >= 5.0 / std::sqrt(p.lambda));
    CHECK(tr.radius >= 2.0 * p.d_rb);
    // The deterministic tail stays a small fraction of the noise power.
    CHECK(tr.tail_bs > 0.0);
    CHECK(tr.tail_bs < 0.2 * p.N0);
    CHECK(tr.tail_relay > 0.0);
    CHECK(tr.tail_relay < 0.2 * p.N0);
}

TEST_CASE("deployments are placed as specified", "[simulator]")
{
    NetworkParams p;
    const auto tr = truncation(p);
    auto rng = Xoshiro256pp::stream(5, 0);
    for (int i = 0; i < 200; ++i)
    {
        const auto dep = sample_deployment(p, DeploymentModel::UePPP, tr, rng);
        REQUIRE(dep.relays.size() == static_cast<std::size_t>(p.kr));
        CHECK_THAT(dep.relays[0].x, WithinRel(p.d_rb, 1e-12));
        CHECK_THAT(dep.relays[0].y, WithinAbs(0.0, 1e-9));
        const auto ue = dep.ue_polar();
        CHECK(std::abs(ue.theta_u) <= pi / p.kr + 1e-12);
        // The served UE is the point nearest to the BS.
        for (const auto &z : dep.interferers)
            CHECK(std::hypot(z.x, z.y) >= ue.d_ub);
    }
}

TEST_CASE("fixed position agrees with the analytic engine", "[simulator]")
{
    NetworkParams p;
    const UePolar ue{250.0, 0.2};
    const auto mc = estimate(p, four(), FixedPosition{ue}, opts(200'000, 11));
    AnalyticOptions exact;
    exact.feedback_energy = FeedbackEnergy::Exact;
    PointEvaluator ev(p, derive_link_geometry(p, ue), exact);
    const auto schemes = four();
    for (std::size_t k = 0; k < schemes.size(); ++k)
    {
        const auto a = ev.evaluate(schemes[k]);
        INFO(to_string(schemes[k]));
        CHECK(std::abs(a.throughput - mc.schemes[k].throughput.mean) < 4.0 * mc.schemes[k].throughput.se);
        CHECK(std::abs(energy_per_packet(a) - mc.schemes[k].energy.mean) < 4.0 * mc.schemes[k].energy.se);
    }
}

TEST_CASE("standard error scales as 1/sqrt(n)", "[simulator]")
{
    NetworkParams p;
    const UePolar ue{300.0, 0.1};
    const auto small = estimate(p, {sic(Protocol::SelectionRelay)}, FixedPosition{ue}, opts(20'000, 3));
    const auto large = estimate(p, {sic(Protocol::SelectionRelay)}, FixedPosition{ue}, opts(80'000, 4));
    const double ratio = small.schemes[0].throughput.se / large.schemes[0].throughput.se;
    CHECK_THAT(ratio, WithinRel(2.0, 0.05));
}

TEST_CASE("results do not depend on the thread count", "[simulator]")
{
    NetworkParams p;
    const auto one = estimate(p, four(), CellAverageMode{}, opts(10'000, 9, 1));
    const auto three = estimate(p, four(), CellAverageMode{}, opts(10'000, 9, 3));
    for (std::size_t k = 0; k < one.schemes.size(); ++k)
    {
        CHECK(one.schemes[k].throughput.mean == three.schemes[k].throughput.mean);
        CHECK(one.schemes[k].throughput.se == three.schemes[k].throughput.se);
        CHECK(one.schemes[k].energy.mean == three.schemes[k].energy.mean);
    }
    for (std::size_t k = 0; k < one.chi.size(); ++k)
        CHECK(one.chi[k].mean == three.chi[k].mean);
    const auto other = estimate(p, four(), CellAverageMode{}, opts(10'000, 10, 1));
    CHECK(other.schemes[0].throughput.mean != one.schemes[0].throughput.mean);
}

TEST_CASE("energy accounting is conserved exactly", "[simulator]")
{
    NetworkParams p;
    std::vector<SchemeSpec> schemes = four();
    schemes.push_back({Protocol::FeedbackRelay, Receiver::NoSicLowerBound, ScMode::Off, 0.0});
    const auto mc = estimate(p, schemes, CellAverageMode{}, opts(20'000, 21));
    const double ue_slot = p.Pt * p.slot_T;
    const double relay_tx = p.relay_power_actual() * p.slot_T;
    for (std::size_t k = 0; k < schemes.size(); ++k)
    {
        const auto &s = mc.schemes[k];
        const double expected = ue_slot * static_cast<double>(s.ue_slots) +
                                relay_tx * static_cast<double>(s.relay_transmissions);
        CHECK(s.total_energy == expected);
        if (schemes[k].receiver == Receiver::Sic)
            CHECK(s.ue_slots == 2 * mc.n_trials);
    }
    CHECK(mc.schemes[0].relay_transmissions == 0);
}

TEST_CASE("coupled trials respect the scheme ordering", "[simulator]")
{
    NetworkParams p;
    const auto tr = truncation(p);
    const auto g = derive_link_geometry(p, {320.0, 0.3});
    for (std::uint64_t i = 0; i < 20'000; ++i)
    {
        auto rng = Xoshiro256pp::stream(77, i);
        const auto dep = sample_deployment_at(p, g.ue, tr, rng);
        const auto r = draw_realization(p, dep, rng);
        const int b = play_slot_pair(p, sic(Protocol::BaselineRelay), g, r).packets_delivered;
        const int s = play_slot_pair(p, sic(Protocol::SelectionRelay), g, r).packets_delivered;
        const int f = play_slot_pair(p, sic(Protocol::FeedbackRelay), g, r).packets_delivered;
        REQUIRE(s >= b);
        REQUIRE(f >= s);
    }
}

TEST_CASE("SIC decoding rule", "[simulator]")
{
    // theta = 2, unit noise.
    auto [a, b] = sic_decode(10.0, 3.0, 1.0, 2.0); // 10 >= 2 * 4, then 3 >= 2
    CHECK(a);
    CHECK(b);
    std::tie(a, b) = sic_decode(10.0, 1.5, 1.0, 2.0); // first decodes, second too weak
    CHECK(a);
    CHECK_FALSE(b);
    std::tie(a, b) = sic_decode(5.0, 4.0, 1.0, 2.0); // neither dominates
    CHECK_FALSE(a);
    CHECK_FALSE(b);
    std::tie(a, b) = sic_decode(3.0, 20.0, 1.0, 2.0); // second first, then first
    CHECK(a);
    CHECK(b);
}

TEST_CASE("estimator argument checks", "[simulator]")
{
    NetworkParams p;
    CHECK_THROWS_AS(estimate(p, four(), CellAverageMode{}, opts(999, 1)), ParameterError);
    CHECK_THROWS_AS(estimate(p, {sic(Protocol::SelectionRelay)}, CellAverageMode{DeploymentModel::BsVoronoi},
                             opts(1000, 1)),
                    ParameterError);
    CHECK_THROWS_AS(estimate(p, {{Protocol::FeedbackRelay, Receiver::Sic, ScMode::OptimalBetaSelect, 0.0}},
                             CellAverageMode{}, opts(1000, 1)),
                    ParameterError);
}

TEST_CASE("Voronoi deployment serves the nearest-BS cell", "[simulator]")
{
    NetworkParams p;
    const auto mc = estimate(p, {sic(Protocol::Basic)}, CellAverageMode{DeploymentModel::BsVoronoi}, opts(2000, 8));
    CHECK(mc.schemes[0].throughput.mean > 0.5);
    CHECK(mc.schemes[0].throughput.mean < 1.0);
}

TEST_CASE("Voronoi UE distance law matches a brute-force sampler", "[simulator]")
{
    // Oracle: BS PPP plus the origin, a uniform point in a wide disk kept only
    // when the origin is its nearest BS, one fresh BS draw per sample.
    NetworkParams p;
    const double scale = 1.0 / std::sqrt(p.lambda);
    const std::size_t n = 4000;
    auto moments = [](const std::vector<double> &v) {
        double m = 0.0, m2 = 0.0;
        for (double x : v)
        {
            m += x;
            m2 += x * x;
        }
        m /= static_cast<double>(v.size());
        return std::pair{m, std::sqrt((m2 / static_cast<double>(v.size()) - m * m) / static_cast<double>(v.size()))};
    };

    Xoshiro256pp orng(99);
    std::vector<double> brute;
    const double W = 7.0 * scale, Ro = 4.0 * scale;
    while (brute.size() < n)
    {
        std::poisson_distribution<long> count(p.lambda * pi * W * W);
        const long k = count(orng);
        std::vector<std::pair<double, double>> bs;
        for (long i = 0; i < k; ++i)
        {
            const double r = W * std::sqrt(orng.uniform()), a = 2.0 * pi * orng.uniform();
            bs.emplace_back(r * std::cos(a), r * std::sin(a));
        }
        while (true)
        {
            const double r = Ro * std::sqrt(orng.uniform()), a = 2.0 * pi * orng.uniform();
            const double x = r * std::cos(a), y = r * std::sin(a);
            bool mine = true;
            for (const auto &[bx, by] : bs)
                if ((x - bx) * (x - bx) + (y - by) * (y - by) < r * r)
                {
                    mine = false;
                    break;
                }
            if (mine)
            {
                brute.push_back(pi * p.lambda * r * r);
                break;
            }
        }
    }

    const auto tr = truncation(p);
    std::vector<double> lib;
    for (std::size_t i = 0; i < n; ++i)
    {
        auto rng = Xoshiro256pp::stream(7, i);
        const auto dep = sample_deployment(p, DeploymentModel::BsVoronoi, tr, rng);
        lib.push_back(pi * p.lambda * (dep.ue.x * dep.ue.x + dep.ue.y * dep.ue.y));
    }

    const auto [mb, sb] = moments(brute);
    const auto [ml, sl] = moments(lib);
    CHECK(std::abs(mb - ml) < 4.0 * std::hypot(sb, sl));
    // The UE-PPP serving distance is Rayleigh with E[pi lambda d^2] = 1; a
    // uniform point in the typical cell sits measurably closer.
    CHECK(mb < 0.9);
    CHECK(ml < 0.9);
}

TEST_CASE("empirical CDF", "[simulator]")
{
    const std::vector<double> th{0.0, 1.0, 2.0};
    const auto c = empirical_cdf({0.0, 1.0, 1.0, 2.0}, th);
    CHECK_THAT(c[0].prob, WithinAbs(0.25, 1e-15));
    CHECK_THAT(c[1].prob, WithinAbs(0.75, 1e-15));
    CHECK_THAT(c[2].prob, WithinAbs(1.0, 1e-15));
}
