// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "relaylab/config.hpp"

using namespace relaylab;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

TEST_CASE("text format with sections and dotted keys", "[config]")
{
    const auto c = parse_config_text("params.kr = 4\n"
                                     "[params]\n"
                                     "theta_db = 5\n"
                                     "Pr_over_Pt = 4\n"
                                     "[run]\n"
                                     "schemes = basic, feedback:sic:beta=0.8\n"
                                     "engine = both\n"
                                     "[sweep]\n"
                                     "axis = d_rb\n"
                                     "values = 50, 100, 150\n"
                                     "[mc]\n"
                                     "n_trials = 5000\n");
    CHECK(c.params.kr == 4);
    CHECK(c.engine == Engine::Both);
    REQUIRE(c.schemes.size() == 2);
    CHECK(c.scheme_specs()[1].beta == 0.8);
    CHECK(c.sweep_values == std::vector<double>{50, 100, 150});
    CHECK(c.mc_trials == 5000);
    const auto p = c.params_at(100.0);
    CHECK(p.d_rb == 100.0);
    CHECK_THAT(p.theta, WithinRel(db_to_linear(5.0), 1e-15));
    CHECK_THAT(p.Pr, WithinRel(4.0 * dbm_to_watt(23.0), 1e-15));
}

TEST_CASE("beamwidth axis is entered in degrees", "[config]")
{
    const auto c = parse_config_text("[sweep]\naxis = beamwidth_3db\nvalues = 90, 180\n");
    const auto p = c.params_at(90.0);
    CHECK_THAT(beamwidth_from_k(p.rx_pattern_relay.k), WithinRel(pi / 2.0, 1e-12));
}

TEST_CASE("rejected configurations", "[config]")
{
    CHECK_THROWS_WITH(parse_config_text("[params]\nlamda = 1e-6\n"), ContainsSubstring("unknown config key"));
    CHECK_THROWS_WITH(parse_config_text("[sweep]\naxis = d_rb\nvalues =\n"), ContainsSubstring("empty"));
    CHECK_THROWS_WITH(parse_config_text("[sweep]\naxis = d_rb\nvalues = 100, 50\n"),
                      ContainsSubstring("strictly increasing"));
    CHECK_THROWS_WITH(parse_config_text("[sweep]\naxis = height\nvalues = 1\n"), ContainsSubstring("unknown axis"));
    CHECK_THROWS_WITH(parse_config_text("[params]\ntheta_db = -1\n"), ContainsSubstring("threshold must be >= 1"));
    CHECK_THROWS_AS(parse_config_text("[params]\nkr = 2.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[params]\nalpha = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[run]\nschemes = teleport\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[run]\nengine = quantum\n"), ConfigError);
    CHECK_THROWS_WITH(parse_config_text("params.kr = 3\n[params]\nkr = 4\n"), ContainsSubstring("duplicate"));
    CHECK_THROWS_AS(parse_config_text("[mc]\nn_trials = 10\n[run]\nengine = mc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[run]\nengine = mc\nschemes = feedback:sic:opt-select\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[run]\nengine = mc\nschemes = baseline\n[mc]\ndeployment = bs-voronoi\n"),
                    ConfigError);
}

TEST_CASE("JSON round trip", "[config]")
{
    auto c = parse_config_text("[run]\nschemes = selection, feedback:nosic-upper\n"
                               "[sweep]\naxis = kr\nvalues = 2, 3, 4\n"
                               "[position]\nd_ub = 220\ntheta_u = 0.1\n");
    const auto j = config_to_json(c);
    const auto back = parse_config_json(j.dump());
    CHECK(config_to_json(back) == j);
    CHECK(back.position_d_ub == 220.0);
    CHECK(back.sweep_axis == "kr");

    // A sidecar with the config under "config" is accepted as input.
    nlohmann::json sidecar{{"config", j}, {"rows", 3}};
    CHECK(config_to_json(parse_config_json(sidecar.dump())) == j);
    CHECK_THROWS_AS(parse_config_json("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(parse_config_json("{\"params\": {\"bogus\": 1}}"), ConfigError);
}

TEST_CASE("engine names", "[config]")
{
    CHECK(parse_engine("analytic") == Engine::Analytic);
    CHECK(parse_engine("mc") == Engine::MonteCarlo);
    CHECK(parse_engine("both") == Engine::Both);
    CHECK_THROWS_AS(parse_engine("fast"), ConfigError);
}
