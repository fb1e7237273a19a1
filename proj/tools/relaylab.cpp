// SPDX-License-Identifier: Apache-2.0
// Command-line front end: run, cdf and validate subcommands.

#include "acceptance.hpp"

#include "relaylab/config.hpp"
#include "relaylab/errors.hpp"
#include "relaylab/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Overrides
{
    std::string config;
    std::string out;
    std::string engine;
    std::optional<std::uint64_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

void add_common(CLI::App *cmd, Overrides &o)
{
    cmd->add_option("-c,--config", o.config, "experiment file (.cfg or .json)");
    cmd->add_option("-o,--out", o.out, "output CSV path");
    cmd->add_option("--engine", o.engine, "analytic, mc or both");
    cmd->add_option("--trials", o.trials, "Monte Carlo trials per point");
    cmd->add_option("--seed", o.seed, "Monte Carlo seed");
    cmd->add_option("--threads", o.threads, "worker threads (0: all cores)");
}

relaylab::ExperimentConfig load(const Overrides &o)
{
    relaylab::ExperimentConfig cfg = o.config.empty() ? relaylab::ExperimentConfig{} : relaylab::load_config(o.config);
    if (!o.out.empty())
        cfg.output_path = o.out;
    if (!o.engine.empty())
        cfg.engine = relaylab::parse_engine(o.engine);
    if (o.trials)
    {
        cfg.mc_trials = *o.trials;
        cfg.validate_mc_trials = *o.trials;
    }
    if (o.seed)
    {
        cfg.mc_seed = *o.seed;
        cfg.validate_seed = *o.seed;
    }
    if (o.threads)
        cfg.mc_threads = *o.threads;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Relay-assisted uplink throughput and energy lab"};
    app.require_subcommand(1);

    Overrides run_o, cdf_o, val_o;
    auto *run = app.add_subcommand("run", "evaluate the configured schemes, optionally over a sweep");
    add_common(run, run_o);
    auto *cdf = app.add_subcommand("cdf", "throughput CDF over UE positions");
    add_common(cdf, cdf_o);
    auto *val = app.add_subcommand("validate", "run the acceptance criteria");
    add_common(val, val_o);
    std::vector<int> criteria;
    val->add_option("--criteria", criteria, "criterion numbers (default: all)")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (run->parsed())
        {
            const auto cfg = load(run_o);
            relaylab::cmd_run(cfg, cfg.output_path);
            std::cerr << "wrote " << cfg.output_path << "\n";
            return 0;
        }
        if (cdf->parsed())
        {
            const auto cfg = load(cdf_o);
            relaylab::cmd_cdf(cfg, cfg.output_path);
            std::cerr << "wrote " << cfg.output_path << "\n";
            return 0;
        }
        const auto cfg = load(val_o);
        if (criteria.empty())
            for (double c : cfg.validate_criteria)
                criteria.push_back(static_cast<int>(c));
        const bool ok = relaylab::acceptance::run_suite(relaylab::acceptance::Settings::from(cfg), criteria, stdout);
        return ok ? 0 : 1;
    }
    catch (const relaylab::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const relaylab::ParameterError &e)
    {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    }
    catch (const relaylab::NumericError &e)
    {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
