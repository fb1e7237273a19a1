// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment configuration: a flat key/value file with dotted sections
// (INI "[section]" headers or "section.key = value" lines), or the JSON
// written next to every result file. Powers are in dBm, the decode
// threshold in dB and beamwidths in degrees at this boundary only.

#include "errors.hpp"
#include "model.hpp"
#include "simulator.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace relaylab {

enum class Engine
{
    Analytic,
    MonteCarlo,
    Both,
};

inline std::string_view to_string(Engine e)
{
    switch (e)
    {
    case Engine::Analytic: return "analytic";
    case Engine::MonteCarlo: return "montecarlo";
    case Engine::Both: return "both";
    }
    return "?";
}

inline Engine parse_engine(const std::string &s)
{
    if (s == "analytic")
        return Engine::Analytic;
    if (s == "montecarlo" || s == "mc")
        return Engine::MonteCarlo;
    if (s == "both")
        return Engine::Both;
    throw ConfigError("unknown engine '" + s + "' (expected analytic, mc or both)");
}

/// Network parameters in boundary units.
struct ParamsInput
{
    double lambda = 4.6e-6;
    double A = 1e-3;
    double alpha = 3.7;
    double N0_dbm = -103.0;
    double Pt_dbm = 23.0;
    double Pr_over_Pt = 2.0;
    double eta = 10.0;
    double theta_db = 3.0;
    int kr = 3;
    double d_rb = 150.0;
    double slot_T = 1e-3;
    double relay_beamwidth_deg = 0.0; ///< 0 = omnidirectional
    bool relay_pattern_normalized = false;
    double bs_beamwidth_deg = 0.0;
    bool bs_pattern_normalized = false;
    std::string arrival = "geometric";

    NetworkParams resolve() const
    {
        NetworkParams p;
        p.lambda = lambda;
        p.A = A;
        p.alpha = alpha;
        p.N0 = dbm_to_watt(N0_dbm);
        p.Pt = dbm_to_watt(Pt_dbm);
        p.Pr = Pr_over_Pt * p.Pt;
        p.eta = eta;
        p.theta = db_to_linear(theta_db);
        p.kr = kr;
        p.d_rb = d_rb;
        p.slot_T = slot_T;
        auto pattern = [](double deg, bool normalized) {
            AntennaPattern a;
            if (deg != 0.0)
                a.k = k_from_beamwidth(deg * pi / 180.0);
            a.normalized = normalized;
            return a;
        };
        p.rx_pattern_relay = pattern(relay_beamwidth_deg, relay_pattern_normalized);
        p.rx_pattern_bs = pattern(bs_beamwidth_deg, bs_pattern_normalized);
        if (arrival == "geometric")
            p.arrival = ArrivalAngle::Geometric;
        else if (arrival == "folded-arcsin")
            p.arrival = ArrivalAngle::FoldedArcsin;
        else
            throw ConfigError("params.arrival must be 'geometric' or 'folded-arcsin'");
        p.validate();
        return p;
    }
};

inline const std::vector<std::string> &sweep_axes()
{
    static const std::vector<std::string> axes{"d_rb", "kr", "Pr_over_Pt", "beamwidth_3db", "beta"};
    return axes;
}

struct ExperimentConfig
{
    ParamsInput params;
    std::vector<std::string> schemes{"basic", "baseline", "selection", "feedback"};
    Engine engine = Engine::Analytic;

    std::string sweep_axis;          ///< empty: a single evaluation
    std::vector<double> sweep_values;

    std::optional<double> position_d_ub; ///< set: evaluate at this position instead of averaging
    double position_theta_u = 0.0;

    std::uint64_t mc_trials = 100'000;
    std::uint64_t mc_seed = 1;
    unsigned mc_threads = 1;
    std::string mc_counting = "as-printed";
    bool mc_genie_beta = false;
    std::string mc_deployment = "ue-ppp";
    bool mc_frozen = false;

    std::string analytic_feedback_energy = "as-printed";
    double analytic_laplace_rel = 1e-6;
    double analytic_cell_rel = 1e-5;

    std::uint64_t cdf_thresholds = 201;
    std::uint64_t cdf_grid_radial = 100;
    std::uint64_t cdf_grid_angular = 12;
    std::uint64_t cdf_positions = 1000;
    std::uint64_t cdf_trials_per_position = 2000;

    std::string output_path = "results.csv";
    bool output_timing = false;

    double validate_identity_tol = 1e-8;
    double validate_se_multiplier = 3.0;
    std::uint64_t validate_mc_trials = 1'000'000;
    std::uint64_t validate_seed = 20261016;
    std::vector<double> validate_criteria; ///< empty: all

    std::vector<SchemeSpec> scheme_specs() const
    {
        std::vector<SchemeSpec> out;
        for (const auto &s : schemes)
        {
            try
            {
                out.push_back(parse_scheme(s));
            }
            catch (const ParameterError &e)
            {
                throw ConfigError(std::string("schemes: ") + e.what());
            }
        }
        return out;
    }

    AnalyticOptions analytic_options() const
    {
        AnalyticOptions o;
        o.laplace.rel = analytic_laplace_rel;
        o.laplace.abs = analytic_laplace_rel * 1e-2;
        o.feedback_energy =
            analytic_feedback_energy == "exact" ? FeedbackEnergy::Exact : FeedbackEnergy::AsPrinted;
        return o;
    }

    quad::Tolerance cell_tolerance() const
    {
        auto t = relaylab::cell_tolerance();
        t.rel = analytic_cell_rel;
        t.abs = analytic_cell_rel * 1e-2;
        return t;
    }

    McOptions mc_options() const
    {
        McOptions o;
        o.n_trials = mc_trials;
        o.seed = mc_seed;
        o.threads = mc_threads;
        o.sim.counting = mc_counting == "per-packet" ? ScCounting::PerPacket : ScCounting::AsPrinted;
        o.sim.genie_beta = mc_genie_beta;
        o.frozen = mc_frozen;
        return o;
    }

    DeploymentModel deployment() const
    {
        return mc_deployment == "bs-voronoi" ? DeploymentModel::BsVoronoi : DeploymentModel::UePPP;
    }

    /// Parameters for sweep value `v` (the base parameters if no sweep).
    NetworkParams params_at(std::optional<double> v) const
    {
        ParamsInput in = params;
        if (v && sweep_axis == "d_rb")
            in.d_rb = *v;
        else if (v && sweep_axis == "kr")
            in.kr = static_cast<int>(*v);
        else if (v && sweep_axis == "Pr_over_Pt")
            in.Pr_over_Pt = *v;
        else if (v && sweep_axis == "beamwidth_3db")
            in.relay_beamwidth_deg = *v;
        try
        {
            return in.resolve();
        }
        catch (const ParameterError &e)
        {
            throw ConfigError(std::string("parameters: ") + e.what());
        }
    }

    /// Schemes for sweep value `v`: the beta axis sets the split of every
    /// fixed-split scheme.
    std::vector<SchemeSpec> schemes_at(std::optional<double> v) const
    {
        auto out = scheme_specs();
        if (v && sweep_axis == "beta")
            for (auto &s : out)
                if (s.sc == ScMode::FixedBeta)
                    s.beta = *v;
        return out;
    }

    /// Checks cross-field constraints; throws ConfigError.
    void validate() const
    {
        if (schemes.empty())
            throw ConfigError("schemes: at least one scheme is required");
        const auto specs = scheme_specs();
        for (const auto &s : specs)
        {
            try
            {
                s.validate();
            }
            catch (const ParameterError &e)
            {
                throw ConfigError(std::string("schemes: ") + e.what());
            }
        }
        if (!sweep_axis.empty())
        {
            if (std::find(sweep_axes().begin(), sweep_axes().end(), sweep_axis) == sweep_axes().end())
                throw ConfigError("sweep.axis: unknown axis '" + sweep_axis + "'");
            if (sweep_values.empty())
                throw ConfigError("sweep.values: the sweep list is empty");
            for (std::size_t i = 1; i < sweep_values.size(); ++i)
                if (!(sweep_values[i] > sweep_values[i - 1]))
                    throw ConfigError("sweep.values: values must be strictly increasing");
            for (double v : sweep_values)
            {
                if (sweep_axis == "kr" && v != std::floor(v))
                    throw ConfigError("sweep.values: kr values must be integers");
                if (sweep_axis == "beta" && !(v > 0.0 && v < 1.0))
                    throw ConfigError("sweep.values: beta values must lie in (0, 1)");
                params_at(v);
            }
        }
        else if (!sweep_values.empty())
            throw ConfigError("sweep.values given without sweep.axis");
        params_at(std::nullopt);
        if (position_d_ub && !(*position_d_ub > 0.0))
            throw ConfigError("position.d_ub must be positive");
        if (mc_counting != "as-printed" && mc_counting != "per-packet")
            throw ConfigError("mc.counting must be 'as-printed' or 'per-packet'");
        if (mc_deployment != "ue-ppp" && mc_deployment != "bs-voronoi")
            throw ConfigError("mc.deployment must be 'ue-ppp' or 'bs-voronoi'");
        if (analytic_feedback_energy != "as-printed" && analytic_feedback_energy != "exact")
            throw ConfigError("analytic.feedback_energy must be 'as-printed' or 'exact'");
        if (!(analytic_laplace_rel > 0.0) || !(analytic_cell_rel > 0.0))
            throw ConfigError("analytic tolerances must be positive");
        if (engine != Engine::Analytic)
        {
            if (mc_trials < 1000)
                throw ConfigError("mc.n_trials must be at least 1000");
            if (!position_d_ub)
                for (const auto &s : specs)
                {
                    if (s.sc == ScMode::OptimalBetaSelect && s.protocol != Protocol::Basic)
                        throw ConfigError("scheme " + to_string(s) +
                                          " is only simulated at a fixed position (set position.d_ub)");
                    if (deployment() == DeploymentModel::BsVoronoi && (s.protocol != Protocol::Basic || s.uses_sc()))
                        throw ConfigError("mc.deployment = bs-voronoi supports only the basic scheme");
                }
        }
        if (cdf_thresholds < 2 || cdf_grid_radial == 0 || cdf_grid_angular == 0 || cdf_positions == 0 ||
            cdf_trials_per_position == 0)
            throw ConfigError("cdf settings must be positive (thresholds >= 2)");
        if (!(validate_identity_tol > 0.0) || !(validate_se_multiplier > 0.0))
            throw ConfigError("validate tolerances must be positive");
    }
};

namespace detail {

inline std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string &s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ','))
    {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string &key, const std::string &v)
{
    double out = 0.0;
    const auto s = trim(v);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(out))
        throw ConfigError(key + ": '" + v + "' is not a finite number");
    return out;
}

inline std::uint64_t parse_count(const std::string &key, const std::string &v)
{
    const double d = parse_double(key, v);
    if (d < 0.0 || d != std::floor(d) || d > 1e18)
        throw ConfigError(key + ": '" + v + "' is not a non-negative integer");
    return static_cast<std::uint64_t>(d);
}

inline bool parse_bool(const std::string &key, const std::string &v)
{
    const auto s = trim(v);
    if (s == "true" || s == "1" || s == "yes")
        return true;
    if (s == "false" || s == "0" || s == "no")
        return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

struct KeyHandler
{
    std::function<void(ExperimentConfig &, const std::string &)> set;
    std::function<nlohmann::json(const ExperimentConfig &)> get;
};

inline const std::map<std::string, KeyHandler> &key_table()
{
    using nlohmann::json;
    using C = ExperimentConfig;
    static const std::map<std::string, KeyHandler> table = [] {
        std::map<std::string, KeyHandler> t;
        auto num = [&t](const std::string &k, auto getter) {
            t[k] = {[k, getter](C &c, const std::string &v) { *getter(c) = parse_double(k, v); },
                    [getter](const C &c) { return json(*getter(const_cast<C &>(c))); }};
        };
        auto count = [&t](const std::string &k, auto getter) {
            t[k] = {[k, getter](C &c, const std::string &v) {
                        using T = std::remove_reference_t<decltype(*getter(c))>;
                        *getter(c) = static_cast<T>(parse_count(k, v));
                    },
                    [getter](const C &c) { return json(*getter(const_cast<C &>(c))); }};
        };
        auto flag = [&t](const std::string &k, auto getter) {
            t[k] = {[k, getter](C &c, const std::string &v) { *getter(c) = parse_bool(k, v); },
                    [getter](const C &c) { return json(*getter(const_cast<C &>(c))); }};
        };
        auto text = [&t](const std::string &k, auto getter) {
            t[k] = {[getter](C &c, const std::string &v) { *getter(c) = trim(v); },
                    [getter](const C &c) { return json(*getter(const_cast<C &>(c))); }};
        };
        num("params.lambda", [](C &c) { return &c.params.lambda; });
        num("params.A", [](C &c) { return &c.params.A; });
        num("params.alpha", [](C &c) { return &c.params.alpha; });
        num("params.N0_dbm", [](C &c) { return &c.params.N0_dbm; });
        num("params.Pt_dbm", [](C &c) { return &c.params.Pt_dbm; });
        num("params.Pr_over_Pt", [](C &c) { return &c.params.Pr_over_Pt; });
        num("params.eta", [](C &c) { return &c.params.eta; });
        num("params.theta_db", [](C &c) { return &c.params.theta_db; });
        count("params.kr", [](C &c) { return &c.params.kr; });
        num("params.d_rb", [](C &c) { return &c.params.d_rb; });
        num("params.slot_T", [](C &c) { return &c.params.slot_T; });
        num("params.relay_beamwidth_deg", [](C &c) { return &c.params.relay_beamwidth_deg; });
        flag("params.relay_pattern_normalized", [](C &c) { return &c.params.relay_pattern_normalized; });
        num("params.bs_beamwidth_deg", [](C &c) { return &c.params.bs_beamwidth_deg; });
        flag("params.bs_pattern_normalized", [](C &c) { return &c.params.bs_pattern_normalized; });
        text("params.arrival", [](C &c) { return &c.params.arrival; });

        t["run.schemes"] = {[](C &c, const std::string &v) { c.schemes = split_list(v); },
                            [](const C &c) { return json(c.schemes); }};
        t["run.engine"] = {[](C &c, const std::string &v) { c.engine = parse_engine(trim(v)); },
                           [](const C &c) { return json(std::string(to_string(c.engine))); }};

        text("sweep.axis", [](C &c) { return &c.sweep_axis; });
        t["sweep.values"] = {[](C &c, const std::string &v) {
                                 c.sweep_values.clear();
                                 for (const auto &x : split_list(v))
                                     c.sweep_values.push_back(parse_double("sweep.values", x));
                             },
                             [](const C &c) { return json(c.sweep_values); }};

        t["position.d_ub"] = {[](C &c, const std::string &v) { c.position_d_ub = parse_double("position.d_ub", v); },
                              [](const C &c) { return c.position_d_ub ? json(*c.position_d_ub) : json(nullptr); }};
        num("position.theta_u", [](C &c) { return &c.position_theta_u; });

        count("mc.n_trials", [](C &c) { return &c.mc_trials; });
        count("mc.seed", [](C &c) { return &c.mc_seed; });
        count("mc.threads", [](C &c) { return &c.mc_threads; });
        text("mc.counting", [](C &c) { return &c.mc_counting; });
        flag("mc.genie_beta", [](C &c) { return &c.mc_genie_beta; });
        text("mc.deployment", [](C &c) { return &c.mc_deployment; });
        flag("mc.frozen", [](C &c) { return &c.mc_frozen; });

        text("analytic.feedback_energy", [](C &c) { return &c.analytic_feedback_energy; });
        num("analytic.laplace_rel", [](C &c) { return &c.analytic_laplace_rel; });
        num("analytic.cell_rel", [](C &c) { return &c.analytic_cell_rel; });

        count("cdf.thresholds", [](C &c) { return &c.cdf_thresholds; });
        count("cdf.grid_radial", [](C &c) { return &c.cdf_grid_radial; });
        count("cdf.grid_angular", [](C &c) { return &c.cdf_grid_angular; });
        count("cdf.positions", [](C &c) { return &c.cdf_positions; });
        count("cdf.trials_per_position", [](C &c) { return &c.cdf_trials_per_position; });

        text("output.path", [](C &c) { return &c.output_path; });
        flag("output.timing", [](C &c) { return &c.output_timing; });

        num("validate.identity_tol", [](C &c) { return &c.validate_identity_tol; });
        num("validate.se_multiplier", [](C &c) { return &c.validate_se_multiplier; });
        count("validate.mc_trials", [](C &c) { return &c.validate_mc_trials; });
        count("validate.seed", [](C &c) { return &c.validate_seed; });
        t["validate.criteria"] = {[](C &c, const std::string &v) {
                                      c.validate_criteria.clear();
                                      for (const auto &x : split_list(v))
                                          c.validate_criteria.push_back(parse_double("validate.criteria", x));
                                  },
                                  [](const C &c) { return json(c.validate_criteria); }};
        return t;
    }();
    return table;
}

inline void flatten_json(const nlohmann::json &j, const std::string &prefix, std::map<std::string, std::string> &out)
{
    if (j.is_object() && (prefix.empty() || !key_table().count(prefix)))
    {
        for (const auto &[k, v] : j.items())
            flatten_json(v, prefix.empty() ? k : prefix + "." + k, out);
        return;
    }
    std::string text;
    if (j.is_string())
        text = j.get<std::string>();
    else if (j.is_array())
    {
        for (const auto &e : j)
        {
            if (!text.empty())
                text += ",";
            text += e.is_string() ? e.get<std::string>() : e.dump();
        }
    }
    else if (j.is_null())
        return;
    else
        text = j.dump();
    if (!out.emplace(prefix, text).second)
        throw ConfigError("duplicate key '" + prefix + "'");
}

} // namespace detail

/// Builds a config from dotted key/value pairs. Unknown keys are errors.
inline ExperimentConfig config_from_pairs(const std::map<std::string, std::string> &pairs)
{
    ExperimentConfig c;
    for (const auto &[key, value] : pairs)
    {
        const auto it = detail::key_table().find(key);
        if (it == detail::key_table().end())
            throw ConfigError("unknown config key '" + key + "'");
        it->second.set(c, value);
    }
    c.validate();
    return c;
}

/// Parses the flat key/value text format.
inline ExperimentConfig parse_config_text(const std::string &text)
{
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try
    {
        boost::property_tree::ini_parser::read_ini(in, tree);
    }
    catch (const boost::property_tree::ini_parser_error &e)
    {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    std::map<std::string, std::string> pairs;
    auto add = [&](const std::string &key, const std::string &value) {
        if (!pairs.emplace(key, value).second)
            throw ConfigError("duplicate key '" + key + "'");
    };
    for (const auto &[name, node] : tree)
    {
        if (node.empty())
            add(name, node.data());
        else
            for (const auto &[key, leaf] : node)
                add(name + "." + key, leaf.data());
    }
    return config_from_pairs(pairs);
}

/// Parses a JSON config: a nested object, or a result sidecar holding one
/// under "config".
inline ExperimentConfig parse_config_json(const std::string &text)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::exception &e)
    {
        throw ConfigError(std::string("config JSON: ") + e.what());
    }
    if (!j.is_object())
        throw ConfigError("config JSON must be an object");
    if (j.contains("config"))
        j = j["config"];
    std::map<std::string, std::string> pairs;
    detail::flatten_json(j, "", pairs);
    return config_from_pairs(pairs);
}

inline ExperimentConfig load_config(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    if (path.extension() == ".json")
        return parse_config_json(buf.str());
    return parse_config_text(buf.str());
}

/// Fully resolved config as nested JSON (every key, defaults included).
inline nlohmann::json config_to_json(const ExperimentConfig &c)
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto &[key, h] : detail::key_table())
    {
        const auto dot = key.find('.');
        j[key.substr(0, dot)][key.substr(dot + 1)] = h.get(c);
    }
    return j;
}

} // namespace relaylab
