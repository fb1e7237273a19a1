// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment runner behind the command-line tool: sweeps, CDFs, CSV rows
// and the JSON sidecar describing each result file.

#include "analytic.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "simulator.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace relaylab {

inline std::string sha256_hex(std::string_view data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i)
    {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

/// Shortest text that reads back as the same double; empty for NaN.
inline std::string format_number(double v)
{
    if (std::isnan(v))
        return {};
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec)
    {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

struct ResultRow
{
    SchemeSpec scheme;
    std::string axis;
    double value = std::numeric_limits<double>::quiet_NaN();
    double throughput = 0.0;
    double throughput_se = std::numeric_limits<double>::quiet_NaN();
    double energy = 0.0;
    double energy_se = std::numeric_limits<double>::quiet_NaN();
    Engine engine = Engine::Analytic;
    std::optional<std::uint64_t> n_trials;
    std::optional<std::uint64_t> seed;
    double wall_time_s = std::numeric_limits<double>::quiet_NaN();
    double normalized_energy = std::numeric_limits<double>::quiet_NaN();
};

inline const char *run_csv_header()
{
    return "scheme,receiver,sc_mode,axis,value,throughput,throughput_se,energy_per_packet,energy_se,engine,"
           "n_trials,seed,wall_time_s,normalized_energy\n";
}

inline std::string to_csv(const ResultRow &r)
{
    auto opt = [](const std::optional<std::uint64_t> &v) { return v ? std::to_string(*v) : std::string(); };
    std::string s;
    s += std::string(to_string(r.scheme.protocol)) + ",";
    s += std::string(to_string(r.scheme.receiver)) + ",";
    s += sc_label(r.scheme) + ",";
    s += r.axis + ",";
    s += format_number(r.value) + ",";
    s += format_number(r.throughput) + ",";
    s += format_number(r.throughput_se) + ",";
    s += format_number(r.energy) + ",";
    s += format_number(r.energy_se) + ",";
    s += std::string(to_string(r.engine)) + ",";
    s += opt(r.n_trials) + ",";
    s += opt(r.seed) + ",";
    s += format_number(r.wall_time_s) + ",";
    s += format_number(r.normalized_energy) + "\n";
    return s;
}

namespace detail {

inline const SchemeSpec basic_reference{Protocol::Basic, Receiver::Sic, ScMode::Off, 0.0};

/// Evaluated schemes: the requested ones plus the Basic reference used to
/// normalize energy (appended if absent). Returns the reference index.
inline std::size_t with_reference(std::vector<SchemeSpec> &schemes)
{
    for (std::size_t i = 0; i < schemes.size(); ++i)
        if (schemes[i] == basic_reference)
            return i;
    schemes.push_back(basic_reference);
    return schemes.size() - 1;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Rows of one sweep point for every requested scheme and engine.
inline std::vector<ResultRow> evaluate_point(const ExperimentConfig &cfg, std::optional<double> value,
                                             unsigned mc_threads)
{
    const auto p = cfg.params_at(value);
    auto schemes = cfg.schemes_at(value);
    const std::size_t requested = schemes.size();
    const std::size_t ref = with_reference(schemes);
    const std::string axis = cfg.sweep_axis.empty() ? "none" : cfg.sweep_axis;
    const double v = value.value_or(std::numeric_limits<double>::quiet_NaN());
    std::vector<ResultRow> rows;

    if (cfg.engine != Engine::MonteCarlo)
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<SchemeValue> values;
        if (cfg.position_d_ub)
        {
            PointEvaluator ev(p, derive_link_geometry(p, {*cfg.position_d_ub, cfg.position_theta_u}),
                              cfg.analytic_options());
            for (const auto &s : schemes)
                values.push_back(ev.evaluate(s));
        }
        else
            values = average_schemes(p, schemes, cfg.cell_tolerance(), cfg.analytic_options()).mean;
        const double wall = seconds_since(t0);
        const double e_ref = energy_per_packet(values[ref]);
        for (std::size_t k = 0; k < requested; ++k)
        {
            ResultRow r;
            r.scheme = schemes[k];
            r.axis = axis;
            r.value = v;
            r.throughput = values[k].throughput;
            r.energy = energy_per_packet(values[k]);
            r.engine = Engine::Analytic;
            if (cfg.output_timing)
                r.wall_time_s = wall;
            r.normalized_energy = r.energy / e_ref;
            rows.push_back(r);
        }
    }
    if (cfg.engine != Engine::Analytic)
    {
        const auto t0 = std::chrono::steady_clock::now();
        auto opt = cfg.mc_options();
        opt.threads = mc_threads;
        EstimateMode mode = CellAverageMode{cfg.deployment()};
        if (cfg.position_d_ub)
            mode = FixedPosition{{*cfg.position_d_ub, cfg.position_theta_u}};
        const auto est = estimate(p, schemes, mode, opt);
        const double wall = seconds_since(t0);
        const double e_ref = est.schemes[ref].energy.mean;
        for (std::size_t k = 0; k < requested; ++k)
        {
            const auto &e = est.schemes[k];
            ResultRow r;
            r.scheme = schemes[k];
            r.axis = axis;
            r.value = v;
            r.throughput = e.throughput.mean;
            r.throughput_se = e.throughput.se;
            r.energy = e.energy.mean;
            r.energy_se = e.energy.se;
            r.engine = Engine::MonteCarlo;
            r.n_trials = est.n_trials;
            r.seed = est.seed;
            if (cfg.output_timing)
                r.wall_time_s = wall;
            r.normalized_energy = r.energy / e_ref;
            rows.push_back(r);
        }
    }
    return rows;
}

/// Writes a file atomically enough for our purposes: truncate then write.
inline void write_text(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot write output file '" + path.string() + "'");
    out << text;
}

inline void write_sidecar(const std::filesystem::path &csv_path, const ExperimentConfig &cfg,
                          const std::string &csv_text, std::size_t rows, const std::string &status)
{
    nlohmann::json j;
    const auto config = config_to_json(cfg);
    j["config"] = config;
    j["config_sha256"] = sha256_hex(config.dump());
    j["content_sha256"] = sha256_hex(csv_text);
    j["rows"] = rows;
    j["status"] = status;
    write_text(csv_path.string() + ".json", j.dump(2) + "\n");
}

/// Appends rows to the CSV as they complete and keeps the sidecar in step,
/// so a failure leaves every finished row on disk.
class ResultWriter
{
  public:
    ResultWriter(std::filesystem::path path, const ExperimentConfig &cfg, std::string header)
        : path_(std::move(path)), cfg_(cfg), text_(std::move(header))
    {
        if (path_.has_parent_path())
            std::filesystem::create_directories(path_.parent_path());
        out_.open(path_, std::ios::binary | std::ios::trunc);
        if (!out_)
            throw ConfigError("cannot write output file '" + path_.string() + "'");
        out_ << text_;
        out_.flush();
    }

    void append(const std::string &line)
    {
        text_ += line;
        out_ << line;
        ++rows_;
    }

    void flush() { out_.flush(); }

    void finish(const std::string &status)
    {
        out_.flush();
        write_sidecar(path_, cfg_, text_, rows_, status);
    }

  private:
    std::filesystem::path path_;
    const ExperimentConfig &cfg_;
    std::string text_;
    std::ofstream out_;
    std::size_t rows_ = 0;
};

} // namespace detail

/// Runs the configured sweep and writes `path` (CSV) plus `path`.json.
/// Sweep points run on a worker pool for the analytic engine; Monte Carlo
/// points run in order with the trials spread over the workers. Rows are
/// written in sweep order either way.
inline void cmd_run(const ExperimentConfig &cfg, const std::filesystem::path &path)
{
    cfg.validate();
    std::vector<std::optional<double>> points;
    if (cfg.sweep_axis.empty())
        points.push_back(std::nullopt);
    else
        for (double v : cfg.sweep_values)
            points.push_back(v);

    detail::ResultWriter writer(path, cfg, run_csv_header());
    const unsigned threads = resolve_threads(cfg.mc_threads);
    const bool mc = cfg.engine != Engine::Analytic;
    std::vector<std::optional<std::vector<ResultRow>>> done(points.size());
    std::size_t next_to_write = 0;
    std::mutex m;
    auto write_ready = [&]() {
        while (next_to_write < points.size() && done[next_to_write])
        {
            for (const auto &r : *done[next_to_write])
                writer.append(to_csv(r));
            ++next_to_write;
        }
        writer.flush();
    };
    try
    {
        parallel_for(points.size(), mc ? 1u : threads, [&](std::size_t i) {
            auto rows = detail::evaluate_point(cfg, points[i], mc ? threads : 1u);
            std::lock_guard lock(m);
            done[i] = std::move(rows);
            write_ready();
        });
    }
    catch (const std::exception &e)
    {
        writer.finish(std::string("failed: ") + e.what());
        throw;
    }
    writer.finish("ok");
}

inline const char *cdf_csv_header() { return "threshold,prob,scheme,engine\n"; }

/// Throughput CDFs over served-UE positions at the base parameters.
/// Thresholds are evenly spaced on [0, 2] (or [0, 4] if any scheme uses
/// superposition coding).
inline void cmd_cdf(const ExperimentConfig &cfg, const std::filesystem::path &path)
{
    cfg.validate();
    const auto p = cfg.params_at(std::nullopt);
    const auto schemes = cfg.scheme_specs();
    double top = 2.0;
    for (const auto &s : schemes)
        if (s.uses_sc())
            top = 4.0;
    std::vector<double> thresholds(cfg.cdf_thresholds);
    for (std::size_t i = 0; i < thresholds.size(); ++i)
        thresholds[i] = top * static_cast<double>(i) / static_cast<double>(thresholds.size() - 1);

    detail::ResultWriter writer(path, cfg, cdf_csv_header());
    auto emit = [&](const std::vector<std::vector<double>> &samples, Engine engine) {
        for (std::size_t k = 0; k < schemes.size(); ++k)
        {
            const auto curve = empirical_cdf(samples[k], thresholds);
            for (const auto &pt : curve)
                writer.append(format_number(pt.threshold) + "," + format_number(pt.prob) + "," +
                              to_string(schemes[k]) + "," + std::string(to_string(engine)) + "\n");
        }
        writer.flush();
    };
    try
    {
        if (cfg.engine != Engine::MonteCarlo)
            emit(position_throughputs(p, schemes, {cfg.cdf_grid_radial, cfg.cdf_grid_angular},
                                      cfg.analytic_options()),
                 Engine::Analytic);
        if (cfg.engine != Engine::Analytic)
            emit(conditional_throughputs(p, schemes, cfg.cdf_positions, cfg.cdf_trials_per_position, cfg.mc_seed,
                                         resolve_threads(cfg.mc_threads), cfg.mc_options().sim),
                 Engine::MonteCarlo);
    }
    catch (const std::exception &e)
    {
        writer.finish(std::string("failed: ") + e.what());
        throw;
    }
    writer.finish("ok");
}

} // namespace relaylab
