// SPDX-License-Identifier: Apache-2.0
#pragma once

// Acceptance checks 1-12, shared by `relaylab validate` and the acceptance
// test binary. Reference values come from oracles that do not reuse the
// engine code paths under test: Boost quadrature, brute-force sampling with
// the standard library's generators, and plain grid searches.

#include "relaylab/analytic.hpp"
#include "relaylab/config.hpp"
#include "relaylab/interference.hpp"
#include "relaylab/model.hpp"
#include "relaylab/runner.hpp"
#include "relaylab/simulator.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace relaylab::acceptance {

struct Settings
{
    double identity_tol = 1e-8;
    double se_multiplier = 3.0;
    std::uint64_t mc_trials = 1'000'000;
    std::uint64_t seed = 20261016;
    unsigned threads = 1;
    AnalyticOptions analytic = [] {
        AnalyticOptions o;
        o.laplace.rel = 1e-6;
        o.laplace.abs = 1e-8;
        return o;
    }();
    quad::Tolerance cell = cell_tolerance();

    static Settings from(const ExperimentConfig &cfg)
    {
        Settings s;
        s.identity_tol = cfg.validate_identity_tol;
        s.se_multiplier = cfg.validate_se_multiplier;
        s.mc_trials = cfg.validate_mc_trials;
        s.seed = cfg.validate_seed;
        s.threads = resolve_threads(cfg.mc_threads);
        s.analytic.laplace.rel = cfg.analytic_laplace_rel;
        s.analytic.laplace.abs = cfg.analytic_laplace_rel * 1e-2;
        s.cell = cfg.cell_tolerance();
        return s;
    }
};

struct CheckResult
{
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

inline std::string format_result(const CheckResult &r)
{
    char head[96];
    std::snprintf(head, sizeof head, "criterion %2d %s  %s", r.id, r.pass ? "PASS" : "FAIL", r.title.c_str());
    char tail[48];
    std::snprintf(tail, sizeof tail, " (%.1f s)", r.seconds);
    return std::string(head) + " | " + r.detail + tail;
}

namespace detail {

inline std::string fmt(const char *f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline std::string g(double v) { return fmt("%.6g", v); }

/// Standard error used in z-scores: a Monte Carlo estimate of 0 or 1 has a
/// zero sample SE, so it is floored at one trial's worth.
inline double se_floor(double se, double n) { return std::max(se, 1.0 / n); }

inline SchemeSpec sic(Protocol p) { return {p, Receiver::Sic, ScMode::Off, 0.0}; }

inline std::vector<double> d_rb_sweep() { return {50, 100, 150, 200, 250, 300}; }

} // namespace detail

class Suite
{
  public:
    explicit Suite(Settings s) : s_(std::move(s)) {}

    static const std::vector<std::pair<int, std::string>> &titles()
    {
        static const std::vector<std::pair<int, std::string>> t{
            {1, "closed-form Laplace transform vs direct quadrature"},
            {2, "joint transform reductions, range and monotonicity"},
            {3, "analytic vs Monte Carlo at fixed positions"},
            {4, "SIC pair probability vs brute force"},
            {5, "optimal power splits vs grid search"},
            {6, "Feedback >= Selection >= Baseline"},
            {7, "relay distance sweep: gain and interior maximum"},
            {8, "monotonicity in relay count and relay power"},
            {9, "normalized energy and energy ordering"},
            {10, "BS-Voronoi vs UE-PPP deployment models"},
            {11, "superposition coding with optimal split"},
            {12, "byte-identical CSVs across thread counts"},
        };
        return t;
    }

    CheckResult run(int id)
    {
        CheckResult r;
        r.id = id;
        for (const auto &[k, t] : titles())
            if (k == id)
                r.title = t;
        const auto t0 = std::chrono::steady_clock::now();
        try
        {
            switch (id)
            {
            case 1: check1(r); break;
            case 2: check2(r); break;
            case 3: check3(r); break;
            case 4: check4(r); break;
            case 5: check5(r); break;
            case 6: check6(r); break;
            case 7: check7(r); break;
            case 8: check8(r); break;
            case 9: check9(r); break;
            case 10: check10(r); break;
            case 11: check11(r); break;
            case 12: check12(r); break;
            default: throw ParameterError("no acceptance criterion " + std::to_string(id));
            }
        }
        catch (const std::exception &e)
        {
            r.pass = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }

  private:
    Settings s_;
    NetworkParams base_{};

    // Cell averages shared by criteria 7, 9 and 11.
    std::optional<std::vector<CellAverage>> plain_sweep_;
    std::optional<std::vector<CellAverage>> sc_sweep_;

    static double elapsed(std::chrono::steady_clock::time_point t0)
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    static void budget(CheckResult &r, double seconds, std::chrono::steady_clock::time_point t0)
    {
        const double used = elapsed(t0);
        r.detail += "; runtime " + detail::fmt("%.2f", used) + " s (budget " + detail::g(seconds) + " s)";
        if (used > seconds)
            r.pass = false;
    }

    // 1 -------------------------------------------------------------------
    void check1(CheckResult &r)
    {
        const auto t0 = std::chrono::steady_clock::now();
        const auto &p = base_;
        const double ptA = p.Pt * p.A;
        boost::math::quadrature::exp_sinh<double> integrator;
        double worst = 0.0;
        std::string where;
        for (double x : {50.0, 200.0, 800.0})
            for (int k = -3; k <= 3; ++k)
            {
                const double s = std::pow(10.0, k) * std::pow(x, p.alpha) / ptA;
                auto f = [&](double rr) { return 2.0 * pi * p.lambda * s * ptA * rr / (std::pow(rr, p.alpha) + s * ptA); };
                const double k_ref = integrator.integrate(f, x, std::numeric_limits<double>::infinity(), 1e-14);
                const double k_cf = laplace_single_exponent(p, s, x);
                // Relative error of L = exp(-K) is |expm1(K_ref - K_cf)|.
                const double err = std::abs(std::expm1(k_ref - k_cf));
                if (err > worst)
                {
                    worst = err;
                    where = "x=" + detail::g(x) + " m, s P_t A / x^alpha=1e" + std::to_string(k);
                }
            }
        r.pass = worst <= s_.identity_tol;
        r.detail = "21 points, max relative error " + detail::g(worst) + " at " + where + " (tol " +
                   detail::g(s_.identity_tol) + ")";
        budget(r, 1.0, t0);
    }

    // 2 -------------------------------------------------------------------
    void check2(CheckResult &r)
    {
        const auto t0 = std::chrono::steady_clock::now();
        const auto &p = base_;
        const double ptA = p.Pt * p.A;
        double worst3 = 0.0, worst0 = 0.0;
        bool range_ok = true, mono_ok = true;
        std::string mono_note;
        auto in_range = [&](double v) {
            if (!(v > 0.0 && v <= 1.0))
                range_ok = false;
        };
        const std::vector<double> scales{0.1, 1.0, 10.0};
        for (double x : {50.0, 200.0})
        {
            const double unit = std::pow(x, p.alpha) / ptA;
            for (double d : {100.0, 150.0, 300.0})
                for (double a : scales)
                    for (double b : scales)
                    {
                        const double j2 = laplace_joint2(p, a * unit, b * unit, d, x);
                        const double j3 = laplace_joint3(p, a * unit, b * unit, 0.0, d, x);
                        worst3 = std::max(worst3, std::abs(j3 - j2) / j2);
                        in_range(j2);
                    }
            // Relay at the BS: the kernel 1 - 1/((1+a)(1+b)) splits into
            // partial fractions, so the exponent is (s K(s) - t K(t)) / (s - t).
            for (double a : scales)
                for (double b : scales)
                {
                    if (a == b)
                        continue;
                    const double s = a * unit, t = b * unit;
                    const double ks = laplace_single_exponent(p, s, x), kt = laplace_single_exponent(p, t, x);
                    const double ref = std::exp(-(s * ks - t * kt) / (s - t));
                    const double j = laplace_joint2(p, s, t, 0.0, x);
                    worst0 = std::max(worst0, std::abs(j - ref) / ref);
                    // The same factorization holds for the two BS slots.
                    const double j3 = laplace_joint3(p, 0.0, s, t, 150.0, x);
                    worst0 = std::max(worst0, std::abs(j3 - ref) / ref);
                }
        }
        // Monotonicity along each argument (factor-4 steps).
        auto non_increasing = [&](const std::vector<double> &v, const std::string &what) {
            for (std::size_t i = 1; i < v.size(); ++i)
            {
                in_range(v[i]);
                if (v[i] > v[i - 1] * (1.0 + 1e-12))
                {
                    mono_ok = false;
                    mono_note = what;
                }
            }
        };
        const double x = 150.0, d = 150.0;
        const double unit = std::pow(x, p.alpha) / ptA;
        std::vector<double> ls, lx, js, jt, ju;
        for (int i = 0; i < 6; ++i)
        {
            const double v = unit * std::pow(4.0, i - 3);
            ls.push_back(laplace_single(p, v, x));
            lx.push_back(laplace_single(p, unit, x * std::pow(1.5, 5 - i))); // decreasing x
            js.push_back(laplace_joint2(p, v, unit, d, x));
            jt.push_back(laplace_joint2(p, unit, v, d, x));
            ju.push_back(laplace_joint3(p, unit, unit, v, d, x));
        }
        non_increasing(ls, "single in s");
        non_increasing(lx, "single in x");
        non_increasing(js, "joint2 in s");
        non_increasing(jt, "joint2 in t");
        non_increasing(ju, "joint3 in u");
        r.pass = worst3 <= s_.identity_tol && worst0 <= s_.identity_tol && range_ok && mono_ok;
        r.detail = "joint3(u=0) vs joint2 max rel " + detail::g(worst3) + ", joint2(d=0) and joint3(s=0) vs factorized max rel " +
                   detail::g(worst0) + " (tol " + detail::g(s_.identity_tol) + "), range " +
                   (range_ok ? "ok" : "violated") + ", monotone " + (mono_ok ? "ok" : "violated: " + mono_note);
        budget(r, 10.0, t0);
    }

    // 3 -------------------------------------------------------------------
    void check3(CheckResult &r)
    {
        const auto &p = base_;
        const std::vector<Protocol> protos{Protocol::Basic, Protocol::BaselineRelay, Protocol::SelectionRelay,
                                           Protocol::FeedbackRelay};
        std::vector<SchemeSpec> schemes;
        for (auto pr : protos)
            schemes.push_back(detail::sic(pr));
        AnalyticOptions exact;
        exact.feedback_energy = FeedbackEnergy::Exact;

        double worst_z = 0.0;
        std::string worst_what;
        std::size_t comparisons = 0, failures = 0;
        double printed_gap = 0.0;
        auto compare = [&](double a, const Stat &m, double n, const std::string &what) {
            const double z = std::abs(a - m.mean) / detail::se_floor(m.se, n);
            ++comparisons;
            if (z > s_.se_multiplier)
                ++failures;
            if (z > worst_z)
            {
                worst_z = z;
                worst_what = what;
            }
        };
        for (double d : {100.0, 250.0, 400.0})
        {
            const UePolar ue{d, 0.2};
            const auto geo = derive_link_geometry(p, ue);
            const double beta = sc_betas(p, geo).beta_relay;
            McOptions opt;
            opt.n_trials = s_.mc_trials;
            opt.seed = s_.seed + static_cast<std::uint64_t>(d);
            opt.threads = s_.threads;
            opt.sc_probe_beta = beta;
            const auto mc = estimate(p, schemes, FixedPosition{ue}, opt);
            const double n = static_cast<double>(mc.n_trials);
            const std::string at = "d_ub=" + detail::g(d) + " ";

            PointEvaluator ev(p, geo, exact);
            PointEvaluator printed(p, geo);
            for (std::size_t k = 0; k < schemes.size(); ++k)
            {
                const auto v = ev.evaluate(schemes[k]);
                const std::string name = at + std::string(to_string(schemes[k].protocol));
                compare(v.throughput, mc.schemes[k].throughput, n, name + " throughput");
                compare(energy_per_packet(v), mc.schemes[k].energy, n, name + " energy");
                printed_gap = std::max(printed_gap, std::abs(energy_per_packet(printed.evaluate(schemes[k])) -
                                                             energy_per_packet(v)) /
                                                        energy_per_packet(v));
            }
            const auto chi = chi_as_array(ev.chi());
            for (std::size_t k = 0; k < chi.size(); ++k)
                compare(chi[k], mc.chi[k], n, at + std::string(chi_names[k]));
            const auto sc = sc_probs(p, geo, beta);
            const std::array<double, 5> sca{sc.p_first, sc.e_ub_x, sc.e_ub_y, sc.e_ur_y, sc.p12_relay};
            for (std::size_t k = 0; k < sca.size(); ++k)
                compare(sca[k], mc.sc[k], n, at + std::string(sc_names[k]));
        }
        r.pass = failures == 0;
        r.detail = std::to_string(comparisons) + " comparisons at " + std::to_string(s_.mc_trials) +
                   " trials, " + std::to_string(failures) + " beyond " + detail::g(s_.se_multiplier) +
                   " SE, max |z| " + detail::fmt("%.2f", worst_z) + " (" + worst_what +
                   "); printed Feedback energy differs from the joint form by up to " +
                   detail::fmt("%.2f", 100.0 * printed_gap) + "%";
    }

    // 4 -------------------------------------------------------------------
    void check4(CheckResult &r)
    {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 gen(s_.seed);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::exponential_distribution<double> expo(1.0);
        const std::size_t n = 10'000'000;
        double worst_z = 0.0;
        std::string worst;
        for (int i = 0; i < 5; ++i)
        {
            const double g1 = std::pow(10.0, u01(gen) * 2.0 - 0.3);
            const double g2 = std::pow(10.0, u01(gen) * 2.0 - 0.3);
            const double th = 1.0 + 3.0 * u01(gen);
            const double ih = 2.0 * u01(gen);
            const double c = ih + 1.0;
            std::size_t hits = 0;
            for (std::size_t k = 0; k < n; ++k)
            {
                const double p1 = expo(gen) * g1, p2 = expo(gen) * g2;
                const bool one_first = p1 >= th * (p2 + c) && p2 >= th * c;
                const bool two_first = p2 >= th * (p1 + c) && p1 >= th * c;
                hits += (one_first || two_first) ? 1 : 0;
            }
            const double est = static_cast<double>(hits) / static_cast<double>(n);
            const double se = detail::se_floor(std::sqrt(est * (1.0 - est) / static_cast<double>(n)),
                                               static_cast<double>(n));
            const double a = sic_pair_prob(g1, g2, th, ih);
            const double z = std::abs(a - est) / se;
            if (z >= worst_z)
            {
                worst_z = z;
                worst = "analytic " + detail::g(a) + " vs " + detail::g(est);
            }
        }
        r.pass = worst_z <= s_.se_multiplier;
        r.detail = "5 tuples x 1e7 draws, max |z| " + detail::fmt("%.2f", worst_z) + " (" + worst + ")";
        budget(r, 30.0, t0);
    }

    // 5 -------------------------------------------------------------------
    void check5(CheckResult &r)
    {
        const auto t0 = std::chrono::steady_clock::now();
        const double step = 1e-3;
        auto m_of = [](double th, double beta) {
            const double margin = beta * (th + 1.0) - th;
            const double m1 = margin > 0.0 ? 1.0 / margin : std::numeric_limits<double>::infinity();
            return std::max(m1, 1.0 / (1.0 - beta));
        };
        double worst_direct = 0.0;
        for (double th : {1.0, 1.5, 2.0, 4.0})
        {
            const double gamma = 10.0;
            double best = 0.0, best_val = -1.0;
            for (int i = 1; i < 1000; ++i)
            {
                const double beta = i * step;
                const double v = std::exp(-th * m_of(th, beta) / gamma);
                if (v > best_val)
                {
                    best_val = v;
                    best = beta;
                }
            }
            NetworkParams p = base_;
            p.theta = th;
            const double lib = sc_betas(p, derive_link_geometry(p, {200.0, 0.3})).beta_direct;
            worst_direct = std::max({worst_direct, std::abs(best - (th + 1.0) / (th + 2.0)), std::abs(best - lib)});
        }
        std::mt19937_64 gen(s_.seed + 5);
        std::uniform_real_distribution<double> ud(30.0, 600.0), ut(-pi / 3.0, pi / 3.0);
        double worst_relay = 0.0;
        const auto &p = base_;
        const double th = p.theta;
        for (int i = 0; i < 10; ++i)
        {
            const auto geo = derive_link_geometry(p, {ud(gen), ut(gen)});
            const double lo = (th + 1.0) / (th + 2.0);
            double best = lo, best_val = std::numeric_limits<double>::infinity();
            for (double beta = lo; beta < 1.0; beta += step)
            {
                const double v = 1.0 / (geo.gamma_ub * (beta * (th + 1.0) - th)) + 1.0 / (geo.gamma_ur * (1.0 - beta));
                if (v < best_val)
                {
                    best_val = v;
                    best = beta;
                }
            }
            worst_relay = std::max(worst_relay, std::abs(best - sc_betas(p, geo).beta_relay));
        }
        r.pass = worst_direct <= step * (1.0 + 1e-9) && worst_relay <= step * (1.0 + 1e-9);
        r.detail = "direct split max deviation " + detail::g(worst_direct) + ", relay split max deviation " +
                   detail::g(worst_relay) + " (grid step " + detail::g(step) + ")";
        budget(r, 10.0, t0);
    }

    // 6 -------------------------------------------------------------------
    void check6(CheckResult &r)
    {
        const auto &p = base_;
        std::mt19937_64 gen(s_.seed + 6);
        std::uniform_real_distribution<double> ud(10.0, 800.0), ut(-pi / p.kr, pi / p.kr);
        const std::array<Receiver, 3> receivers{Receiver::Sic, Receiver::NoSicLowerBound, Receiver::NoSicUpperBound};
        std::size_t analytic_bad = 0;
        double worst_gap = 0.0;
        for (int i = 0; i < 1000; ++i)
        {
            const auto geo = analytic_geometry(ud(gen), ut(gen));
            PointEvaluator ev(p, geo);
            for (auto rx : receivers)
            {
                const double b = ev.evaluate({Protocol::BaselineRelay, rx, ScMode::Off, 0.0}).throughput;
                const double s = ev.evaluate({Protocol::SelectionRelay, rx, ScMode::Off, 0.0}).throughput;
                const double f = ev.evaluate({Protocol::FeedbackRelay, rx, ScMode::Off, 0.0}).throughput;
                worst_gap = std::max({worst_gap, b - s, s - f});
                if (s < b - 1e-9 || f < s - 1e-9)
                    ++analytic_bad;
            }
        }
        // Pathwise under shared randomness.
        const auto tr = truncation(p);
        std::size_t path_bad = 0;
        const std::size_t trials = 100'000;
        for (std::size_t i = 0; i < trials; ++i)
        {
            auto rng = Xoshiro256pp::stream(s_.seed + 6, i);
            const auto dep = sample_deployment(p, DeploymentModel::UePPP, tr, rng);
            auto ue = dep.ue_polar();
            LinkGeometry geo;
            try
            {
                geo = derive_link_geometry(p, ue);
            }
            catch (const DegenerateGeometry &)
            {
                ue.theta_u += 1e-9;
                geo = derive_link_geometry(p, ue);
            }
            const auto real = draw_realization(p, dep, rng);
            for (auto rx : receivers)
            {
                const int b = play_slot_pair(p, {Protocol::BaselineRelay, rx, ScMode::Off, 0.0}, geo, real).packets_delivered;
                const int s = play_slot_pair(p, {Protocol::SelectionRelay, rx, ScMode::Off, 0.0}, geo, real).packets_delivered;
                const int f = play_slot_pair(p, {Protocol::FeedbackRelay, rx, ScMode::Off, 0.0}, geo, real).packets_delivered;
                if (s < b || f < s)
                    ++path_bad;
            }
            const auto flags = decode_links(p, geo, real);
            if (flags.ub2i && !flags.ub2)
                ++path_bad;
        }
        r.pass = analytic_bad == 0 && path_bad == 0;
        r.detail = "analytic: " + std::to_string(analytic_bad) + " violations in 1000 geometries x 3 receivers (largest reversal " +
                   detail::g(worst_gap) + "); pathwise: " + std::to_string(path_bad) + " violations in " +
                   std::to_string(trials) + " coupled trials";
    }

    LinkGeometry analytic_geometry(double d, double theta) const
    {
        try
        {
            return derive_link_geometry(base_, {d, theta});
        }
        catch (const DegenerateGeometry &)
        {
            return derive_link_geometry(base_, {d, theta + 1e-9});
        }
    }

    // Sweeps ---------------------------------------------------------------
    static std::vector<SchemeSpec> plain_schemes()
    {
        return {detail::sic(Protocol::Basic), detail::sic(Protocol::BaselineRelay),
                detail::sic(Protocol::SelectionRelay), detail::sic(Protocol::FeedbackRelay)};
    }

    const std::vector<CellAverage> &plain_sweep()
    {
        if (!plain_sweep_)
        {
            std::vector<CellAverage> out;
            for (double d : detail::d_rb_sweep())
            {
                NetworkParams p = base_;
                p.d_rb = d;
                out.push_back(average_schemes(p, plain_schemes(), s_.cell, s_.analytic));
            }
            plain_sweep_ = std::move(out);
        }
        return *plain_sweep_;
    }

    /// Index 0: optimal-split Feedback; then the fixed policies; last: Basic
    /// without superposition coding.
    static std::vector<SchemeSpec> sc_schemes()
    {
        std::vector<SchemeSpec> s{{Protocol::FeedbackRelay, Receiver::Sic, ScMode::OptimalBetaSelect, 0.0}};
        for (auto pr : {Protocol::Basic, Protocol::BaselineRelay, Protocol::SelectionRelay, Protocol::FeedbackRelay})
            s.push_back({pr, Receiver::Sic, ScMode::OptimalBetaRelay, 0.0});
        for (double b : {0.6, 0.7, 0.8, 0.9})
            s.push_back({Protocol::FeedbackRelay, Receiver::Sic, ScMode::FixedBeta, b});
        s.push_back(detail::sic(Protocol::Basic));
        return s;
    }

    const std::vector<CellAverage> &sc_sweep()
    {
        if (!sc_sweep_)
        {
            // The curves differ by far more than these tolerances.
            auto cell = s_.cell;
            cell.rel = std::max(cell.rel, 1e-4);
            cell.abs = std::max(cell.abs, 1e-6);
            auto opt = s_.analytic;
            opt.laplace.rel = std::max(opt.laplace.rel, 1e-5);
            opt.laplace.abs = std::max(opt.laplace.abs, 1e-7);
            std::vector<CellAverage> out;
            for (double d : detail::d_rb_sweep())
            {
                NetworkParams p = base_;
                p.d_rb = d;
                out.push_back(average_schemes(p, sc_schemes(), cell, opt));
            }
            sc_sweep_ = std::move(out);
        }
        return *sc_sweep_;
    }

    static std::string curve(const std::vector<double> &v)
    {
        std::string s;
        for (double x : v)
            s += (s.empty() ? "" : " ") + detail::fmt("%.4f", x);
        return s;
    }

    // 7 -------------------------------------------------------------------
    void check7(CheckResult &r)
    {
        const auto &sw = plain_sweep();
        const auto d = detail::d_rb_sweep();
        std::vector<double> basic, sel, fdb;
        for (const auto &a : sw)
        {
            basic.push_back(a.mean[0].throughput);
            sel.push_back(a.mean[2].throughput);
            fdb.push_back(a.mean[3].throughput);
        }
        auto interior = [](const std::vector<double> &v) {
            const double top = *std::max_element(v.begin(), v.end());
            return v.front() < top && v.back() < top;
        };
        const auto best = std::max_element(sel.begin(), sel.end());
        const double gain = *best / basic[static_cast<std::size_t>(best - sel.begin())] - 1.0;
        r.pass = gain >= 0.10 && gain <= 0.30 && interior(sel) && interior(fdb);
        r.detail = "Selection gain over Basic " + detail::fmt("%.1f", 100.0 * gain) + "% at d_rb=" +
                   detail::g(d[static_cast<std::size_t>(best - sel.begin())]) + " (band 10-30%); Selection [" +
                   curve(sel) + "], Feedback [" + curve(fdb) + "], Basic " + detail::fmt("%.4f", basic[0]) +
                   "; interior maxima " + (interior(sel) && interior(fdb) ? "yes" : "no");
    }

    // 8 -------------------------------------------------------------------
    void check8(CheckResult &r)
    {
        const std::vector<SchemeSpec> relays{detail::sic(Protocol::BaselineRelay), detail::sic(Protocol::SelectionRelay),
                                             detail::sic(Protocol::FeedbackRelay)};
        std::vector<std::vector<double>> by_kr(relays.size()), by_pr(relays.size());
        for (int kr = 2; kr <= 6; ++kr)
        {
            NetworkParams p = base_;
            p.kr = kr;
            const auto a = average_schemes(p, relays, s_.cell, s_.analytic);
            for (std::size_t k = 0; k < relays.size(); ++k)
                by_kr[k].push_back(a.mean[k].throughput);
        }
        for (double ratio : {1.0, 2.0, 4.0, 8.0})
        {
            NetworkParams p = base_;
            p.Pr = ratio * p.Pt;
            const auto a = average_schemes(p, relays, s_.cell, s_.analytic);
            for (std::size_t k = 0; k < relays.size(); ++k)
                by_pr[k].push_back(a.mean[k].throughput);
        }
        bool ok = true;
        std::string text;
        for (std::size_t k = 0; k < relays.size(); ++k)
        {
            const auto &a = by_kr[k];
            const auto &b = by_pr[k];
            bool mono = true;
            for (std::size_t i = 1; i < a.size(); ++i)
                mono = mono && a[i] >= a[i - 1];
            for (std::size_t i = 1; i < b.size(); ++i)
                mono = mono && b[i] >= b[i - 1];
            const bool kr_dim = (a[4] - a[3]) < (a[1] - a[0]);
            const bool pr_flat = (b[3] - b[2]) < 0.25 * (b[1] - b[0]);
            ok = ok && mono && kr_dim && pr_flat;
            text += std::string(k ? "; " : "") + std::string(to_string(relays[k].protocol)) + " kr [" + curve(a) +
                    "] Pr/Pt [" + curve(b) + "]" + (mono && kr_dim && pr_flat ? "" : " (violated)");
        }
        r.pass = ok;
        r.detail = text;
    }

    // 9 -------------------------------------------------------------------
    void check9(CheckResult &r)
    {
        const auto &sw = plain_sweep();
        bool ordered = true;
        std::vector<double> best(4, std::numeric_limits<double>::infinity());
        for (const auto &a : sw)
        {
            const double basic = a.energy_per_packet(0);
            for (std::size_t k = 1; k < 4; ++k)
                best[k] = std::min(best[k], a.energy_per_packet(k) / basic);
            ordered = ordered && a.energy_per_packet(3) <= a.energy_per_packet(2) &&
                      a.energy_per_packet(2) <= a.energy_per_packet(1);
        }
        r.pass = ordered && best[1] < 1.0 && best[2] < 1.0 && best[3] < 1.0;
        r.detail = "best normalized energy: Baseline " + detail::fmt("%.3f", best[1]) + ", Selection " +
                   detail::fmt("%.3f", best[2]) + ", Feedback " + detail::fmt("%.3f", best[3]) +
                   "; Feedback <= Selection <= Baseline at every d_rb: " + (ordered ? "yes" : "no");
    }

    // 10 ------------------------------------------------------------------
    void check10(CheckResult &r)
    {
        McOptions opt;
        opt.n_trials = s_.mc_trials;
        opt.seed = s_.seed + 10;
        opt.threads = s_.threads;
        const std::vector<SchemeSpec> basic{detail::sic(Protocol::Basic)};
        const auto ppp = estimate(base_, basic, CellAverageMode{DeploymentModel::UePPP}, opt).schemes[0].throughput;
        const auto vor = estimate(base_, basic, CellAverageMode{DeploymentModel::BsVoronoi}, opt).schemes[0].throughput;
        const double rel = std::abs(vor.mean - ppp.mean) / ppp.mean;
        r.pass = rel <= 0.05;
        r.detail = "Basic throughput UE-PPP " + detail::fmt("%.4f", ppp.mean) + " +- " + detail::fmt("%.4f", ppp.se) +
                   ", BS-Voronoi " + detail::fmt("%.4f", vor.mean) + " +- " + detail::fmt("%.4f", vor.se) +
                   ", relative difference " + detail::fmt("%.1f", 100.0 * rel) + "% (limit 5%)";
    }

    // 11 ------------------------------------------------------------------
    void check11(CheckResult &r)
    {
        const auto &sw = sc_sweep();
        const auto schemes = sc_schemes();
        const std::size_t ref = schemes.size() - 1;
        std::vector<double> opt_curve;
        bool dominates = true;
        std::string beaten;
        for (std::size_t i = 0; i < sw.size(); ++i)
        {
            const double top = sw[i].mean[0].throughput;
            opt_curve.push_back(top);
            for (std::size_t k = 1; k < ref; ++k)
                if (sw[i].mean[k].throughput > top + 1e-6)
                {
                    dominates = false;
                    beaten = to_string(schemes[k]) + " at d_rb=" + detail::g(detail::d_rb_sweep()[i]);
                }
        }
        const auto best = static_cast<std::size_t>(std::max_element(opt_curve.begin(), opt_curve.end()) - opt_curve.begin());
        const double gain = opt_curve[best] / sw[best].mean[ref].throughput - 1.0;
        double best_fixed = 0.0;
        for (const auto &a : sw)
            for (std::size_t k = 1; k < ref; ++k)
                best_fixed = std::max(best_fixed, a.mean[k].throughput);
        r.pass = gain >= 0.25 && gain <= 0.55 && dominates;
        r.detail = "optimal-split Feedback SC [" + curve(opt_curve) + "], gain over Basic " +
                   detail::fmt("%.1f", 100.0 * gain) + "% at d_rb=" + detail::g(detail::d_rb_sweep()[best]) +
                   " (band 25-55%); best fixed-policy value " + detail::fmt("%.4f", best_fixed) + "; dominates " +
                   (dominates ? "every fixed policy" : "not: " + beaten);
    }

    // 12 ------------------------------------------------------------------
    void check12(CheckResult &r)
    {
        const auto dir = std::filesystem::temp_directory_path() /
                         ("relaylab-acceptance-" + std::to_string(static_cast<long>(::getpid())));
        std::filesystem::create_directories(dir);
        ExperimentConfig cfg = parse_config_text("[run]\n"
                                                 "schemes = basic, baseline, feedback, feedback:nosic-lower\n"
                                                 "engine = mc\n"
                                                 "[sweep]\n"
                                                 "axis = d_rb\n"
                                                 "values = 100, 200\n"
                                                 "[mc]\n"
                                                 "n_trials = 20000\n"
                                                 "seed = " +
                                                 std::to_string(s_.seed) + "\n");
        auto read = [](const std::filesystem::path &f) {
            std::ifstream in(f, std::ios::binary);
            std::stringstream b;
            b << in.rdbuf();
            return b.str();
        };
        std::vector<std::string> outputs;
        for (unsigned threads : {1u, 4u, 3u})
        {
            cfg.mc_threads = threads;
            const auto path = dir / ("run-t" + std::to_string(threads) + ".csv");
            cmd_run(cfg, path);
            outputs.push_back(read(path));
        }
        // Re-ingest the sidecar of the first run.
        const auto replay = parse_config_json(read(dir / "run-t1.csv.json"));
        cmd_run(replay, dir / "replay.csv");
        outputs.push_back(read(dir / "replay.csv"));
        bool same = !outputs[0].empty();
        for (const auto &o : outputs)
            same = same && o == outputs[0];
        std::filesystem::remove_all(dir);
        r.pass = same;
        r.detail = std::string("threads 1/4/3 and sidecar replay: ") + (same ? "identical" : "differ") + " (" +
                   std::to_string(outputs[0].size()) + " bytes)";
    }
};

/// Runs the selected criteria (all if empty), printing one line each.
inline bool run_suite(const Settings &settings, const std::vector<int> &ids, std::FILE *out)
{
    Suite suite(settings);
    std::vector<int> todo = ids;
    if (todo.empty())
        for (const auto &[k, t] : Suite::titles())
            todo.push_back(k);
    bool all = true;
    for (int id : todo)
    {
        const auto r = suite.run(id);
        std::fprintf(out, "%s\n", format_result(r).c_str());
        std::fflush(out);
        all = all && r.pass;
    }
    return all;
}

} // namespace relaylab::acceptance
