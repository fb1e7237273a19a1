// SPDX-License-Identifier: Apache-2.0
#pragma once

// Semi-analytic engine: decoding probabilities, link-indicator expectations,
// per-position throughput and energy of every scheme, superposition-coding
// quantities, cell averages and throughput CDFs.
//
// Conventions. chi_X is the indicator that link X decodes its packet:
//   ub1  UE -> BS in slot 1        ur   UE -> relay in slot 1
//   ub2  UE -> BS in slot 2 alone  rb   relay -> BS in slot 2 (with SIC)
//   ub2i UE -> BS in slot 2 while the relay also transmits (with SIC)
// Fading is independent per link and slot; interference at the relay (slot
// 1) and at the BS (slots 1 and 2) comes from the same interferer positions.
// Throughput is in packets per slot pair, energy cost in joules per slot pair.

#include "errors.hpp"
#include "interference.hpp"
#include "model.hpp"
#include "quad.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace relaylab {

/// How the relay's transmission probability enters the Feedback energy.
enum class FeedbackEnergy
{
    AsPrinted, ///< E[chi_ur] (1 - E[chi_ub1]): product of marginals
    Exact,     ///< E[chi_ur] - E[chi_ub1 chi_ur]: joint probability
};

struct AnalyticOptions
{
    quad::Tolerance laplace = laplace_tolerance();
    FeedbackEnergy feedback_energy = FeedbackEnergy::AsPrinted;
};

/// Mean SNRs entering each link indicator. Superposition coding rescales
/// the slot-1 links (both-streams decoding behaves like a weaker link).
struct LinkMeans
{
    double ub1 = 0.0;
    double ub2 = 0.0;
    double ur = 0.0;
    double rb = 0.0;

    static LinkMeans of(const LinkGeometry &g) { return {g.gamma_ub, g.gamma_ub, g.gamma_ur, g.gamma_rb}; }
};

struct ChiExpectations
{
    double e_ub1 = 0.0; ///< E[chi_ub1]
    double e_ub = 0.0;  ///< E[chi_ub2], the UE alone in slot 2
    double e_ur = 0.0;
    double e_ur_rb = 0.0;
    double e_ur_ub = 0.0;
    double e_ur_ubi = 0.0;
    double e_ub1_ur = 0.0;
    double e_ub1_ur_rb = 0.0;
    double e_ub1_ur_ub2i = 0.0;
    double e_ub1_ur_ub2 = 0.0;
    /// Relay alone in slot 2 (no SIC); index 0: slot-2 interference present
    /// (lower bound), index 1: interference-free slot 2 (upper bound).
    std::array<double, 2> e_ur_rb0{};
    std::array<double, 2> e_ub1_ur_rb0{};
    /// UE alone in both slots (no-SIC Feedback after an ACK).
    std::array<double, 2> e_ub1_ub2{};
};

/// Throughput and expected energy of one scheme at one position.
struct SchemeValue
{
    double throughput = 0.0; ///< packets per slot pair
    double cost = 0.0;       ///< joules per slot pair
};

/// Renewal-reward energy per delivered packet; +inf if nothing is delivered.
inline double energy_per_packet(const SchemeValue &v)
{
    if (!(v.throughput > 0.0))
        return std::numeric_limits<double>::infinity();
    return v.cost / v.throughput;
}

// ---------------------------------------------------------------------------
// Elementary probabilities
// ---------------------------------------------------------------------------

/// Probability that both of two simultaneous signals (mean SNRs g1, g2) are
/// decoded with SIC at normalized interference i_hat. Requires theta >= 1 so
/// that the two decoding orders are mutually exclusive.
inline double sic_pair_prob(double g1, double g2, double theta, double i_hat)
{
    if (!(g1 > 0.0) || !(g2 > 0.0) || !(theta >= 1.0) || !(i_hat >= 0.0))
        throw ParameterError("sic_pair_prob needs g1, g2 > 0, theta >= 1, i_hat >= 0");
    const double c = i_hat + 1.0;
    auto first = [&](double a, double b) {
        return std::exp(-theta * c * ((theta + 1.0) / a + 1.0 / b)) / (1.0 + theta * b / a);
    };
    return first(g1, g2) + first(g2, g1);
}

namespace detail {

inline double safe_inv(double g) { return g > 0.0 ? 1.0 / g : std::numeric_limits<double>::infinity(); }

/// Laplace argument theta / (N0 gamma); zero for an infinite SNR and, since
/// the matching exponential prefactor then vanishes, zero for gamma = 0.
inline double laplace_arg(const NetworkParams &p, double gamma)
{
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        return 0.0;
    return p.theta / (p.N0 * gamma);
}

/// SIC factor for "signal a decoded first against signal b": 1/(1 + theta gb/ga).
inline double sic_factor(double theta, double ga, double gb)
{
    if (!(ga > 0.0))
        return 0.0;
    const double r = theta * gb / ga;
    return std::isfinite(r) ? 1.0 / (1.0 + r) : 0.0;
}

inline double bs_transform(const NetworkParams &p, const LinkGeometry &g, double s, const AnalyticOptions &opt)
{
    if (s == 0.0)
        return 1.0;
    if (p.rx_pattern_bs.omnidirectional())
        return laplace_single(p, s, g.ue.d_ub);
    const auto setup = JointSetup::from(p, p.d_rb, g.ue.d_ub, g.ue.theta_u);
    return laplace_multi<1>(p, setup, {LaplaceTriple{0.0, s, 0.0}}, opt.laplace)[0];
}

} // namespace detail

/// Probability of a direct UE -> BS decode at distance d_ub.
inline double p_direct(const NetworkParams &params, double d_ub)
{
    params.validate();
    if (!(d_ub > 0.0))
        throw ParameterError("p_direct needs d_ub > 0");
    const double gamma = params.A * params.Pt * params.rx_pattern_bs.peak() / (params.N0 * std::pow(d_ub, params.alpha));
    const double s = params.theta / (params.N0 * gamma);
    double l;
    if (params.rx_pattern_bs.omnidirectional())
        l = laplace_single(params, s, d_ub);
    else
        l = laplace_multi<1>(params, JointSetup::from(params, 0.0, d_ub), {LaplaceTriple{0.0, s, 0.0}})[0];
    return std::exp(-params.theta / gamma) * l;
}

// ---------------------------------------------------------------------------
// Link-indicator expectations
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::size_t chi_triple_count = 11;

/// Joint-transform arguments behind every ChiExpectations field.
inline std::array<LaplaceTriple, chi_triple_count> chi_triples(const NetworkParams &p, const LinkMeans &m)
{
    const double th = p.theta;
    const double inv_ub2 = safe_inv(m.ub2), inv_rb = safe_inv(m.rb);
    const double s = laplace_arg(p, m.ur);
    const double t = laplace_arg(p, m.ub1);
    const double a = laplace_arg(p, m.rb);                         // relay decoded first
    const double b = th / p.N0 * ((th + 1.0) * inv_ub2 + inv_rb);  // UE first, then relay
    const double c = laplace_arg(p, m.ub2);                        // UE decoded first
    const double e = th / p.N0 * ((th + 1.0) * inv_rb + inv_ub2);  // relay first, then UE
    auto finite_or_zero = [](double v) { return std::isfinite(v) ? v : 0.0; };
    return {{
        {s, 0.0, 0.0},
        {s, 0.0, a},
        {s, 0.0, finite_or_zero(b)},
        {s, 0.0, c},
        {s, 0.0, finite_or_zero(e)},
        {s, t, 0.0},
        {s, t, a},
        {s, t, finite_or_zero(b)},
        {s, t, c},
        {s, t, finite_or_zero(e)},
        {0.0, t, c},
    }};
}

/// ChiExpectations from the transforms of chi_triples (same order).
inline ChiExpectations assemble_chi(const NetworkParams &p, const LinkGeometry &g, const LinkMeans &m,
                                    std::span<const double> J, const AnalyticOptions &opt)
{
    const double th = p.theta;
    const double inv_ub1 = safe_inv(m.ub1), inv_ub2 = safe_inv(m.ub2), inv_ur = safe_inv(m.ur),
                 inv_rb = safe_inv(m.rb);
    const double rb_first = sic_factor(th, m.rb, m.ub2); // 1/(1 + theta g_ub2/g_rb)
    const double ub_first = sic_factor(th, m.ub2, m.rb); // 1/(1 + theta g_rb/g_ub2)
    auto ex = [](double v) { return std::exp(-v); };

    ChiExpectations x;
    x.e_ub1 = ex(th * inv_ub1) * bs_transform(p, g, laplace_arg(p, m.ub1), opt);
    x.e_ub = ex(th * inv_ub2) * bs_transform(p, g, laplace_arg(p, m.ub2), opt);
    x.e_ur = ex(th * inv_ur) * J[0];

    // Slot-2 SIC: relay packet (rb) and new UE packet (ubi).
    const double rb_a = ex(th * (inv_ur + inv_rb)) * rb_first;
    const double rb_b = ex(th * (inv_ur + inv_rb + (th + 1.0) * inv_ub2)) * ub_first;
    const double ui_c = ex(th * (inv_ur + inv_ub2)) * ub_first;
    const double ui_e = ex(th * (inv_ur + inv_ub2 + (th + 1.0) * inv_rb)) * rb_first;
    x.e_ur_rb = rb_a * J[1] + rb_b * J[2];
    x.e_ur_ub = ex(th * (inv_ur + inv_ub2)) * J[3];
    x.e_ur_ubi = ui_c * J[3] + ui_e * J[4];

    const double w1 = ex(th * inv_ub1);
    x.e_ub1_ur = w1 * ex(th * inv_ur) * J[5];
    x.e_ub1_ur_rb = w1 * (rb_a * J[6] + rb_b * J[7]);
    x.e_ub1_ur_ub2i = w1 * (ui_c * J[8] + ui_e * J[9]);
    x.e_ub1_ur_ub2 = w1 * ex(th * (inv_ur + inv_ub2)) * J[8];

    // Relay alone in slot 2 (no SIC).
    const double relay_alone = ex(th * (inv_ur + inv_rb));
    x.e_ur_rb0 = {relay_alone * J[1], x.e_ur * ex(th * inv_rb)};
    x.e_ub1_ur_rb0 = {w1 * relay_alone * J[6], x.e_ub1_ur * ex(th * inv_rb)};
    x.e_ub1_ub2 = {w1 * ex(th * inv_ub2) * J[10], x.e_ub1 * ex(th * inv_ub2)};
    return x;
}

} // namespace detail

/// All expectations needed by the four protocols (with and without SIC) for
/// one position, from a single fused joint-transform quadrature.
inline ChiExpectations chi_expectations(const NetworkParams &p, const LinkGeometry &g, const LinkMeans &m,
                                        const AnalyticOptions &opt = {})
{
    const auto setup = JointSetup::from(p, p.d_rb, g.ue.d_ub, g.ue.theta_u);
    const auto J = laplace_multi<detail::chi_triple_count>(p, setup, detail::chi_triples(p, m), opt.laplace);
    return detail::assemble_chi(p, g, m, J, opt);
}

inline ChiExpectations chi_expectations(const NetworkParams &p, const LinkGeometry &g, const AnalyticOptions &opt = {})
{
    return chi_expectations(p, g, LinkMeans::of(g), opt);
}

// ---------------------------------------------------------------------------
// Throughput and energy without superposition coding
// ---------------------------------------------------------------------------

/// Throughput and energy of a non-SC scheme from its expectations.
inline SchemeValue scheme_value(const NetworkParams &p, const ChiExpectations &x, Protocol proto, Receiver rx,
                                FeedbackEnergy fe = FeedbackEnergy::AsPrinted)
{
    const double T = p.slot_T;
    const double relay_tx = p.relay_power_actual() * T;
    const double ue_slot = p.Pt * T;
    SchemeValue v;
    if (proto == Protocol::Basic)
    {
        v.throughput = x.e_ub1 + x.e_ub;
        v.cost = 2.0 * ue_slot;
        return v;
    }
    if (rx == Receiver::Sic)
    {
        const double baseline = x.e_ur_rb + x.e_ub - x.e_ur_ub + x.e_ur_ubi;
        const double selection = baseline + x.e_ub1 - x.e_ub1_ur_rb;
        const double feedback = selection - x.e_ub1_ur_ub2i + x.e_ub1_ur_ub2;
        switch (proto)
        {
        case Protocol::BaselineRelay: v.throughput = baseline; break;
        case Protocol::SelectionRelay: v.throughput = selection; break;
        default: v.throughput = feedback; break;
        }
        double relay_prob = x.e_ur;
        if (proto == Protocol::FeedbackRelay)
            relay_prob = fe == FeedbackEnergy::AsPrinted ? x.e_ur * (1.0 - x.e_ub1) : x.e_ur - x.e_ub1_ur;
        v.cost = 2.0 * ue_slot + relay_tx * relay_prob;
        return v;
    }

    // Without SIC the UE stays silent in slot 2 unless the Feedback scheme
    // received an ACK for its slot-1 packet.
    const std::size_t k = rx == Receiver::NoSicLowerBound ? 0 : 1;
    const double baseline = x.e_ur_rb0[k];
    const double selection = x.e_ub1 + x.e_ur_rb0[k] - x.e_ub1_ur_rb0[k];
    switch (proto)
    {
    case Protocol::BaselineRelay:
        v.throughput = baseline;
        v.cost = ue_slot + relay_tx * x.e_ur;
        break;
    case Protocol::SelectionRelay:
        v.throughput = selection;
        v.cost = ue_slot + relay_tx * x.e_ur;
        break;
    default:
        v.throughput = selection + x.e_ub1_ub2[k];
        v.cost = ue_slot * (1.0 + x.e_ub1) + relay_tx * (x.e_ur - x.e_ub1_ur);
        break;
    }
    return v;
}

// ---------------------------------------------------------------------------
// Superposition coding
// ---------------------------------------------------------------------------

struct ScBetas
{
    double beta_direct = 0.0;
    double beta_relay = 0.0;
};

/// Optimal direct split (theta+1)/(theta+2) and the interference-free relay
/// split. The relay formula is written as 1 - 1/(sqrt(k)(sqrt(k)+sqrt(q)))
/// with k = theta+1, which equals the printed ratio and has no singularity
/// at q = k. q is the access/direct SNR ratio ((d_ub/d_ur)^alpha when both
/// receivers are omnidirectional).
inline ScBetas sc_betas(const NetworkParams &p, const LinkGeometry &g)
{
    if (!(p.theta >= 1.0))
        throw ParameterError("decode threshold must be >= 1");
    if (!(g.d_ur > 0.0))
        throw DegenerateGeometry("relay split needs d_ur > 0");
    const double k = p.theta + 1.0;
    ScBetas b;
    b.beta_direct = k / (k + 1.0);
    double q;
    if (!(g.gamma_ub > 0.0) || !std::isfinite(g.gamma_ub))
        q = g.gamma_ub > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    else
        q = g.gamma_ur / g.gamma_ub;
    const double relay = std::isfinite(q) ? 1.0 - 1.0 / (std::sqrt(k) * (std::sqrt(k) + std::sqrt(q))) : 1.0;
    b.beta_relay = std::max(relay, b.beta_direct);
    return b;
}

/// Printed form of the relay split, for cross-checking the rewritten one.
inline double beta_relay_printed(double theta, double q)
{
    const double k = theta + 1.0;
    return std::max(1.0 - (1.0 - std::sqrt(q / k)) / (k - q), k / (k + 1.0));
}

/// SNR multipliers: first stream decodes iff h >= theta c m1 / gamma, both
/// streams iff h >= theta c m / gamma.
struct ScScale
{
    double m1 = 0.0; ///< 1/(beta(theta+1) - theta), +inf when impossible
    double m = 0.0;  ///< max(m1, 1/(1-beta))

    static ScScale of(double theta, double beta)
    {
        const double margin = beta * (theta + 1.0) - theta;
        ScScale s;
        s.m1 = margin > 0.0 ? 1.0 / margin : std::numeric_limits<double>::infinity();
        s.m = std::max(s.m1, 1.0 / (1.0 - beta));
        return s;
    }
};

struct ScExpectations
{
    double beta = 0.0;
    double p_first = 0.0; ///< BS decodes the first (stronger) stream
    double e_ub_x = 0.0;  ///< BS decodes only the first stream
    double e_ub_y = 0.0;  ///< BS decodes both streams
    double e_ur_y = 0.0;  ///< relay decodes both streams
    double p12_relay = 0.0; ///< first stream at the BS and both at the relay
    ChiExpectations chi;  ///< expectations with the SC-scaled slot-1 links
};

namespace detail {

inline double scaled(double gamma, double m) { return std::isfinite(m) ? gamma / m : 0.0; }

/// Direct-link SC probabilities only (enough for the Basic scheme).
inline ScExpectations sc_direct(const NetworkParams &p, const LinkGeometry &g, double beta, const AnalyticOptions &opt)
{
    const auto sc = ScScale::of(p.theta, beta);
    ScExpectations r;
    r.beta = beta;
    const double g_first = scaled(g.gamma_ub, sc.m1);
    const double g_both = scaled(g.gamma_ub, sc.m);
    r.p_first = g_first > 0.0 ? std::exp(-p.theta / g_first) * bs_transform(p, g, laplace_arg(p, g_first), opt) : 0.0;
    r.e_ub_y = g_both > 0.0 ? std::exp(-p.theta / g_both) * bs_transform(p, g, laplace_arg(p, g_both), opt) : 0.0;
    r.e_ub_x = std::max(0.0, r.p_first - r.e_ub_y);
    return r;
}

} // namespace detail

/// Full SC expectations for several splits, optionally together with the
/// non-SC ChiExpectations, from one fused joint-transform quadrature.
inline std::vector<ScExpectations> sc_probs_many(const NetworkParams &p, const LinkGeometry &g,
                                                 std::span<const double> betas, const AnalyticOptions &opt = {},
                                                 ChiExpectations *plain = nullptr)
{
    for (double beta : betas)
        if (!(beta >= 0.5 && beta < 1.0))
            throw ParameterError("superposition power split beta must lie in [0.5, 1)");
    const std::size_t per = detail::chi_triple_count + 1;
    std::vector<LaplaceTriple> triples;
    std::vector<LinkMeans> means;
    for (double beta : betas)
    {
        const auto sc = ScScale::of(p.theta, beta);
        const LinkMeans m{detail::scaled(g.gamma_ub, sc.m), g.gamma_ub, detail::scaled(g.gamma_ur, sc.m), g.gamma_rb};
        means.push_back(m);
        const auto t = detail::chi_triples(p, m);
        triples.insert(triples.end(), t.begin(), t.end());
        const double g_first = detail::scaled(g.gamma_ub, sc.m1);
        triples.push_back({detail::laplace_arg(p, m.ur), detail::laplace_arg(p, g_first), 0.0});
    }
    const LinkMeans plain_means = LinkMeans::of(g);
    if (plain)
    {
        const auto t = detail::chi_triples(p, plain_means);
        triples.insert(triples.end(), t.begin(), t.end());
    }
    const auto setup = JointSetup::from(p, p.d_rb, g.ue.d_ub, g.ue.theta_u);
    const auto J = laplace_multi(p, setup, triples, opt.laplace);

    std::vector<ScExpectations> out;
    for (std::size_t i = 0; i < betas.size(); ++i)
    {
        auto r = detail::sc_direct(p, g, betas[i], opt);
        const std::span<const double> Ji(J.data() + i * per, per);
        r.chi = detail::assemble_chi(p, g, means[i], Ji, opt);
        r.e_ur_y = r.chi.e_ur;
        const auto sc = ScScale::of(p.theta, betas[i]);
        const double g_first = detail::scaled(g.gamma_ub, sc.m1);
        if (g_first > 0.0 && means[i].ur > 0.0)
            r.p12_relay = std::exp(-p.theta / g_first - p.theta / means[i].ur) * Ji[detail::chi_triple_count];
        out.push_back(r);
    }
    if (plain)
        *plain = detail::assemble_chi(p, g, plain_means,
                                      std::span<const double>(J.data() + betas.size() * per, detail::chi_triple_count),
                                      opt);
    return out;
}

inline ScExpectations sc_probs(const NetworkParams &p, const LinkGeometry &g, double beta, const AnalyticOptions &opt = {})
{
    const double b[1] = {beta};
    return sc_probs_many(p, g, b, opt)[0];
}

/// Throughput/energy of an SC scheme at a fixed split, from its expectations
/// (formulas as printed: a lone first stream earns one packet only in the
/// relaying schemes).
inline SchemeValue sc_scheme_value(const NetworkParams &p, const ScExpectations &e, Protocol proto,
                                   FeedbackEnergy fe = FeedbackEnergy::AsPrinted)
{
    const double T = p.slot_T;
    SchemeValue v;
    v.cost = 2.0 * p.Pt * T;
    if (proto == Protocol::Basic)
    {
        v.throughput = 4.0 * e.e_ub_y;
        return v;
    }
    const auto &x = e.chi;
    const double base = e.e_ub_x + x.e_ub + x.e_ur_rb - x.e_ur_ub + x.e_ur_ubi;
    const double sel = base + x.e_ub1 - x.e_ub1_ur_rb;
    const double fdb = sel - x.e_ub1_ur_ub2i + x.e_ub1_ur_ub2;
    double relay_prob = x.e_ur;
    switch (proto)
    {
    case Protocol::BaselineRelay: v.throughput = base; break;
    case Protocol::SelectionRelay: v.throughput = sel; break;
    default:
        v.throughput = fdb;
        relay_prob = fe == FeedbackEnergy::AsPrinted ? x.e_ur * (1.0 - x.e_ub1) : x.e_ur - x.e_ub1_ur;
        break;
    }
    v.cost += p.relay_power_actual() * T * relay_prob;
    return v;
}

// ---------------------------------------------------------------------------
// Per-position evaluation of many schemes with shared intermediate results
// ---------------------------------------------------------------------------

class PointEvaluator
{
  public:
    PointEvaluator(const NetworkParams &p, const LinkGeometry &g, const AnalyticOptions &opt = {})
        : p_(p), g_(g), opt_(opt)
    {
    }

    const ChiExpectations &chi()
    {
        if (!chi_)
            chi_ = chi_expectations(p_, g_, opt_);
        return *chi_;
    }

    /// Direct-link only expectations (cheap: no relay transforms).
    double e_ub()
    {
        if (chi_)
            return chi_->e_ub;
        if (!e_ub_)
            e_ub_ = std::exp(-p_.theta / g_.gamma_ub) * detail::bs_transform(p_, g_, detail::laplace_arg(p_, g_.gamma_ub), opt_);
        return *e_ub_;
    }

    const ScExpectations &sc(double beta, bool direct_only)
    {
        auto &slot = direct_only ? sc_direct_ : sc_full_;
        auto it = slot.find(beta);
        if (it == slot.end())
        {
            if (!direct_only)
            {
                auto full = sc_probs(p_, g_, beta, opt_);
                sc_direct_.emplace(beta, full);
                it = slot.emplace(beta, std::move(full)).first;
            }
            else
                it = slot.emplace(beta, detail::sc_direct(p_, g_, beta, opt_)).first;
        }
        return it->second;
    }

    /// Computes, in one fused quadrature, every relay-dependent expectation
    /// the given schemes will need, so that evaluate() only reads caches.
    void prefetch(const std::vector<SchemeSpec> &schemes)
    {
        bool need_chi = false;
        std::vector<double> betas;
        for (const auto &s : schemes)
        {
            if (!s.relaying())
                continue;
            if (s.sc == ScMode::Off)
            {
                need_chi = need_chi || !chi_;
                continue;
            }
            const double beta = s.sc == ScMode::FixedBeta ? s.beta : sc_betas(p_, g_).beta_relay;
            if (!sc_full_.count(beta) && std::find(betas.begin(), betas.end(), beta) == betas.end())
                betas.push_back(beta);
        }
        if (betas.empty())
        {
            if (need_chi)
                chi();
            return;
        }
        ChiExpectations plain;
        auto full = sc_probs_many(p_, g_, betas, opt_, need_chi ? &plain : nullptr);
        for (std::size_t i = 0; i < betas.size(); ++i)
        {
            sc_direct_.emplace(betas[i], full[i]);
            sc_full_.emplace(betas[i], std::move(full[i]));
        }
        if (need_chi)
            chi_ = plain;
    }

    SchemeValue evaluate(const SchemeSpec &s)
    {
        s.validate();
        if (s.sc == ScMode::Off)
        {
            if (s.protocol == Protocol::Basic)
            {
                const double e = e_ub();
                return {2.0 * e, 2.0 * p_.Pt * p_.slot_T};
            }
            return scheme_value(p_, chi(), s.protocol, s.receiver, opt_.feedback_energy);
        }
        const auto betas = sc_betas(p_, g_);
        auto at = [&](Protocol proto, double beta) {
            return sc_scheme_value(p_, sc(beta, proto == Protocol::Basic), proto, opt_.feedback_energy);
        };
        switch (s.sc)
        {
        case ScMode::FixedBeta: return at(s.protocol, s.beta);
        case ScMode::OptimalBetaRelay:
            return at(s.protocol, s.protocol == Protocol::Basic ? betas.beta_direct : betas.beta_relay);
        default: {
            const auto direct = at(Protocol::Basic, betas.beta_direct);
            if (s.protocol == Protocol::Basic)
                return direct;
            const auto relayed = at(s.protocol, betas.beta_relay);
            return relayed.throughput >= direct.throughput ? relayed : direct;
        }
        }
    }

  private:
    NetworkParams p_;
    LinkGeometry g_;
    AnalyticOptions opt_;
    std::optional<ChiExpectations> chi_;
    std::optional<double> e_ub_;
    std::map<double, ScExpectations> sc_direct_;
    std::map<double, ScExpectations> sc_full_;
};

/// Throughput of one scheme at one position.
inline double throughput_scheme(const NetworkParams &p, const LinkGeometry &g, const SchemeSpec &s,
                                const AnalyticOptions &opt = {})
{
    PointEvaluator ev(p, g, opt);
    return ev.evaluate(s).throughput;
}

inline double throughput_sc(const NetworkParams &p, const LinkGeometry &g, const SchemeSpec &s,
                            const AnalyticOptions &opt = {})
{
    if (!s.uses_sc())
        throw ParameterError("throughput_sc needs a superposition-coding scheme");
    return throughput_scheme(p, g, s, opt);
}

inline double energy_per_packet(const NetworkParams &p, const LinkGeometry &g, const SchemeSpec &s,
                                const AnalyticOptions &opt = {})
{
    PointEvaluator ev(p, g, opt);
    return energy_per_packet(ev.evaluate(s));
}

// ---------------------------------------------------------------------------
// Cell averages and CDFs
// ---------------------------------------------------------------------------

namespace detail {

/// Position of the served UE for a uniform coordinate q in [0, 1): the
/// nearest-point distance has P(d <= r) = 1 - exp(-lambda pi r^2).
inline double distance_from_quantile(const NetworkParams &p, double q)
{
    return std::sqrt(-std::log1p(-q) / (p.lambda * pi));
}

/// Geometry at (d_ub, theta_u), nudging theta away from the single point
/// where UE and relay coincide.
inline LinkGeometry geometry_near(const NetworkParams &p, double d_ub, double theta_u)
{
    try
    {
        return derive_link_geometry(p, {d_ub, theta_u});
    }
    catch (const DegenerateGeometry &)
    {
        return derive_link_geometry(p, {d_ub, theta_u + 1e-9});
    }
}

} // namespace detail

struct CellAverage
{
    std::vector<SchemeValue> mean; ///< per scheme: averaged throughput and cost
    std::size_t evals = 0;

    double energy_per_packet(std::size_t i) const { return relaylab::energy_per_packet(mean.at(i)); }
};

inline quad::Tolerance cell_tolerance() { return {1e-5, 1e-7, 200'000}; }

/// Averages every scheme over the served-UE position distribution in one
/// vector-valued 2-D quadrature. The throughput is even in theta_u, so only
/// [0, pi/kr] is integrated.
inline CellAverage average_schemes(const NetworkParams &p, const std::vector<SchemeSpec> &schemes,
                                   const quad::Tolerance &tol = cell_tolerance(), const AnalyticOptions &opt = {})
{
    p.validate();
    if (!(p.lambda > 0.0))
        throw ParameterError("cell averages need lambda > 0 (the UE distance law depends on it)");
    for (const auto &s : schemes)
        s.validate();
    const std::size_t n = schemes.size();
    const double wedge = pi / p.kr;

    std::size_t used = 0;
    auto inner = [&](double theta) {
        auto f = [&](double q) {
            const double d = detail::distance_from_quantile(p, q);
            PointEvaluator ev(p, detail::geometry_near(p, d, theta), opt);
            ev.prefetch(schemes);
            std::vector<double> out(2 * n);
            for (std::size_t i = 0; i < n; ++i)
            {
                const auto v = ev.evaluate(schemes[i]);
                out[2 * i] = v.throughput;
                out[2 * i + 1] = v.cost;
            }
            return out;
        };
        quad::Tolerance t = tol;
        t.max_evals = tol.max_evals > used + 1000 ? tol.max_evals - used : 1000;
        // Breakpoints concentrate effort where UEs move past the relay.
        std::vector<double> breaks{0.0};
        const double q_relay = -std::expm1(-p.lambda * pi * p.d_rb * p.d_rb);
        for (double q : {0.5 * q_relay, q_relay, 0.5 * (1.0 + q_relay), 0.9, 0.99})
            if (q > breaks.back() + 1e-6 && q < 1.0)
                breaks.push_back(q);
        breaks.push_back(1.0);
        auto res = quad::integrate(f, std::span<const double>(breaks), t);
        used += res.evals;
        if (used > tol.max_evals)
            throw NumericError(NumericError::Kind::BudgetExhausted, "cell average evaluation budget exhausted");
        return res.value;
    };
    quad::Tolerance outer = tol;
    outer.max_evals = std::numeric_limits<std::size_t>::max();
    auto res = quad::integrate(inner, 0.0, wedge, outer);

    CellAverage avg;
    avg.evals = used;
    avg.mean.resize(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        avg.mean[i].throughput = res.value[2 * i] / wedge;
        avg.mean[i].cost = res.value[2 * i + 1] / wedge;
    }
    return avg;
}

inline double average_throughput(const NetworkParams &p, const SchemeSpec &s,
                                 const quad::Tolerance &tol = cell_tolerance(), const AnalyticOptions &opt = {})
{
    return average_schemes(p, {s}, tol, opt).mean[0].throughput;
}

struct CdfPoint
{
    double threshold = 0.0;
    double prob = 0.0;
};

using CdfCurve = std::vector<CdfPoint>;

/// Empirical CDF of weighted samples at the given thresholds (P[T <= x]).
inline CdfCurve weighted_cdf(std::vector<std::pair<double, double>> samples, std::span<const double> thresholds)
{
    std::sort(samples.begin(), samples.end());
    double total = 0.0;
    for (const auto &s : samples)
        total += s.second;
    CdfCurve curve;
    std::size_t i = 0;
    double acc = 0.0;
    for (double x : thresholds)
    {
        while (i < samples.size() && samples[i].first <= x)
            acc += samples[i++].second;
        curve.push_back({x, total > 0.0 ? std::min(1.0, acc / total) : 0.0});
    }
    return curve;
}

struct CdfGrid
{
    std::size_t n_radial = 100;
    std::size_t n_angular = 12;
};

/// Per-position throughputs on a midpoint grid that is uniform in the
/// distance quantile and the angle, so every sample has equal weight.
inline std::vector<std::vector<double>> position_throughputs(const NetworkParams &p, const std::vector<SchemeSpec> &schemes,
                                                             const CdfGrid &grid = {}, const AnalyticOptions &opt = {})
{
    p.validate();
    if (grid.n_radial == 0 || grid.n_angular == 0)
        throw ParameterError("CDF grid must be non-empty");
    std::vector<std::vector<double>> out(schemes.size());
    const double wedge = pi / p.kr;
    for (std::size_t i = 0; i < grid.n_radial; ++i)
    {
        const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(grid.n_radial);
        const double d = detail::distance_from_quantile(p, q);
        for (std::size_t j = 0; j < grid.n_angular; ++j)
        {
            const double theta = wedge * (static_cast<double>(j) + 0.5) / static_cast<double>(grid.n_angular);
            PointEvaluator ev(p, detail::geometry_near(p, d, theta), opt);
            ev.prefetch(schemes);
            for (std::size_t k = 0; k < schemes.size(); ++k)
                out[k].push_back(ev.evaluate(schemes[k]).throughput);
        }
    }
    return out;
}

inline CdfCurve throughput_cdf(const NetworkParams &p, const SchemeSpec &s, std::span<const double> thresholds,
                               const CdfGrid &grid = {}, const AnalyticOptions &opt = {})
{
    const auto values = position_throughputs(p, {s}, grid, opt);
    std::vector<std::pair<double, double>> samples;
    for (double v : values[0])
        samples.emplace_back(v, 1.0);
    return weighted_cdf(std::move(samples), thresholds);
}

} // namespace relaylab
