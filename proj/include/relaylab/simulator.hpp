// SPDX-License-Identifier: Apache-2.0
#pragma once

// Monte Carlo engine: explicit interferer deployments, per-link fading and
// the slot-pair state machines of every scheme. It shares only the domain
// types with the analytic engine.
//
// Frame: BS at the origin, serving relay at (d_rb, 0) with its antenna
// pointing along +x, served UE at polar angle theta_u.

#include "analytic.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "quad.hpp"
#include "rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string_view>
#include <variant>
#include <vector>

namespace relaylab {

enum class DeploymentModel
{
    UePPP,     ///< UEs form a PPP; each BS serves its nearest UE
    BsVoronoi, ///< BSs form a PPP; one UE uniformly placed in every Voronoi cell
};

/// How a superposition-coded slot is credited.
enum class ScCounting
{
    AsPrinted, ///< the closed-form convention: Basic earns only when both streams decode
    PerPacket, ///< every distinct decoded packet counts once
};

struct Point
{
    double x = 0.0;
    double y = 0.0;
};

// ---------------------------------------------------------------------------
// Window truncation
// ---------------------------------------------------------------------------

/// Interferers are drawn explicitly within `radius` of the BS; farther ones
/// only contribute their (deterministic) mean interference. The radius is at
/// least 5/sqrt(lambda) and large enough for the standard deviation of the
/// neglected fluctuation to stay below 1% of the noise power.
struct Truncation
{
    double radius = 0.0;
    double tail_bs = 0.0;    ///< mean interference at the BS from beyond the radius [W]
    double tail_relay = 0.0; ///< same at the serving relay [W]
};

inline Truncation truncation(const NetworkParams &p)
{
    p.validate();
    Truncation tr;
    if (p.lambda == 0.0)
        return tr;
    const double ptA = p.Pt * p.A;
    const double g_max = std::max(p.rx_pattern_bs.peak(), p.rx_pattern_relay.peak());
    const double a = p.alpha;
    // Var(tail) <= 2 * 2 pi lambda (ptA g)^2 R^(2-2a) / (2a-2) <= (0.01 N0)^2
    const double var_coef = 4.0 * pi * p.lambda * ptA * ptA * g_max * g_max / (2.0 * a - 2.0);
    const double r_var = std::pow(var_coef / (1e-4 * p.N0 * p.N0), 1.0 / (2.0 * a - 2.0));
    tr.radius = std::max({5.0 / std::sqrt(p.lambda), r_var, 2.0 * p.d_rb});

    // Mean BS antenna gain over a uniformly distributed arrival angle.
    double bs_gain = 1.0;
    if (!p.rx_pattern_bs.omnidirectional())
        bs_gain = quad::integrate([&](double t) { return antenna_gain(p.rx_pattern_bs, t); }, -pi, pi).value /
                  (2.0 * pi);
    tr.tail_bs = 2.0 * pi * p.lambda * ptA * std::pow(tr.radius, 2.0 - a) / (a - 2.0) * bs_gain;

    quad::PolarDomain dom;
    dom.r0 = tr.radius;
    dom.tail_power = 1.0 / (a - 2.0);
    dom.theta_breaks = {0.0, pi};
    const double d = p.d_rb;
    auto mean_relay = [&](double r, double th) {
        const double dx = r * std::cos(th) - d;
        const double dy = r * std::sin(th);
        const double rho = std::hypot(dx, dy);
        return p.lambda * ptA * antenna_gain_cos(p.rx_pattern_relay, p.arrival == ArrivalAngle::FoldedArcsin
                                                                         ? std::abs(dx / rho)
                                                                         : dx / rho) *
               std::pow(rho, -a);
    };
    tr.tail_relay = 2.0 * quad::integrate_polar(mean_relay, dom, {1e-8, 1e-30, 1'000'000}).value;
    return tr;
}

// ---------------------------------------------------------------------------
// Deployments
// ---------------------------------------------------------------------------

struct Deployment
{
    DeploymentModel model = DeploymentModel::UePPP;
    Point ue;
    std::vector<Point> interferers;
    std::vector<Point> relays; ///< relays[0] is the serving relay at (d_rb, 0)
    double tail_bs = 0.0;
    double tail_relay = 0.0;

    UePolar ue_polar() const { return {std::hypot(ue.x, ue.y), std::atan2(ue.y, ue.x)}; }
};

namespace detail {

inline Point rotate(Point p, double angle)
{
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

inline void place_relays(const NetworkParams &p, Deployment &dep)
{
    dep.relays.clear();
    for (int j = 0; j < p.kr; ++j)
    {
        const double a = 2.0 * pi * j / p.kr;
        dep.relays.push_back({p.d_rb * std::cos(a), p.d_rb * std::sin(a)});
    }
}

/// Rotates the deployment so that the relay angularly nearest to the UE
/// lies on the +x axis (relays sit at angles 2 pi j / kr).
inline void align_to_serving_relay(const NetworkParams &p, Deployment &dep)
{
    const double phi = std::atan2(dep.ue.y, dep.ue.x);
    const double step = 2.0 * pi / p.kr;
    const double nearest = step * std::round(phi / step);
    dep.ue = rotate(dep.ue, -nearest);
    for (auto &z : dep.interferers)
        z = rotate(z, -nearest);
    place_relays(p, dep);
}

/// Uniform point in the disk of radius r around c.
inline Point uniform_in_disk(Xoshiro256pp &rng, Point c, double r)
{
    const double rad = r * std::sqrt(rng.uniform());
    const double ang = 2.0 * pi * rng.uniform();
    return {c.x + rad * std::cos(ang), c.y + rad * std::sin(ang)};
}

/// Index of the 60-degree sector [60k, 60k + 60) containing direction (dx, dy).
inline std::size_t sector60(double dx, double dy)
{
    constexpr double r3 = 1.7320508075688772;
    if (dy < 0.0 || (dy == 0.0 && dx < 0.0))
    {
        dx = -dx;
        dy = -dy;
        return 3 + (dy < r3 * dx ? 0 : (dy <= -r3 * dx ? 2 : 1));
    }
    return dy < r3 * dx ? 0 : (dy <= -r3 * dx ? 2 : 1);
}

/// Uniform grid over the square [-extent, extent]^2 for neighbour queries.
/// Query points must lie inside the square.
class PointGrid
{
  public:
    PointGrid(const std::vector<Point> &pts, double extent, double cell) : pts_(pts), cell_(cell), origin_(-extent)
    {
        n_ = std::max(1, static_cast<int>(std::ceil(2.0 * extent / cell)));
        cells_.assign(static_cast<std::size_t>(n_) * n_, {});
        for (std::size_t i = 0; i < pts.size(); ++i)
            cells_[index(cell_of(pts[i].x), cell_of(pts[i].y))].push_back(i);
    }

    /// Visits the points in rings of cells around z, calling f(i, d2) for
    /// each. After ring k, done(k * cell) is asked whether to stop: every
    /// point not yet visited is at least k * cell away from z.
    template <class F, class Done> void search(Point z, F &&f, Done &&done) const
    {
        const int cx = cell_of(z.x), cy = cell_of(z.y);
        for (int ring = 0; ring <= n_; ++ring)
        {
            for (int ix = std::max(0, cx - ring); ix <= std::min(n_ - 1, cx + ring); ++ix)
            {
                const bool edge = ix == cx - ring || ix == cx + ring;
                for (int iy = std::max(0, cy - ring); iy <= std::min(n_ - 1, cy + ring); ++iy)
                {
                    if (!edge && iy != cy - ring && iy != cy + ring)
                        continue;
                    for (std::size_t i : cells_[index(ix, iy)])
                        f(i, sq(pts_[i].x - z.x) + sq(pts_[i].y - z.y));
                }
            }
            if (done(ring * cell_))
                return;
        }
    }

    /// Index of the nearest point to z; ties resolved by the lower index.
    std::size_t nearest(Point z) const
    {
        std::size_t best = pts_.size();
        double best_d2 = std::numeric_limits<double>::infinity();
        search(
            z,
            [&](std::size_t i, double d2) {
                if (d2 < best_d2 || (d2 == best_d2 && i < best))
                {
                    best_d2 = d2;
                    best = i;
                }
            },
            [&](double reach) { return best_d2 <= reach * reach; });
        return best;
    }

  private:
    static double sq(double v) { return v * v; }
    int cell_of(double v) const { return std::clamp(static_cast<int>(std::floor((v - origin_) / cell_)), 0, n_ - 1); }
    std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(ix) * n_ + iy; }

    const std::vector<Point> &pts_;
    double cell_;
    double origin_;
    int n_ = 1;
    std::vector<std::vector<std::size_t>> cells_;
};

} // namespace detail

/// Interferers of a UE-PPP deployment conditioned on the served UE lying at
/// distance d_ub: a PPP on the annulus [d_ub, radius].
inline Deployment sample_deployment_at(const NetworkParams &p, const UePolar &ue, const Truncation &tr,
                                       Xoshiro256pp &rng)
{
    Deployment dep;
    dep.model = DeploymentModel::UePPP;
    dep.ue = {ue.d_ub * std::cos(ue.theta_u), ue.d_ub * std::sin(ue.theta_u)};
    detail::place_relays(p, dep);
    dep.tail_bs = tr.tail_bs;
    dep.tail_relay = tr.tail_relay;
    const double r_in = ue.d_ub;
    const double r_out = std::max(tr.radius, r_in);
    const double mean = p.lambda * pi * (r_out * r_out - r_in * r_in);
    if (mean <= 0.0)
        return dep;
    std::poisson_distribution<long> count(mean);
    const long n = count(rng);
    dep.interferers.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i)
    {
        const double r = std::sqrt(r_in * r_in + rng.uniform() * (r_out * r_out - r_in * r_in));
        const double a = 2.0 * pi * rng.uniform();
        dep.interferers.push_back({r * std::cos(a), r * std::sin(a)});
    }
    return dep;
}

/// Full deployment around the BS at the origin.
///  - UePPP: a UE PPP in the window; the nearest UE is served, the rest
///    interfere (an empty draw is resampled).
///  - BsVoronoi: a BS PPP plus the origin; every BS within the window serves
///    one UE placed uniformly in its Voronoi cell (rejection sampling inside
///    a disk that provably contains the cell).
inline Deployment sample_deployment(const NetworkParams &p, DeploymentModel model, const Truncation &tr,
                                    Xoshiro256pp &rng)
{
    if (!(p.lambda > 0.0))
        throw ParameterError("sampling a deployment needs lambda > 0");
    Deployment dep;
    dep.model = model;
    dep.tail_bs = tr.tail_bs;
    dep.tail_relay = tr.tail_relay;
    const double R = tr.radius;

    if (model == DeploymentModel::UePPP)
    {
        std::poisson_distribution<long> count(p.lambda * pi * R * R);
        long n = 0;
        while (n == 0)
            n = count(rng);
        std::vector<Point> pts;
        pts.reserve(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i)
            pts.push_back(detail::uniform_in_disk(rng, {0.0, 0.0}, R));
        std::size_t nearest = 0;
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (std::hypot(pts[i].x, pts[i].y) < std::hypot(pts[nearest].x, pts[nearest].y))
                nearest = i;
        dep.ue = pts[nearest];
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(nearest));
        dep.interferers = std::move(pts);
        detail::align_to_serving_relay(p, dep);
        return dep;
    }

    // BS PPP over the window plus a margin so that cells near the window
    // edge are still bounded by their true neighbours.
    const double margin = 4.0 / std::sqrt(p.lambda);
    const double W = R + margin;
    std::poisson_distribution<long> count(p.lambda * pi * W * W);
    const long n_bs = count(rng);
    std::vector<Point> bs{{0.0, 0.0}};
    for (long i = 0; i < n_bs; ++i)
        bs.push_back(detail::uniform_in_disk(rng, {0.0, 0.0}, W));
    const detail::PointGrid grid(bs, W, 1.0 / std::sqrt(p.lambda));

    // Cell of BS b restricted to a 60-degree sector around b lies within the
    // distance of the nearest other BS in that sector. Sectors without a
    // neighbour are bounded by the simulated disk, and samples outside it
    // are rejected.
    auto ue_in_cell = [&](std::size_t b) {
        const double far = W + std::hypot(bs[b].x, bs[b].y);
        std::array<double, 6> reach2;
        reach2.fill(std::numeric_limits<double>::infinity());
        grid.search(
            bs[b],
            [&](std::size_t j, double d2) {
                if (j != b)
                {
                    auto &r = reach2[detail::sector60(bs[j].x - bs[b].x, bs[j].y - bs[b].y)];
                    r = std::min(r, d2);
                }
            },
            [&](double reach) { return *std::max_element(reach2.begin(), reach2.end()) <= reach * reach; });
        for (auto &r : reach2)
            r = std::min(r, far * far);
        std::array<double, 6> reach;
        for (std::size_t k = 0; k < 6; ++k)
            reach[k] = std::sqrt(reach2[k]);
        std::array<double, 6> cum;
        double acc = 0.0;
        for (std::size_t k = 0; k < 6; ++k)
            cum[k] = acc += reach[k] * reach[k];
        while (true)
        {
            const double u = rng.uniform() * acc;
            const auto k = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
                5, std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()));
            const double rad = reach[k] * std::sqrt(rng.uniform());
            const double ang = (static_cast<double>(k) + rng.uniform()) * (pi / 3.0);
            const Point z{bs[b].x + rad * std::cos(ang), bs[b].y + rad * std::sin(ang)};
            if (std::hypot(z.x, z.y) <= W && grid.nearest(z) == b)
                return z;
        }
    };

    dep.ue = ue_in_cell(0);
    for (std::size_t b = 1; b < bs.size(); ++b)
        if (std::hypot(bs[b].x, bs[b].y) <= R)
            dep.interferers.push_back(ue_in_cell(b));
    detail::align_to_serving_relay(p, dep);
    return dep;
}

// ---------------------------------------------------------------------------
// One slot pair
// ---------------------------------------------------------------------------

/// Random state of one slot pair: normalized interference (I / N0) and the
/// unit-mean fades of the four signal links.
struct Realization
{
    double i_r = 0.0;  ///< at the relay, slot 1
    double i_b1 = 0.0; ///< at the BS, slot 1
    double i_b2 = 0.0; ///< at the BS, slot 2
    double h_ub1 = 0.0;
    double h_ub2 = 0.0;
    double h_ur = 0.0;
    double h_rb = 0.0;
};

/// Draws fades and interference for a deployment. Every interferer has its
/// own fade towards the relay, the BS in slot 1 and the BS in slot 2.
inline Realization draw_realization(const NetworkParams &p, const Deployment &dep, Xoshiro256pp &rng)
{
    Realization r;
    r.h_ub1 = rng.exponential();
    r.h_ub2 = rng.exponential();
    r.h_ur = rng.exponential();
    r.h_rb = rng.exponential();

    const double ptA = p.Pt * p.A;
    const double half_alpha = 0.5 * p.alpha;
    const Point relay{p.d_rb, 0.0};
    const double d_ue = std::hypot(dep.ue.x, dep.ue.y);
    const double cu = d_ue > 0.0 ? dep.ue.x / d_ue : 1.0;
    const double su = d_ue > 0.0 ? dep.ue.y / d_ue : 0.0;
    const bool bs_dir = !p.rx_pattern_bs.omnidirectional();
    const bool relay_dir = !p.rx_pattern_relay.omnidirectional();

    double i_r = 0.0, i_b1 = 0.0, i_b2 = 0.0;
    for (const auto &z : dep.interferers)
    {
        const double r2 = z.x * z.x + z.y * z.y;
        double g_b = ptA * std::pow(r2, -half_alpha);
        if (bs_dir)
        {
            const double r = std::sqrt(r2);
            g_b *= antenna_gain_cos(p.rx_pattern_bs, (z.x * cu + z.y * su) / r);
        }
        const double dx = z.x - relay.x, dy = z.y - relay.y;
        const double rho2 = dx * dx + dy * dy;
        double g_r = ptA * std::pow(rho2, -half_alpha);
        if (relay_dir)
        {
            double c = dx / std::sqrt(rho2);
            if (p.arrival == ArrivalAngle::FoldedArcsin)
                c = std::abs(c);
            g_r *= antenna_gain_cos(p.rx_pattern_relay, c);
        }
        i_r += rng.exponential() * g_r;
        i_b1 += rng.exponential() * g_b;
        i_b2 += rng.exponential() * g_b;
    }
    r.i_r = (i_r + dep.tail_relay) / p.N0;
    r.i_b1 = (i_b1 + dep.tail_bs) / p.N0;
    r.i_b2 = (i_b2 + dep.tail_bs) / p.N0;
    return r;
}

/// Decode outcome of every link in one realization.
struct LinkFlags
{
    bool ub1 = false;    ///< BS decodes the UE in slot 1
    bool ur = false;     ///< relay decodes the UE in slot 1
    bool ub2 = false;    ///< BS decodes the UE alone in slot 2
    bool rb = false;     ///< BS decodes the relay in slot 2 while the UE also transmits (SIC)
    bool ub2i = false;   ///< BS decodes the UE in slot 2 while the relay also transmits (SIC)
    bool rb0_lo = false; ///< relay alone in slot 2, other cells active
    bool rb0_hi = false; ///< relay alone in slot 2, interference free
    bool ub2_hi = false; ///< UE alone in slot 2, interference free
};

/// Two-signal SIC at one receiver: decode the signal whose SINR (treating
/// the other as interference) clears theta, cancel it, then try the other.
inline std::pair<bool, bool> sic_decode(double p1, double p2, double noise, double theta)
{
    if (p1 >= theta * (p2 + noise))
        return {true, p2 >= theta * noise};
    if (p2 >= theta * (p1 + noise))
        return {p1 >= theta * noise, true};
    return {false, false};
}

inline LinkFlags decode_links(const NetworkParams &p, const LinkGeometry &g, const Realization &r)
{
    const double th = p.theta;
    LinkFlags f;
    const double pu1 = r.h_ub1 * g.gamma_ub;
    const double pu2 = r.h_ub2 * g.gamma_ub;
    const double pur = r.h_ur * g.gamma_ur;
    const double prb = r.h_rb * g.gamma_rb;
    f.ub1 = pu1 >= th * (r.i_b1 + 1.0);
    f.ur = pur >= th * (r.i_r + 1.0);
    f.ub2 = pu2 >= th * (r.i_b2 + 1.0);
    const auto [ue, relay] = sic_decode(pu2, prb, r.i_b2 + 1.0, th);
    f.ub2i = ue;
    f.rb = relay;
    f.rb0_lo = prb >= th * (r.i_b2 + 1.0);
    f.rb0_hi = prb >= th;
    f.ub2_hi = pu2 >= th;
    return f;
}

/// Superposition-coded stream decoding for split beta.
struct ScFlags
{
    double beta = 0.0;
    bool first_b1 = false; ///< BS decodes the stronger stream in slot 1
    bool both_b1 = false;  ///< BS decodes both streams in slot 1
    bool both_b2 = false;  ///< BS decodes both streams in slot 2 (Basic only)
    bool first_b2 = false;
    bool both_r = false;   ///< relay decodes both streams
    bool first_r = false;
};

inline ScFlags decode_sc(const NetworkParams &p, const LinkGeometry &g, const Realization &r, double beta)
{
    const auto sc = ScScale::of(p.theta, beta);
    const double th = p.theta;
    ScFlags f;
    f.beta = beta;
    auto dec = [&](double h, double gamma, double i, double m) {
        return std::isfinite(m) && h * gamma >= th * m * (i + 1.0);
    };
    f.first_b1 = dec(r.h_ub1, g.gamma_ub, r.i_b1, sc.m1);
    f.both_b1 = dec(r.h_ub1, g.gamma_ub, r.i_b1, sc.m);
    f.first_b2 = dec(r.h_ub2, g.gamma_ub, r.i_b2, sc.m1);
    f.both_b2 = dec(r.h_ub2, g.gamma_ub, r.i_b2, sc.m);
    f.first_r = dec(r.h_ur, g.gamma_ur, r.i_r, sc.m1);
    f.both_r = dec(r.h_ur, g.gamma_ur, r.i_r, sc.m);
    return f;
}

struct SlotPairOutcome
{
    int packets_delivered = 0;
    double energy_spent = 0.0; ///< joules
    int ue_slots = 0;          ///< slots in which the UE transmitted
    bool relay_transmitted = false;
    LinkFlags flags;
    std::optional<ScFlags> sc;
    double i_r = 0.0;
    double i_b1 = 0.0;
    double i_b2 = 0.0;
};

struct SimOptions
{
    ScCounting counting = ScCounting::AsPrinted;
    /// Relay split uses the realized interference ratio (an upper bound that
    /// needs knowledge the UE does not have).
    bool genie_beta = false;
};

namespace detail {

inline double relay_beta(const NetworkParams &p, const LinkGeometry &g, const Realization &r, bool genie)
{
    if (!genie)
        return sc_betas(p, g).beta_relay;
    LinkGeometry scaled = g;
    scaled.gamma_ur = g.gamma_ur * (r.i_b1 + 1.0) / (r.i_r + 1.0);
    return sc_betas(p, scaled).beta_relay;
}

} // namespace detail

/// Executes one slot pair of `scheme` on a realization. `select_relay`
/// carries the per-position decision of ScMode::OptimalBetaSelect (true:
/// relayed SC at the relay split, false: direct SC at the direct split).
inline SlotPairOutcome play_slot_pair(const NetworkParams &p, const SchemeSpec &scheme, const LinkGeometry &g,
                                      const Realization &r, const SimOptions &opt = {},
                                      std::optional<bool> select_relay = std::nullopt)
{
    SlotPairOutcome o;
    o.flags = decode_links(p, g, r);
    o.i_r = r.i_r;
    o.i_b1 = r.i_b1;
    o.i_b2 = r.i_b2;
    const auto &f = o.flags;
    const double ue_slot = p.Pt * p.slot_T;
    const double relay_slot = p.relay_power_actual() * p.slot_T;
    auto finish = [&](int packets, int ue_slots, bool relay) {
        o.packets_delivered = packets;
        o.ue_slots = ue_slots;
        o.relay_transmitted = relay;
        o.energy_spent = ue_slots * ue_slot + (relay ? relay_slot : 0.0);
        return o;
    };

    if (scheme.sc == ScMode::Off)
    {
        if (scheme.protocol == Protocol::Basic)
            return finish(int(f.ub1) + int(f.ub2), 2, false);
        if (scheme.receiver == Receiver::Sic)
        {
            const bool relay = scheme.protocol == Protocol::FeedbackRelay ? f.ur && !f.ub1 : f.ur;
            const int slot2 = relay ? int(f.ub2i) : int(f.ub2);
            const bool relayed = relay && f.rb;
            int slot1 = int(relayed);
            if (scheme.protocol != Protocol::BaselineRelay)
                slot1 = int(f.ub1 || relayed);
            return finish(slot1 + slot2, 2, relay);
        }
        const bool upper = scheme.receiver == Receiver::NoSicUpperBound;
        const bool rb0 = upper ? f.rb0_hi : f.rb0_lo;
        const bool ub2 = upper ? f.ub2_hi : f.ub2;
        switch (scheme.protocol)
        {
        case Protocol::BaselineRelay: return finish(int(f.ur && rb0), 1, f.ur);
        case Protocol::SelectionRelay: return finish(int(f.ub1 || (f.ur && rb0)), 1, f.ur);
        default:
            if (f.ub1)
                return finish(1 + int(ub2), 2, false);
            return finish(int(f.ur && rb0), 1, f.ur);
        }
    }

    // Superposition coding.
    const auto betas = sc_betas(p, g);
    Protocol proto = scheme.protocol;
    double beta = scheme.beta;
    switch (scheme.sc)
    {
    case ScMode::FixedBeta: break;
    case ScMode::OptimalBetaRelay:
        beta = proto == Protocol::Basic ? betas.beta_direct : detail::relay_beta(p, g, r, opt.genie_beta);
        break;
    default:
        if (proto != Protocol::Basic && !select_relay.has_value())
            throw ParameterError("optimal-select superposition needs a per-position decision");
        if (proto == Protocol::Basic || !*select_relay)
        {
            proto = Protocol::Basic;
            beta = betas.beta_direct;
        }
        else
            beta = detail::relay_beta(p, g, r, opt.genie_beta);
        break;
    }
    o.sc = decode_sc(p, g, r, beta);
    const auto &s = *o.sc;
    const bool per_packet = opt.counting == ScCounting::PerPacket;

    if (proto == Protocol::Basic)
    {
        const int slot1 = per_packet ? int(s.first_b1) + int(s.both_b1) : 2 * int(s.both_b1);
        const int slot2 = per_packet ? int(s.first_b2) + int(s.both_b2) : 2 * int(s.both_b2);
        return finish(slot1 + slot2, 2, false);
    }
    const bool relay = proto == Protocol::FeedbackRelay ? s.both_r && !s.both_b1 : s.both_r;
    const bool forwarded = relay && f.rb;
    const int slot2 = relay ? int(f.ub2i) : int(f.ub2);
    int first = 0, second = 0;
    if (per_packet)
    {
        first = int(s.first_b1);
        second = int(s.both_b1 || forwarded);
    }
    else
    {
        first = int(s.first_b1 && !s.both_b1);
        second = proto == Protocol::BaselineRelay ? int(forwarded) : int(s.both_b1 || forwarded);
    }
    return finish(first + second + slot2, 2, relay);
}

/// run_slot_pair on a deployment: draws the realization, then plays it.
inline SlotPairOutcome run_slot_pair(const NetworkParams &p, const SchemeSpec &scheme, const Deployment &dep,
                                     Xoshiro256pp &rng, const SimOptions &opt = {},
                                     std::optional<bool> select_relay = std::nullopt)
{
    const auto g = derive_link_geometry(p, dep.ue_polar());
    const auto r = draw_realization(p, dep, rng);
    return play_slot_pair(p, scheme, g, r, opt, select_relay);
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

struct Stat
{
    double mean = 0.0;
    double se = 0.0;
};

/// Indicator products estimated alongside the schemes; the names match the
/// analytic ChiExpectations fields ("_lo"/"_hi": no-SIC slot 2 with/without
/// other-cell interference).
inline constexpr std::array<std::string_view, 16> chi_names{
    "e_ub1",         "e_ub",          "e_ur",          "e_ur_rb",        "e_ur_ub",        "e_ur_ubi",
    "e_ub1_ur",      "e_ub1_ur_rb",   "e_ub1_ur_ub2i", "e_ub1_ur_ub2",   "e_ur_rb0_lo",    "e_ur_rb0_hi",
    "e_ub1_ur_rb0_lo", "e_ub1_ur_rb0_hi", "e_ub1_ub2_lo", "e_ub1_ub2_hi"};

inline std::array<double, 16> chi_as_array(const ChiExpectations &x)
{
    return {x.e_ub1,        x.e_ub,           x.e_ur,           x.e_ur_rb,      x.e_ur_ub,     x.e_ur_ubi,
            x.e_ub1_ur,     x.e_ub1_ur_rb,    x.e_ub1_ur_ub2i,  x.e_ub1_ur_ub2, x.e_ur_rb0[0], x.e_ur_rb0[1],
            x.e_ub1_ur_rb0[0], x.e_ub1_ur_rb0[1], x.e_ub1_ub2[0], x.e_ub1_ub2[1]};
}

inline std::array<double, 16> chi_indicators(const LinkFlags &f)
{
    auto b = [](bool v) { return v ? 1.0 : 0.0; };
    return {b(f.ub1),
            b(f.ub2),
            b(f.ur),
            b(f.ur && f.rb),
            b(f.ur && f.ub2),
            b(f.ur && f.ub2i),
            b(f.ub1 && f.ur),
            b(f.ub1 && f.ur && f.rb),
            b(f.ub1 && f.ur && f.ub2i),
            b(f.ub1 && f.ur && f.ub2),
            b(f.ur && f.rb0_lo),
            b(f.ur && f.rb0_hi),
            b(f.ub1 && f.ur && f.rb0_lo),
            b(f.ub1 && f.ur && f.rb0_hi),
            b(f.ub1 && f.ub2),
            b(f.ub1 && f.ub2_hi)};
}

/// Superposition-coding stream probabilities for one split.
inline constexpr std::array<std::string_view, 5> sc_names{"p_first", "e_ub_x", "e_ub_y", "e_ur_y", "p12_relay"};

struct FixedPosition
{
    UePolar ue;
};

struct CellAverageMode
{
    DeploymentModel model = DeploymentModel::UePPP;
};

using EstimateMode = std::variant<FixedPosition, CellAverageMode>;

struct McOptions
{
    std::size_t n_trials = 100'000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    SimOptions sim{};
    /// Interferer positions drawn once and reused by every trial (fading
    /// still redrawn). Not an estimator of the analytic expectations.
    bool frozen = false;
    /// If set, also estimate the SC stream probabilities at this split.
    std::optional<double> sc_probe_beta;
};

struct McSchemeEstimate
{
    SchemeSpec scheme;
    Stat throughput;
    Stat energy; ///< joules per delivered packet (ratio of sums)
    double total_energy = 0.0;
    std::uint64_t packets = 0;
    std::uint64_t ue_slots = 0;
    std::uint64_t relay_transmissions = 0;
};

struct McEstimate
{
    std::vector<McSchemeEstimate> schemes;
    std::array<Stat, 16> chi{};
    std::array<Stat, 5> sc{};
    std::size_t n_trials = 0;
    std::uint64_t seed = 0;
};

namespace detail {

/// Per-block sums, merged in block order.
struct Accumulator
{
    std::size_t n = 0;
    std::vector<double> sum, sumsq;
    std::vector<double> cross; ///< per scheme: sum of energy * packets
    std::vector<std::uint64_t> packets, ue_slots, relay_tx;

    explicit Accumulator(std::size_t channels = 0, std::size_t schemes = 0)
        : sum(channels), sumsq(channels), cross(schemes), packets(schemes), ue_slots(schemes), relay_tx(schemes)
    {
    }

    void add(std::size_t k, double v)
    {
        sum[k] += v;
        sumsq[k] += v * v;
    }

    void merge(const Accumulator &o)
    {
        n += o.n;
        for (std::size_t k = 0; k < sum.size(); ++k)
        {
            sum[k] += o.sum[k];
            sumsq[k] += o.sumsq[k];
        }
        for (std::size_t k = 0; k < cross.size(); ++k)
        {
            cross[k] += o.cross[k];
            packets[k] += o.packets[k];
            ue_slots[k] += o.ue_slots[k];
            relay_tx[k] += o.relay_tx[k];
        }
    }

    Stat stat(std::size_t k) const
    {
        const double nn = static_cast<double>(n);
        const double mean = sum[k] / nn;
        const double var = std::max(0.0, sumsq[k] / nn - mean * mean) * nn / std::max(1.0, nn - 1.0);
        return {mean, std::sqrt(var / nn)};
    }
};

inline constexpr std::size_t block_size = 1024;

/// Optimal-select superposition follows a position-dependent policy: use
/// relayed SC where the model predicts it beats direct SC. The policy is an
/// input to the simulator; its outcome is still simulated.
inline std::vector<std::optional<bool>> select_decisions(const NetworkParams &p, const LinkGeometry &g,
                                                         const std::vector<SchemeSpec> &schemes)
{
    std::vector<std::optional<bool>> out(schemes.size());
    std::optional<PointEvaluator> ev;
    for (std::size_t k = 0; k < schemes.size(); ++k)
    {
        const auto &s = schemes[k];
        if (s.sc != ScMode::OptimalBetaSelect || s.protocol == Protocol::Basic)
            continue;
        if (!ev)
            ev.emplace(p, g);
        const SchemeSpec direct{Protocol::Basic, Receiver::Sic, ScMode::OptimalBetaRelay, 0.0};
        const SchemeSpec relayed{s.protocol, Receiver::Sic, ScMode::OptimalBetaRelay, 0.0};
        out[k] = ev->evaluate(relayed).throughput >= ev->evaluate(direct).throughput;
    }
    return out;
}

} // namespace detail

/// Monte Carlo estimates of every scheme's throughput and energy, of the
/// link-indicator expectations and (optionally) of the SC probabilities.
/// Trial i always uses random stream i of the seed, and blocks of trials
/// are merged in index order, so the result does not depend on `threads`.
inline McEstimate estimate(const NetworkParams &p, const std::vector<SchemeSpec> &schemes, const EstimateMode &mode,
                           const McOptions &opt)
{
    p.validate();
    if (opt.n_trials < 1000)
        throw ParameterError("Monte Carlo estimates need at least 1000 trials");
    for (const auto &s : schemes)
    {
        s.validate();
        if (s.sc == ScMode::OptimalBetaSelect && s.protocol != Protocol::Basic &&
            std::holds_alternative<CellAverageMode>(mode))
            throw ParameterError("optimal-select superposition is only simulated at fixed positions");
    }
    const auto *cell = std::get_if<CellAverageMode>(&mode);
    if (cell && cell->model == DeploymentModel::BsVoronoi)
        for (const auto &s : schemes)
            if (s.protocol != Protocol::Basic || s.uses_sc())
                throw ParameterError("the Voronoi deployment model is only simulated for the Basic scheme");
    if (cell && !(p.lambda > 0.0))
        throw ParameterError("cell averages need lambda > 0");

    const auto tr = truncation(p);
    const std::size_t ns = schemes.size();
    // Channel layout: per scheme (packets, energy), then chi, then SC probes.
    const std::size_t chi0 = 2 * ns;
    const std::size_t sc0 = chi0 + chi_names.size();
    const std::size_t channels = sc0 + sc_names.size();

    std::optional<LinkGeometry> fixed_geom;
    Deployment frozen_dep;
    std::vector<std::optional<bool>> select_relay(ns);
    if (const auto *fp = std::get_if<FixedPosition>(&mode))
    {
        fixed_geom = derive_link_geometry(p, fp->ue);
        select_relay = detail::select_decisions(p, *fixed_geom, schemes);
    }
    if (opt.frozen)
    {
        auto rng = Xoshiro256pp::stream(opt.seed, std::numeric_limits<std::uint64_t>::max());
        frozen_dep = fixed_geom ? sample_deployment_at(p, std::get<FixedPosition>(mode).ue, tr, rng)
                                : sample_deployment(p, cell->model, tr, rng);
    }

    const std::size_t n_blocks = (opt.n_trials + detail::block_size - 1) / detail::block_size;
    std::vector<detail::Accumulator> blocks(n_blocks, detail::Accumulator(channels, ns));

    parallel_for(n_blocks, opt.threads, [&](std::size_t b) {
        auto &acc = blocks[b];
        const std::size_t lo = b * detail::block_size;
        const std::size_t hi = std::min(opt.n_trials, lo + detail::block_size);
        for (std::size_t i = lo; i < hi; ++i)
        {
            auto rng = Xoshiro256pp::stream(opt.seed, i);
            Deployment dep;
            if (opt.frozen)
                dep = frozen_dep;
            else if (fixed_geom)
                dep = sample_deployment_at(p, std::get<FixedPosition>(mode).ue, tr, rng);
            else
                dep = sample_deployment(p, cell->model, tr, rng);
            LinkGeometry g;
            if (fixed_geom)
                g = *fixed_geom;
            else
            {
                try
                {
                    g = derive_link_geometry(p, dep.ue_polar());
                }
                catch (const DegenerateGeometry &)
                {
                    auto ue = dep.ue_polar();
                    ue.theta_u += 1e-9;
                    g = derive_link_geometry(p, ue);
                }
            }
            const auto r = draw_realization(p, dep, rng);
            ++acc.n;
            std::optional<LinkFlags> flags;
            for (std::size_t k = 0; k < ns; ++k)
            {
                const auto o = play_slot_pair(p, schemes[k], g, r, opt.sim, select_relay[k]);
                acc.add(2 * k, o.packets_delivered);
                acc.add(2 * k + 1, o.energy_spent);
                acc.cross[k] += o.packets_delivered * o.energy_spent;
                acc.packets[k] += static_cast<std::uint64_t>(o.packets_delivered);
                acc.ue_slots[k] += static_cast<std::uint64_t>(o.ue_slots);
                acc.relay_tx[k] += o.relay_transmitted ? 1u : 0u;
                flags = o.flags;
            }
            if (!flags)
                flags = decode_links(p, g, r);
            const auto ind = chi_indicators(*flags);
            for (std::size_t k = 0; k < ind.size(); ++k)
                acc.add(chi0 + k, ind[k]);
            if (opt.sc_probe_beta)
            {
                const auto s = decode_sc(p, g, r, *opt.sc_probe_beta);
                acc.add(sc0 + 0, s.first_b1);
                acc.add(sc0 + 1, s.first_b1 && !s.both_b1);
                acc.add(sc0 + 2, s.both_b1);
                acc.add(sc0 + 3, s.both_r);
                acc.add(sc0 + 4, s.first_b1 && s.both_r);
            }
        }
    });

    detail::Accumulator total(channels, ns);
    for (const auto &b : blocks)
        total.merge(b);

    McEstimate out;
    out.n_trials = total.n;
    out.seed = opt.seed;
    const double n = static_cast<double>(total.n);
    for (std::size_t k = 0; k < ns; ++k)
    {
        McSchemeEstimate e;
        e.scheme = schemes[k];
        e.throughput = total.stat(2 * k);
        e.packets = total.packets[k];
        e.ue_slots = total.ue_slots[k];
        e.relay_transmissions = total.relay_tx[k];
        e.total_energy = static_cast<double>(e.ue_slots) * p.Pt * p.slot_T +
                         static_cast<double>(e.relay_transmissions) * p.relay_power_actual() * p.slot_T;
        const double mean_d = total.sum[2 * k] / n;
        const double mean_e = total.sum[2 * k + 1] / n;
        if (mean_d > 0.0)
        {
            const double ratio = mean_e / mean_d;
            const double var_d = total.sumsq[2 * k] / n - mean_d * mean_d;
            const double var_e = total.sumsq[2 * k + 1] / n - mean_e * mean_e;
            const double cov = total.cross[k] / n - mean_e * mean_d;
            const double var = std::max(0.0, var_e - 2.0 * ratio * cov + ratio * ratio * var_d);
            e.energy = {ratio, std::sqrt(var / n) / mean_d};
        }
        else
            e.energy = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        out.schemes.push_back(e);
    }
    for (std::size_t k = 0; k < chi_names.size(); ++k)
        out.chi[k] = total.stat(chi0 + k);
    if (opt.sc_probe_beta)
        for (std::size_t k = 0; k < sc_names.size(); ++k)
            out.sc[k] = total.stat(sc0 + k);
    return out;
}

// ---------------------------------------------------------------------------
// Throughput distribution over positions
// ---------------------------------------------------------------------------

/// Draws `n_positions` served-UE positions from the UE-PPP position law and
/// estimates each one's conditional throughput with `trials_per_position`
/// trials. Returns one vector of conditional means per scheme.
inline std::vector<std::vector<double>> conditional_throughputs(const NetworkParams &p,
                                                                const std::vector<SchemeSpec> &schemes,
                                                                std::size_t n_positions,
                                                                std::size_t trials_per_position, std::uint64_t seed,
                                                                unsigned threads = 1, const SimOptions &sim = {})
{
    p.validate();
    if (!(p.lambda > 0.0))
        throw ParameterError("position sampling needs lambda > 0");
    if (n_positions == 0 || trials_per_position == 0)
        throw ParameterError("need at least one position and one trial per position");
    const auto tr = truncation(p);
    std::vector<std::vector<double>> out(schemes.size(), std::vector<double>(n_positions));
    // Streams: positions use indices [2^62, 2^62 + n), trials of position j
    // use j * trials_per_position + i.
    constexpr std::uint64_t position_base = std::uint64_t{1} << 62;
    parallel_for(n_positions, threads, [&](std::size_t j) {
        auto prng = Xoshiro256pp::stream(seed, position_base + j);
        const double d = std::sqrt(prng.exponential() / (p.lambda * pi));
        const double theta = (2.0 * prng.uniform() - 1.0) * pi / p.kr;
        UePolar ue{d, theta};
        LinkGeometry g;
        try
        {
            g = derive_link_geometry(p, ue);
        }
        catch (const DegenerateGeometry &)
        {
            ue.theta_u += 1e-9;
            g = derive_link_geometry(p, ue);
        }
        const auto select_relay = detail::select_decisions(p, g, schemes);
        std::vector<double> sums(schemes.size(), 0.0);
        for (std::size_t i = 0; i < trials_per_position; ++i)
        {
            auto rng = Xoshiro256pp::stream(seed, j * trials_per_position + i);
            const auto dep = sample_deployment_at(p, ue, tr, rng);
            const auto r = draw_realization(p, dep, rng);
            for (std::size_t k = 0; k < schemes.size(); ++k)
                sums[k] += play_slot_pair(p, schemes[k], g, r, sim, select_relay[k]).packets_delivered;
        }
        for (std::size_t k = 0; k < schemes.size(); ++k)
            out[k][j] = sums[k] / static_cast<double>(trials_per_position);
    });
    return out;
}

/// Step CDF P[T <= x] of equally weighted samples at the given thresholds.
inline CdfCurve empirical_cdf(const std::vector<double> &samples, std::span<const double> thresholds)
{
    std::vector<std::pair<double, double>> w;
    w.reserve(samples.size());
    for (double v : samples)
        w.emplace_back(v, 1.0);
    return weighted_cdf(std::move(w), thresholds);
}

} // namespace relaylab
