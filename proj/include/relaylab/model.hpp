// SPDX-License-Identifier: Apache-2.0
#pragma once

// Domain types shared by the analytic and Monte Carlo engines: network
// parameters, antenna pattern, UE/relay geometry and scheme selection.
//
// Units: watts, meters, radians, seconds. dB/dBm only appear in the
// conversion helpers used at the configuration boundary.

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>

namespace relaylab {

inline constexpr double pi = std::numbers::pi;

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// ---------------------------------------------------------------------------
// Antenna pattern
// ---------------------------------------------------------------------------

/// Single-lobe cosine pattern ((1+cos t)/2)^k, optionally scaled by (k+1)
/// so that it integrates to the isotropic level over the sphere.
struct AntennaPattern
{
    double k = 0.0;
    bool normalized = false;

    static AntennaPattern omni() { return {}; }

    bool omnidirectional() const { return k == 0.0; }
    double peak() const { return normalized ? k + 1.0 : 1.0; }

    void validate() const
    {
        if (!(k >= 0.0) || !std::isfinite(k))
            throw ParameterError("antenna directivity exponent k must be finite and >= 0");
    }
};

/// Gain for a direction whose cosine w.r.t. boresight is `cos_theta`.
inline double antenna_gain_cos(const AntennaPattern &p, double cos_theta)
{
    if (p.k == 0.0)
        return 1.0;
    const double half = 0.5 * (1.0 + cos_theta);
    const double g = half <= 0.0 ? 0.0 : std::pow(half, p.k);
    return p.normalized ? (p.k + 1.0) * g : g;
}

inline double antenna_gain(const AntennaPattern &p, double theta) { return antenna_gain_cos(p, std::cos(theta)); }

/// Full 3 dB beamwidth of the cosine pattern. Undefined for k = 0.
inline double beamwidth_from_k(double k)
{
    if (!(k > 0.0))
        throw ParameterError("3 dB beamwidth is undefined for an omnidirectional pattern (k = 0)");
    return 2.0 * std::acos(2.0 * std::exp2(-1.0 / k) - 1.0);
}

/// Inverse of beamwidth_from_k; beamwidth must lie in (0, 2*pi).
inline double k_from_beamwidth(double theta_3db)
{
    if (!(theta_3db > 0.0 && theta_3db < 2.0 * pi))
        throw ParameterError("3 dB beamwidth must lie in (0, 2*pi)");
    const double half = 0.5 * (1.0 + std::cos(0.5 * theta_3db));
    return -std::numbers::ln2 / std::log(half);
}

/// How the arrival angle of a signal at the relay antenna is measured.
enum class ArrivalAngle
{
    /// True angle between the boresight and the incoming direction.
    Geometric,
    /// arcsin of the lateral offset: folds sources behind the relay onto the
    /// front half-plane, i.e. uses |cos| of the geometric angle.
    FoldedArcsin,
};

// ---------------------------------------------------------------------------
// Network parameters
// ---------------------------------------------------------------------------

struct NetworkParams
{
    double lambda = 4.6e-6;  ///< interfering UE density [1/m^2]
    double A = 1e-3;         ///< path-loss constant
    double alpha = 3.7;      ///< path-loss exponent
    double N0 = dbm_to_watt(-103.0);
    double Pt = dbm_to_watt(23.0);
    double Pr = 2.0 * dbm_to_watt(23.0); ///< effective relay power, eta included
    double eta = 10.0;       ///< relay backhaul antenna gain
    double theta = db_to_linear(3.0); ///< SINR decode threshold (linear)
    int kr = 3;              ///< relays per cell
    double d_rb = 150.0;     ///< relay-BS distance [m]
    double slot_T = 1e-3;    ///< slot duration [s]
    AntennaPattern rx_pattern_relay{};
    AntennaPattern rx_pattern_bs{};
    ArrivalAngle arrival = ArrivalAngle::Geometric;

    /// Power actually radiated by the relay (Pr / eta).
    double relay_power_actual() const { return Pr / eta; }

    void validate() const
    {
        auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
        if (!(std::isfinite(lambda) && lambda >= 0.0))
            throw ParameterError("lambda must be >= 0");
        if (!positive(A))
            throw ParameterError("path-loss constant A must be > 0");
        if (!(std::isfinite(alpha) && alpha > 2.0))
            throw ParameterError("path-loss exponent alpha must be > 2 for the interference to be finite");
        if (!positive(N0) || !positive(Pt) || !positive(Pr) || !positive(eta) || !positive(slot_T))
            throw ParameterError("powers, antenna gain and slot duration must be > 0");
        if (!(std::isfinite(theta) && theta >= 1.0))
            throw ParameterError("decode threshold must be >= 1 (0 dB): the two-signal SIC model assumes "
                                 "the stronger signal can never be decoded with the weaker one as interference");
        if (kr < 1)
            throw ParameterError("at least one relay per cell is required (kr >= 1)");
        if (!(std::isfinite(d_rb) && d_rb >= 0.0))
            throw ParameterError("relay distance d_rb must be >= 0");
        rx_pattern_relay.validate();
        rx_pattern_bs.validate();
    }
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// UE position: distance to the BS and angle from the serving relay's axis.
struct UePolar
{
    double d_ub = 0.0;
    double theta_u = 0.0;
};

struct LinkGeometry
{
    UePolar ue;
    double d_ur = 0.0;
    double theta_ur = 0.0;
    double gamma_ub = 0.0;
    double gamma_rb = 0.0;
    double gamma_ur = 0.0;
};

/// Relay sits at (d_rb, 0) with its access antenna pointing away from the
/// BS (+x). A directional BS antenna points at the served UE, so the relay
/// is seen at theta_u off its boresight.
inline LinkGeometry derive_link_geometry(const NetworkParams &params, const UePolar &ue)
{
    if (!(std::isfinite(ue.d_ub) && ue.d_ub >= 0.0))
        throw ParameterError("UE distance must be finite and >= 0");
    const double wedge = pi / params.kr;
    if (!(std::abs(ue.theta_u) <= wedge * (1.0 + 1e-12)))
        throw ParameterError("UE angle must lie within the serving relay's sector [-pi/kr, pi/kr]");

    LinkGeometry g;
    g.ue = ue;
    const double dx = ue.d_ub * std::cos(ue.theta_u) - params.d_rb;
    const double dy = ue.d_ub * std::sin(ue.theta_u);
    g.d_ur = std::hypot(dx, dy);
    if (g.d_ur <= 1e-12 * std::max(1.0, params.d_rb))
        throw DegenerateGeometry("UE coincides with the relay: access-link SNR undefined");

    double cos_ur = dx / g.d_ur;
    if (params.arrival == ArrivalAngle::FoldedArcsin)
    {
        cos_ur = std::abs(cos_ur);
        g.theta_ur = std::asin(std::clamp(dy / g.d_ur, -1.0, 1.0));
    }
    else
    {
        g.theta_ur = std::atan2(dy, dx);
    }

    const double snr_scale = params.A / params.N0;
    g.gamma_ub = ue.d_ub > 0.0 ? snr_scale * params.Pt * antenna_gain_cos(params.rx_pattern_bs, 1.0) /
                                     std::pow(ue.d_ub, params.alpha)
                               : std::numeric_limits<double>::infinity();
    g.gamma_rb = params.d_rb > 0.0 ? snr_scale * params.Pr * antenna_gain(params.rx_pattern_bs, ue.theta_u) /
                                         std::pow(params.d_rb, params.alpha)
                                   : std::numeric_limits<double>::infinity();
    g.gamma_ur = snr_scale * params.Pt * antenna_gain_cos(params.rx_pattern_relay, cos_ur) /
                 std::pow(g.d_ur, params.alpha);
    return g;
}

/// Joint density of the served UE's (distance, angle) over the serving
/// relay's sector: nearest-point law of the UE process times a uniform angle.
inline double ue_position_density(const NetworkParams &params, double r, double theta)
{
    if (r < 0.0 || std::abs(theta) > pi / params.kr)
        return 0.0;
    return params.kr * params.lambda * r * std::exp(-params.lambda * pi * r * r);
}

// ---------------------------------------------------------------------------
// Schemes
// ---------------------------------------------------------------------------

enum class Protocol
{
    Basic,
    BaselineRelay,
    SelectionRelay,
    FeedbackRelay,
};

enum class Receiver
{
    Sic,
    NoSicLowerBound, ///< other-cell UEs transmit in the relay slot
    NoSicUpperBound, ///< relay slot is interference free
};

enum class ScMode
{
    Off,
    FixedBeta,
    OptimalBetaRelay,  ///< Basic uses the direct optimum, relaying schemes the relay optimum
    OptimalBetaSelect, ///< per position, the better of direct SC and relayed SC
};

struct SchemeSpec
{
    Protocol protocol = Protocol::Basic;
    Receiver receiver = Receiver::Sic;
    ScMode sc = ScMode::Off;
    double beta = 0.0; ///< only used with ScMode::FixedBeta

    bool relaying() const { return protocol != Protocol::Basic; }
    bool uses_sc() const { return sc != ScMode::Off; }

    void validate() const
    {
        if (receiver != Receiver::Sic && protocol == Protocol::Basic)
            throw ParameterError("no-SIC bounds only apply to relaying protocols");
        if (receiver != Receiver::Sic && sc != ScMode::Off)
            throw ParameterError("superposition coding requires a SIC receiver");
        if (sc == ScMode::FixedBeta && !(beta >= 0.5 && beta < 1.0))
            throw ParameterError("superposition power split beta must lie in [0.5, 1)");
    }

    friend bool operator==(const SchemeSpec &, const SchemeSpec &) = default;
};

inline std::string_view to_string(Protocol p)
{
    switch (p)
    {
    case Protocol::Basic: return "basic";
    case Protocol::BaselineRelay: return "baseline";
    case Protocol::SelectionRelay: return "selection";
    case Protocol::FeedbackRelay: return "feedback";
    }
    return "?";
}

inline std::string_view to_string(Receiver r)
{
    switch (r)
    {
    case Receiver::Sic: return "sic";
    case Receiver::NoSicLowerBound: return "nosic-lower";
    case Receiver::NoSicUpperBound: return "nosic-upper";
    }
    return "?";
}

inline std::string sc_label(const SchemeSpec &s)
{
    switch (s.sc)
    {
    case ScMode::Off: return "off";
    case ScMode::FixedBeta: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "beta=%.6g", s.beta);
        return buf;
    }
    case ScMode::OptimalBetaRelay: return "opt-relay";
    case ScMode::OptimalBetaSelect: return "opt-select";
    }
    return "?";
}

/// Canonical "protocol:receiver:sc" label, accepted back by parse_scheme.
inline std::string to_string(const SchemeSpec &s)
{
    return std::string(to_string(s.protocol)) + ":" + std::string(to_string(s.receiver)) + ":" + sc_label(s);
}

/// Parses "protocol[:receiver][:sc]", e.g. "feedback", "baseline:nosic-lower",
/// "feedback:sic:beta=0.75", "feedback:sic:opt-select".
inline SchemeSpec parse_scheme(std::string_view text)
{
    auto next = [&text]() {
        const auto pos = text.find(':');
        std::string_view head = text.substr(0, pos);
        text = pos == std::string_view::npos ? std::string_view{} : text.substr(pos + 1);
        while (!head.empty() && head.front() == ' ')
            head.remove_prefix(1);
        while (!head.empty() && head.back() == ' ')
            head.remove_suffix(1);
        return std::string(head);
    };

    SchemeSpec s;
    const std::string proto = next();
    if (proto == "basic")
        s.protocol = Protocol::Basic;
    else if (proto == "baseline")
        s.protocol = Protocol::BaselineRelay;
    else if (proto == "selection")
        s.protocol = Protocol::SelectionRelay;
    else if (proto == "feedback")
        s.protocol = Protocol::FeedbackRelay;
    else
        throw ParameterError("unknown protocol '" + proto + "'");

    if (!text.empty())
    {
        const std::string rx = next();
        if (rx == "sic" || rx.empty())
            s.receiver = Receiver::Sic;
        else if (rx == "nosic-lower")
            s.receiver = Receiver::NoSicLowerBound;
        else if (rx == "nosic-upper")
            s.receiver = Receiver::NoSicUpperBound;
        else
            throw ParameterError("unknown receiver '" + rx + "'");
    }
    if (!text.empty())
    {
        const std::string sc = next();
        if (sc == "off" || sc.empty())
            s.sc = ScMode::Off;
        else if (sc == "opt-relay")
            s.sc = ScMode::OptimalBetaRelay;
        else if (sc == "opt-select")
            s.sc = ScMode::OptimalBetaSelect;
        else if (sc.rfind("beta=", 0) == 0)
        {
            s.sc = ScMode::FixedBeta;
            try
            {
                std::size_t used = 0;
                s.beta = std::stod(sc.substr(5), &used);
                if (used != sc.size() - 5)
                    throw std::invalid_argument("trailing");
            }
            catch (const std::exception &)
            {
                throw ParameterError("malformed beta in '" + sc + "'");
            }
        }
        else
            throw ParameterError("unknown superposition mode '" + sc + "'");
    }
    if (!text.empty())
        throw ParameterError("too many ':' fields in scheme");
    s.validate();
    return s;
}

} // namespace relaylab
