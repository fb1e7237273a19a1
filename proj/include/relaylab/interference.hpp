// SPDX-License-Identifier: Apache-2.0
#pragma once

// Laplace functionals of the interference generated by a homogeneous PPP of
// other-cell UEs (intensity lambda, power Pt) outside a disk of radius x
// around the BS.
//
// Measurement points: the relay at (d, 0) and the BS at the origin. Every
// interferer has an independent unit-mean exponential fade towards each
// (receiver, slot) pair, while positions are shared. A joint functional
//
//   J(s, t, u) = E[exp(-s I_R - t I_B1 - u I_B2)]
//
// covers all forms used by the analytic engine: I_R at the relay in slot 1,
// I_B1 and I_B2 at the BS in slots 1 and 2.

#include "errors.hpp"
#include "model.hpp"
#include "quad.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace relaylab {

/// Laplace arguments (in 1/W) of one joint functional.
struct LaplaceTriple
{
    double s = 0.0; ///< relay, slot 1
    double t = 0.0; ///< BS, slot 1
    double u = 0.0; ///< BS, slot 2
};

/// Where the two receivers sit and how they see the interferers.
struct JointSetup
{
    double d = 0.0; ///< relay distance from the BS [m]
    double x = 0.0; ///< exclusion radius around the BS [m]
    AntennaPattern relay_pattern{};
    ArrivalAngle arrival = ArrivalAngle::Geometric;
    AntennaPattern bs_pattern{};
    double bs_boresight = 0.0; ///< direction of the BS antenna [rad]

    static JointSetup from(const NetworkParams &p, double d, double x, double bs_boresight = 0.0)
    {
        return {d, x, p.rx_pattern_relay, p.arrival, p.rx_pattern_bs, bs_boresight};
    }
};

/// Default accuracy of the Laplace exponents (absolute tolerance applies to
/// the exponent, i.e. roughly to the relative error of the transform).
inline quad::Tolerance laplace_tolerance() { return {1e-9, 1e-10, 2'000'000}; }

// ---------------------------------------------------------------------------
// Single-point transform at the BS (omnidirectional reception)
// ---------------------------------------------------------------------------

/// Exponent K with L(s, x) = exp(-K), from the hypergeometric closed form.
inline double laplace_single_exponent(const NetworkParams &p, double s, double x)
{
    if (!(s >= 0.0) || !(x >= 0.0))
        throw ParameterError("Laplace argument and exclusion radius must be >= 0");
    if (s == 0.0 || p.lambda == 0.0)
        return 0.0;
    const double c = s * p.Pt * p.A;
    const double a = p.alpha;
    if (x == 0.0)
        return p.lambda * pi * std::pow(c, 2.0 / a) * (2.0 * pi / a) / std::sin(2.0 * pi / a);
    const double f = quad::hyp2f1(1.0, 1.0 - 2.0 / a, 2.0 - 2.0 / a, -c / std::pow(x, a));
    return 2.0 * pi * p.lambda * c * std::pow(x, 2.0 - a) / (a - 2.0) * f;
}

/// Same exponent by direct quadrature of 2 pi lambda int_x^inf c r / (r^a + c) dr.
inline double laplace_single_exponent_quadrature(const NetworkParams &p, double s, double x,
                                                 const quad::Tolerance &tol = laplace_tolerance())
{
    if (!(s >= 0.0) || !(x >= 0.0))
        throw ParameterError("Laplace argument and exclusion radius must be >= 0");
    if (s == 0.0 || p.lambda == 0.0)
        return 0.0;
    const double c = s * p.Pt * p.A;
    const double a = p.alpha;
    const double knee = std::pow(c, 1.0 / a);
    std::vector<double> breaks;
    for (double b : {0.5 * knee, knee, 2.0 * knee})
        if (b > x)
            breaks.push_back(b);
    if (breaks.empty() && x == 0.0)
        breaks.push_back(knee);
    const quad::RadialMap map(x, breaks, 1.0 / (a - 2.0), knee);
    const double scale = 2.0 * pi * p.lambda;
    auto f = [&](double r) {
        const double ra = std::pow(r, a);
        return scale * c * r / (ra + c);
    };
    return quad::integrate_radial(f, map, tol).value;
}

/// L(s, x) = E[exp(-s I)] for interference at the BS. Uses the closed form
/// and falls back to quadrature if the special function fails.
inline double laplace_single(const NetworkParams &p, double s, double x)
{
    double k;
    try
    {
        k = laplace_single_exponent(p, s, x);
        if (!std::isfinite(k))
            throw NumericError(NumericError::Kind::NonFinite, "non-finite closed form");
    }
    catch (const NumericError &)
    {
        k = laplace_single_exponent_quadrature(p, s, x);
    }
    return std::exp(-k);
}

inline double laplace_single_quadrature(const NetworkParams &p, double s, double x)
{
    return std::exp(-laplace_single_exponent_quadrature(p, s, x));
}

// ---------------------------------------------------------------------------
// Joint transforms (fused polar quadrature)
// ---------------------------------------------------------------------------

namespace detail {

/// Shared integrand for a batch of triples. Distinct nonzero Laplace values
/// are evaluated once per point; index 0 of each table stands for zero.
class JointKernel
{
  public:
    JointKernel(const NetworkParams &p, const JointSetup &setup, std::span<const LaplaceTriple> triples)
        : setup_(setup), alpha_(p.alpha), ptA_(p.Pt * p.A), lambda_(p.lambda)
    {
        relay_values_.push_back(0.0);
        bs_values_.push_back(0.0);
        auto index_of = [](std::vector<double> &table, double v) -> std::size_t {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ParameterError("Laplace arguments must be finite and >= 0");
            if (v == 0.0)
                return 0;
            auto it = std::find(table.begin(), table.end(), v);
            if (it != table.end())
                return static_cast<std::size_t>(it - table.begin());
            table.push_back(v);
            return table.size() - 1;
        };
        for (const auto &tr : triples)
            index_.push_back({index_of(relay_values_, tr.s), index_of(bs_values_, tr.t),
                              index_of(bs_values_, tr.u)});
        relay_terms_.resize(relay_values_.size());
        bs_terms_.resize(bs_values_.size());
    }

    std::size_t size() const { return index_.size(); }
    double max_relay_value() const { return *std::max_element(relay_values_.begin(), relay_values_.end()); }
    double max_bs_value() const { return *std::max_element(bs_values_.begin(), bs_values_.end()); }

    /// Writes lambda * (1 - prod 1/(1 + v g)) for every triple into out.
    template <class Out>
    void evaluate(double r, double theta, Out &out)
    {
        const double ct = std::cos(theta);
        const double st = std::sin(theta);
        const double d = setup_.d;

        double g_b = ptA_ * std::pow(r, -alpha_);
        if (!setup_.bs_pattern.omnidirectional())
            g_b *= antenna_gain(setup_.bs_pattern, theta - setup_.bs_boresight);

        double g_r = 0.0;
        if (relay_values_.size() > 1)
        {
            const double dx = r * ct - d;
            const double dy = r * st;
            const double rho2 = dx * dx + dy * dy;
            g_r = ptA_ * std::pow(rho2, -0.5 * alpha_);
            if (!setup_.relay_pattern.omnidirectional())
            {
                const double rho = std::sqrt(rho2);
                double c = rho > 0.0 ? dx / rho : 1.0;
                if (setup_.arrival == ArrivalAngle::FoldedArcsin)
                    c = std::abs(c);
                g_r *= antenna_gain_cos(setup_.relay_pattern, c);
            }
        }

        relay_terms_[0] = 0.0;
        for (std::size_t i = 1; i < relay_values_.size(); ++i)
            relay_terms_[i] = relay_values_[i] * g_r;
        bs_terms_[0] = 0.0;
        for (std::size_t i = 1; i < bs_values_.size(); ++i)
            bs_terms_[i] = bs_values_[i] * g_b;

        for (std::size_t k = 0; k < index_.size(); ++k)
        {
            const double a = relay_terms_[index_[k][0]];
            const double b = bs_terms_[index_[k][1]];
            const double c = bs_terms_[index_[k][2]];
            // (1+a)(1+b)(1+c) - 1 expanded so that small terms keep full precision.
            const double excess = a + b + c + a * b + a * c + b * c + a * b * c;
            out[k] = lambda_ * excess / (1.0 + excess);
        }
    }

  private:
    JointSetup setup_;
    double alpha_;
    double ptA_;
    double lambda_;
    std::vector<double> relay_values_;
    std::vector<double> bs_values_;
    std::vector<std::array<std::size_t, 3>> index_;
    std::vector<double> relay_terms_;
    std::vector<double> bs_terms_;
};

/// Polar domain with breakpoints around the relay hot spot and the BS knee.
inline quad::PolarDomain joint_domain(const NetworkParams &p, const JointSetup &setup, double s_max, double bs_max)
{
    quad::PolarDomain dom;
    dom.r0 = setup.x;
    dom.tail_power = 1.0 / (p.alpha - 2.0);
    const double ptA = p.Pt * p.A;

    std::vector<double> rb;
    double w = 0.0;
    if (s_max > 0.0)
    {
        w = std::pow(s_max * ptA * setup.relay_pattern.peak(), 1.0 / p.alpha);
        for (double v : {setup.d - w, setup.d, setup.d + w})
            rb.push_back(v);
    }
    double knee = 0.0;
    if (bs_max > 0.0)
    {
        knee = std::pow(bs_max * ptA * setup.bs_pattern.peak(), 1.0 / p.alpha);
        rb.push_back(knee);
    }
    std::sort(rb.begin(), rb.end());
    for (double v : rb)
        if (v > setup.x)
            dom.r_breaks.push_back(v);
    dom.tail_scale = std::max({setup.x, w, knee, 1.0});

    // The integrand is even in theta when the BS pattern is symmetric about
    // the relay axis; the caller then doubles the half-range result.
    const bool symmetric = setup.bs_pattern.omnidirectional() || setup.bs_boresight == 0.0;
    std::vector<double> tb;
    const double lo = symmetric ? 0.0 : -pi;
    tb.push_back(lo);
    if (s_max > 0.0 && setup.d > 0.0)
    {
        const double spread = std::min(pi / 2.0, 2.0 * w / setup.d);
        for (double v : {spread / 4.0, spread})
        {
            if (!symmetric)
                tb.push_back(-v);
            tb.push_back(v);
        }
    }
    if (!symmetric)
    {
        tb.push_back(0.0);
        if (!setup.bs_pattern.omnidirectional())
            tb.push_back(std::remainder(setup.bs_boresight, 2.0 * pi));
    }
    tb.push_back(pi);
    std::sort(tb.begin(), tb.end());
    tb.erase(std::unique(tb.begin(), tb.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), tb.end());
    dom.theta_breaks = tb;
    return dom;
}

template <class V>
void finish_joint(V &exponent, bool symmetric)
{
    for (auto &e : exponent)
        e = std::exp(-(symmetric ? 2.0 : 1.0) * e);
}

} // namespace detail

/// Joint transforms for a batch of triples sharing one geometry, computed in
/// a single vector-valued quadrature.
template <std::size_t N>
std::array<double, N> laplace_multi(const NetworkParams &p, const JointSetup &setup,
                                    const std::array<LaplaceTriple, N> &triples,
                                    const quad::Tolerance &tol = laplace_tolerance())
{
    std::array<double, N> out;
    out.fill(1.0);
    if (p.lambda == 0.0)
        return out;
    detail::JointKernel kernel(p, setup, triples);
    const double s_max = kernel.max_relay_value();
    const double b_max = kernel.max_bs_value();
    if (s_max == 0.0 && b_max == 0.0)
        return out;
    const auto dom = detail::joint_domain(p, setup, s_max, b_max);
    const bool symmetric = dom.theta_breaks.front() == 0.0;
    auto g = [&kernel](double r, double theta) {
        std::array<double, N> v;
        kernel.evaluate(r, theta, v);
        return v;
    };
    auto res = quad::integrate_polar(g, dom, tol);
    detail::finish_joint(res.value, symmetric);
    return res.value;
}

inline std::vector<double> laplace_multi(const NetworkParams &p, const JointSetup &setup,
                                         std::span<const LaplaceTriple> triples,
                                         const quad::Tolerance &tol = laplace_tolerance())
{
    std::vector<double> out(triples.size(), 1.0);
    if (p.lambda == 0.0 || triples.empty())
        return out;
    detail::JointKernel kernel(p, setup, triples);
    const double s_max = kernel.max_relay_value();
    const double b_max = kernel.max_bs_value();
    if (s_max == 0.0 && b_max == 0.0)
        return out;
    const auto dom = detail::joint_domain(p, setup, s_max, b_max);
    const bool symmetric = dom.theta_breaks.front() == 0.0;
    const std::size_t n = triples.size();
    auto g = [&kernel, n](double r, double theta) {
        std::vector<double> v(n);
        kernel.evaluate(r, theta, v);
        return v;
    };
    auto res = quad::integrate_polar(g, dom, tol);
    detail::finish_joint(res.value, symmetric);
    return res.value;
}

/// E[exp(-s I_R - t I_B)], omnidirectional reception at both points.
inline double laplace_joint2(const NetworkParams &p, double s, double t, double d, double x)
{
    JointSetup setup{d, x};
    return laplace_multi<1>(p, setup, {LaplaceTriple{s, t, 0.0}})[0];
}

/// As laplace_joint2 with the relay branch weighted by its receive pattern.
inline double laplace_joint2_antenna(const NetworkParams &p, double s, double t, double d, double x,
                                     const AntennaPattern &pattern,
                                     ArrivalAngle arrival = ArrivalAngle::Geometric)
{
    JointSetup setup{d, x, pattern, arrival};
    return laplace_multi<1>(p, setup, {LaplaceTriple{s, t, 0.0}})[0];
}

/// E[exp(-s I_R - t I_B1 - u I_B2)], omnidirectional reception.
inline double laplace_joint3(const NetworkParams &p, double s, double t, double u, double d, double x)
{
    JointSetup setup{d, x};
    return laplace_multi<1>(p, setup, {LaplaceTriple{s, t, u}})[0];
}

} // namespace relaylab
