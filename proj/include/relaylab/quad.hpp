// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic adaptive quadrature (Gauss-Kronrod 7/15, global bisection)
// over finite, semi-infinite and polar domains, plus the Gauss
// hypergeometric function on the negative real axis.
//
// Integrands may be scalar (double) or vector valued (std::array<double, N>
// or std::vector<double>); for vectors every component must meet the
// tolerance, and all components share the same nodes.

#include "errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace relaylab::quad {

struct Tolerance
{
    double rel = 1e-8;
    double abs = 1e-12;
    std::size_t max_evals = 1'000'000;

    void validate() const
    {
        if (!(rel > 0.0) || !(abs > 0.0))
            throw ParameterError("quadrature tolerances must be > 0");
        if (max_evals < 1000)
            throw ParameterError("quadrature evaluation budget must be >= 1000");
    }
};

template <class V>
struct Estimate
{
    V value{};
    V error{};
    std::size_t evals = 0;
};

namespace detail {

template <class V>
struct Traits;

template <>
struct Traits<double>
{
    static std::size_t size(const double &) { return 1; }
    static double &at(double &v, std::size_t) { return v; }
    static double at(const double &v, std::size_t) { return v; }
    static double zeros(const double &) { return 0.0; }
};

template <std::size_t N>
struct Traits<std::array<double, N>>
{
    using V = std::array<double, N>;
    static constexpr std::size_t size(const V &) { return N; }
    static double &at(V &v, std::size_t i) { return v[i]; }
    static double at(const V &v, std::size_t i) { return v[i]; }
    static V zeros(const V &) { return V{}; }
};

template <>
struct Traits<std::vector<double>>
{
    using V = std::vector<double>;
    static std::size_t size(const V &v) { return v.size(); }
    static double &at(V &v, std::size_t i) { return v[i]; }
    static double at(const V &v, std::size_t i) { return v[i]; }
    static V zeros(const V &v) { return V(v.size(), 0.0); }
};

// Kronrod 15 abscissae (descending, center last) and weights; Gauss 7
// weights for the odd-indexed abscissae plus the center.
inline constexpr std::array<double, 8> xgk{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wgk{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> wg{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class V>
struct Panel
{
    double a = 0.0;
    double b = 0.0;
    V value{};
    V error{};
    bool splittable = true;
};

template <class V>
void require_finite(const V &v)
{
    using T = Traits<V>;
    for (std::size_t k = 0; k < T::size(v); ++k)
        if (!std::isfinite(T::at(v, k)))
            throw NumericError(NumericError::Kind::NonFinite, "integrand returned a non-finite value");
}

template <class V, class F>
Panel<V> gauss_kronrod15(F &f, double a, double b)
{
    using T = Traits<V>;
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    const V fc = f(center);
    require_finite(fc);
    std::array<V, 7> lo, hi;
    for (std::size_t j = 0; j < 7; ++j)
    {
        const double dx = half * xgk[j];
        lo[j] = f(center - dx);
        hi[j] = f(center + dx);
        require_finite(lo[j]);
        require_finite(hi[j]);
    }

    constexpr double epmach = std::numeric_limits<double>::epsilon();
    constexpr double uflow = std::numeric_limits<double>::min();

    Panel<V> p;
    p.a = a;
    p.b = b;
    p.value = T::zeros(fc);
    p.error = T::zeros(fc);
    for (std::size_t k = 0; k < T::size(fc); ++k)
    {
        const double c = T::at(fc, k);
        double resk = wgk[7] * c;
        double resg = wg[3] * c;
        double resabs = std::abs(resk);
        for (std::size_t j = 0; j < 7; ++j)
        {
            const double f1 = T::at(lo[j], k);
            const double f2 = T::at(hi[j], k);
            resk += wgk[j] * (f1 + f2);
            resabs += wgk[j] * (std::abs(f1) + std::abs(f2));
            if (j % 2 == 1)
                resg += wg[j / 2] * (f1 + f2);
        }
        const double mean = 0.5 * resk;
        double resasc = wgk[7] * std::abs(c - mean);
        for (std::size_t j = 0; j < 7; ++j)
            resasc += wgk[j] * (std::abs(T::at(lo[j], k) - mean) + std::abs(T::at(hi[j], k) - mean));

        const double ah = std::abs(half);
        resabs *= ah;
        resasc *= ah;
        double err = std::abs((resk - resg) * half);
        if (resasc != 0.0 && err != 0.0)
        {
            const double ratio = 200.0 * err / resasc;
            err = resasc * std::min(1.0, ratio * std::sqrt(ratio));
        }
        if (resabs > uflow / (50.0 * epmach))
            err = std::max(50.0 * epmach * resabs, err);
        T::at(p.value, k) = resk * half;
        T::at(p.error, k) = err;
    }
    return p;
}

} // namespace detail

template <class F>
using value_of = std::decay_t<std::invoke_result_t<F &, double>>;

/// Global adaptive integration of f over [breaks.front(), breaks.back()],
/// starting from one panel per breakpoint interval.
template <class F>
Estimate<value_of<F>> integrate(F &&f, std::span<const double> breaks, const Tolerance &tol = {})
{
    using V = value_of<F>;
    using T = detail::Traits<V>;
    tol.validate();
    if (breaks.size() < 2)
        throw ParameterError("integration needs at least two breakpoints");
    for (std::size_t i = 1; i < breaks.size(); ++i)
        if (!(breaks[i] > breaks[i - 1]))
            throw ParameterError("integration breakpoints must be strictly increasing");

    std::vector<detail::Panel<V>> panels;
    panels.reserve(64);
    std::size_t evals = 0;
    for (std::size_t i = 1; i < breaks.size(); ++i)
    {
        panels.push_back(detail::gauss_kronrod15<V>(f, breaks[i - 1], breaks[i]));
        evals += 15;
    }

    const std::size_t dim = T::size(panels.front().value);
    Estimate<V> out;
    // Running totals; re-summed from the panels before returning so the
    // result does not carry the update history's round-off.
    auto resum = [&]() {
        out.value = T::zeros(panels.front().value);
        out.error = T::zeros(panels.front().value);
        for (const auto &p : panels)
            for (std::size_t k = 0; k < dim; ++k)
            {
                T::at(out.value, k) += T::at(p.value, k);
                T::at(out.error, k) += T::at(p.error, k);
            }
    };
    resum();
    std::vector<double> limit(dim);
    while (true)
    {
        bool done = true;
        for (std::size_t k = 0; k < dim; ++k)
        {
            limit[k] = std::max(tol.abs, tol.rel * std::abs(T::at(out.value, k)));
            if (T::at(out.error, k) > limit[k])
                done = false;
        }
        if (done)
        {
            resum();
            break;
        }
        if (evals + 30 > tol.max_evals)
            throw NumericError(NumericError::Kind::BudgetExhausted,
                               "quadrature budget of " + std::to_string(tol.max_evals) +
                                   " evaluations exhausted before reaching tolerance");

        std::size_t worst = panels.size();
        double worst_score = 0.0;
        for (std::size_t i = 0; i < panels.size(); ++i)
        {
            if (!panels[i].splittable)
                continue;
            double score = 0.0;
            for (std::size_t k = 0; k < dim; ++k)
                score = std::max(score, T::at(panels[i].error, k) / limit[k]);
            if (score > worst_score)
            {
                worst_score = score;
                worst = i;
            }
        }
        if (worst == panels.size())
            throw NumericError(NumericError::Kind::NonConvergence,
                               "quadrature cannot refine further (round-off limit reached)");

        const double a = panels[worst].a;
        const double b = panels[worst].b;
        const double mid = 0.5 * (a + b);
        if (!(mid > a && mid < b) || (b - a) < 64.0 * std::numeric_limits<double>::epsilon() *
                                                    std::max(std::abs(a), std::abs(b)))
        {
            panels[worst].splittable = false;
            continue;
        }
        auto left = detail::gauss_kronrod15<V>(f, a, mid);
        auto right = detail::gauss_kronrod15<V>(f, mid, b);
        evals += 30;
        for (std::size_t k = 0; k < dim; ++k)
        {
            T::at(out.value, k) += T::at(left.value, k) + T::at(right.value, k) - T::at(panels[worst].value, k);
            T::at(out.error, k) += T::at(left.error, k) + T::at(right.error, k) - T::at(panels[worst].error, k);
        }
        panels[worst] = std::move(left);
        panels.push_back(std::move(right));
    }
    out.evals = evals;
    return out;
}

template <class F>
Estimate<value_of<F>> integrate(F &&f, double a, double b, const Tolerance &tol = {})
{
    const std::array<double, 2> breaks{a, b};
    return integrate(std::forward<F>(f), std::span<const double>(breaks), tol);
}

/// Integral over [a, inf) through r = a + scale * u / (1 - u), u in [0, 1).
template <class F>
Estimate<value_of<F>> integrate_semi_infinite(F &&f, double a, const Tolerance &tol = {}, double scale = 1.0)
{
    using V = value_of<F>;
    using T = detail::Traits<V>;
    if (!std::isfinite(a) || !(scale > 0.0))
        throw ParameterError("semi-infinite integration needs a finite lower limit and a positive scale");
    auto mapped = [&f, a, scale](double u) {
        const double one_minus = 1.0 - u;
        V v = f(a + scale * u / one_minus);
        const double jac = scale / (one_minus * one_minus);
        for (std::size_t k = 0; k < T::size(v); ++k)
            T::at(v, k) *= jac;
        return v;
    };
    return integrate(mapped, 0.0, 1.0, tol);
}

/// Integral over [a, inf), a > 0, through r = a (1 - u)^(-p). For
/// integrands decaying like r^(-1 - 1/p) the mapped integrand tends to a
/// constant at u = 1, which keeps heavy algebraic tails cheap.
template <class F>
Estimate<value_of<F>> integrate_power_tail(F &&f, double a, double p, const Tolerance &tol = {})
{
    using V = value_of<F>;
    using T = detail::Traits<V>;
    if (!(a > 0.0) || !(p > 0.0))
        throw ParameterError("power-tail integration needs a > 0 and p > 0");
    auto mapped = [&f, a, p](double u) {
        const double one_minus = 1.0 - u;
        const double s = std::pow(one_minus, -p);
        V v = f(a * s);
        const double jac = a * p * s / one_minus;
        for (std::size_t k = 0; k < T::size(v); ++k)
            T::at(v, k) *= jac;
        return v;
    };
    return integrate(mapped, 0.0, 1.0, tol);
}

/// Radial half-line [r0, inf) split at finite knots. The parameter t in
/// [i, i+1] maps linearly onto [k_i, k_{i+1}], and t in [m, m+1) onto the
/// tail [k_m, inf).
class RadialMap
{
  public:
    /// tail_power > 0 selects r = k_m (1 - u)^(-tail_power) on the tail (use
    /// 1/(alpha-2) for integrands ~ r^(1-alpha)); otherwise the affine map
    /// r = k_m + L u/(1-u) with L = max(tail_scale, k_m).
    RadialMap(double r0, std::span<const double> breaks, double tail_power, double tail_scale)
    {
        if (!(r0 >= 0.0) || !std::isfinite(r0))
            throw ParameterError("radial lower limit must be finite and >= 0");
        knots_.push_back(r0);
        for (double rb : breaks)
            if (std::isfinite(rb) && rb > knots_.back() * (1.0 + 1e-9) + 1e-300)
                knots_.push_back(rb);
        last_ = knots_.back();
        power_ = tail_power > 0.0 && last_ > 0.0 ? tail_power : 0.0;
        scale_ = std::max(tail_scale, last_);
        if (!(scale_ > 0.0))
            throw ParameterError("radial tail scale must be > 0");
        for (std::size_t i = 0; i < knots_.size() + 1; ++i)
            t_breaks_.push_back(static_cast<double>(i));
    }

    std::span<const double> parameter_breaks() const { return t_breaks_; }

    /// Returns (r, dr/dt).
    std::pair<double, double> operator()(double t) const
    {
        const std::size_t m = knots_.size() - 1;
        if (t < static_cast<double>(m))
        {
            const auto i = static_cast<std::size_t>(t);
            const double width = knots_[i + 1] - knots_[i];
            return {knots_[i] + (t - static_cast<double>(i)) * width, width};
        }
        const double u = t - static_cast<double>(m);
        const double one_minus = 1.0 - u;
        if (power_ > 0.0)
        {
            const double s = std::pow(one_minus, -power_);
            return {last_ * s, last_ * power_ * s / one_minus};
        }
        return {last_ + scale_ * u / one_minus, scale_ / (one_minus * one_minus)};
    }

  private:
    std::vector<double> knots_;
    std::vector<double> t_breaks_;
    double last_ = 0.0;
    double power_ = 0.0;
    double scale_ = 1.0;
};

/// Integral of f over [r0, inf) with optional interior breakpoints.
template <class F>
Estimate<value_of<F>> integrate_radial(F &&f, const RadialMap &map, const Tolerance &tol = {})
{
    using V = value_of<F>;
    using T = detail::Traits<V>;
    auto mapped = [&f, &map](double t) {
        const auto [r, jac] = map(t);
        V v = f(r);
        for (std::size_t k = 0; k < T::size(v); ++k)
            T::at(v, k) *= jac;
        return v;
    };
    return integrate(mapped, map.parameter_breaks(), tol);
}

/// Domain {r >= r0} x [theta_breaks.front(), theta_breaks.back()] with
/// optional interior breakpoints in both coordinates.
struct PolarDomain
{
    double r0 = 0.0;
    std::vector<double> r_breaks; ///< finite radii > r0, ascending
    std::vector<double> theta_breaks{0.0, 2.0 * std::numbers::pi};
    double tail_power = 0.0; ///< see RadialMap
    double tail_scale = 1.0;
};

/// Integral of g(r, theta) r dr dtheta over a polar domain (nested adaptive
/// integration: inner radial, outer angular). The evaluation budget covers
/// all inner integrations together.
template <class G>
auto integrate_polar(G &&g, const PolarDomain &dom, const Tolerance &tol = {})
    -> Estimate<std::decay_t<std::invoke_result_t<G &, double, double>>>
{
    using V = std::decay_t<std::invoke_result_t<G &, double, double>>;
    using T = detail::Traits<V>;
    tol.validate();
    if (dom.theta_breaks.size() < 2)
        throw ParameterError("polar domain needs an angular range");
    const RadialMap map(dom.r0, dom.r_breaks, dom.tail_power, dom.tail_scale);

    const double theta_span = dom.theta_breaks.back() - dom.theta_breaks.front();
    Tolerance inner = tol;
    inner.rel = 0.2 * tol.rel;
    inner.abs = 0.2 * tol.abs / theta_span;

    std::size_t used = 0;
    auto outer = [&](double theta) {
        auto radial = [&](double r) {
            V v = g(r, theta);
            for (std::size_t k = 0; k < T::size(v); ++k)
                T::at(v, k) *= r;
            return v;
        };
        inner.max_evals = tol.max_evals > used + 1000 ? tol.max_evals - used : 1000;
        auto res = integrate_radial(radial, map, inner);
        used += res.evals;
        if (used > tol.max_evals)
            throw NumericError(NumericError::Kind::BudgetExhausted,
                               "polar quadrature budget of " + std::to_string(tol.max_evals) +
                                   " evaluations exhausted");
        return res.value;
    };

    Tolerance outer_tol = tol;
    outer_tol.max_evals = std::numeric_limits<std::size_t>::max();
    auto res = integrate(outer, std::span<const double>(dom.theta_breaks), outer_tol);
    res.evals = used;
    return res;
}

/// Integral of g(r, theta) r dr dtheta over {r >= r0} x [0, 2 pi).
template <class G>
auto integrate_polar_annulus(G &&g, double r0, const Tolerance &tol = {})
{
    PolarDomain dom;
    dom.r0 = r0;
    return integrate_polar(std::forward<G>(g), dom, tol);
}

// ---------------------------------------------------------------------------
// Gauss hypergeometric function 2F1(a, b; c; z), z <= 0
// ---------------------------------------------------------------------------

namespace detail {

inline bool nonpositive_integer(double x) { return x <= 0.0 && x == std::floor(x); }

inline double rgamma(double x) { return nonpositive_integer(x) ? 0.0 : 1.0 / std::tgamma(x); }

/// Power series for 0 <= x < 1.
inline double hyp2f1_series(double a, double b, double c, double x)
{
    constexpr std::size_t max_terms = 200'000'000;
    double sum = 1.0;
    double term = 1.0;
    for (std::size_t n = 0; n < max_terms; ++n)
    {
        const double dn = static_cast<double>(n);
        term *= (a + dn) * (b + dn) / ((c + dn) * (dn + 1.0)) * x;
        sum += term;
        if (term == 0.0)
            return sum;
        // Once the term ratio has settled below 1 the remaining tail is
        // bounded by a geometric series with ratio ~x.
        const double ratio = std::abs((a + dn + 1.0) * (b + dn + 1.0) / ((c + dn + 1.0) * (dn + 2.0))) * x;
        if (ratio < 1.0 && std::abs(term) * ratio / (1.0 - ratio) <= 1e-16 * std::abs(sum))
            return sum;
    }
    throw NumericError(NumericError::Kind::NonConvergence, "2F1 power series did not converge");
}

} // namespace detail

/// 2F1(a, b; c; z) for real z <= 0. The Pfaff transformation maps z to
/// w = z/(z-1) in [0, 1); near w = 1 the 1-w connection formula is used when
/// c - a - b (after the transform) is not close to an integer.
inline double hyp2f1(double a, double b, double c, double z)
{
    if (detail::nonpositive_integer(c))
        throw ParameterError("2F1 has a pole: c is a non-positive integer");
    if (!(z <= 0.0))
        throw ParameterError("2F1 is only provided for z <= 0");
    if (z == 0.0)
        return 1.0;

    const double w = z / (z - 1.0);
    const double pref = std::pow(1.0 - z, -a);
    const double b2 = c - b;
    const double cab = c - a - b2;
    const bool near_integer = std::abs(cab - std::round(cab)) < 1e-3;

    if (w <= 0.75 || near_integer)
        return pref * detail::hyp2f1_series(a, b2, c, w);

    // 1 - w = 1/(1 - z), evaluated without cancellation.
    const double v_exact = 1.0 / (1.0 - z);
    const double g_c = std::tgamma(c);
    const double t1 = g_c * std::tgamma(cab) * detail::rgamma(c - a) * detail::rgamma(c - b2) *
                      detail::hyp2f1_series(a, b2, 1.0 - cab, v_exact);
    const double t2 = g_c * std::tgamma(-cab) * detail::rgamma(a) * detail::rgamma(b2) *
                      std::pow(v_exact, cab) * detail::hyp2f1_series(c - a, c - b2, 1.0 + cab, v_exact);
    const double out = pref * (t1 + t2);
    if (!std::isfinite(out))
        throw NumericError(NumericError::Kind::NonFinite, "2F1 connection formula overflowed");
    return out;
}

} // namespace relaylab::quad
