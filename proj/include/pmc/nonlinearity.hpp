#pragma once

#include "pmc/fields.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pmc {

/// T_k(s) = max(-k, min(s, k)).
inline double truncate(double s, double k)
{
    if (!(k > 0.0)) throw std::invalid_argument("truncate: level k must be positive");
    return std::max(-k, std::min(s, k));
}

/// G_k(s) = s - T_k(s).
inline double remainder(double s, double k)
{
    return s - truncate(s, k);
}

/// 0 on [-(k-delta), k-delta], sign(s) outside [-k, k], linear in between.
inline double s_delta_k(double s, double k, double delta)
{
    if (!(delta > 0.0)) throw std::invalid_argument("s_delta_k: delta must be positive");
    if (delta > k) throw std::invalid_argument("s_delta_k: delta must not exceed k");
    double const a = std::abs(s);
    double const sgn = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
    if (a > k) return sgn;
    if (a <= k - delta) return 0.0;
    return sgn * (a - k + delta) / delta;
}

/// Truncation level 1/(p-1) used by the regularized problems.
inline double cap_for(double p)
{
    if (!(p > 1.0)) throw std::invalid_argument("regularization exponent p must exceed 1");
    return 1.0 / (p - 1.0);
}

struct PowerGrowth {
    double c0 = 1.0;
    double q = 2.0;
};

struct AbsorptionFlags {
    bool satisfies_sign = true;
    bool coercive = true;
    bool strictly_increasing = true;
    bool nondecreasing = true;
};

namespace detail {

template <class F>
double adaptive_simpson(F const& f, double a, double b, double fa, double fm, double fb, double whole, double tol, int depth)
{
    double const m = 0.5 * (a + b);
    double const lm = 0.5 * (a + m);
    double const rm = 0.5 * (m + b);
    double const flm = f(lm);
    double const frm = f(rm);
    double const left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double const right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double const delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
         + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate_1d(F const& f, double a, double b, double tol = 1e-12)
{
    if (a == b) return 0.0;
    double const fa = f(a);
    double const fb = f(b);
    double const fm = f(0.5 * (a + b));
    double const whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

} // namespace detail

/**
 * The absorption nonlinearity g together with its antiderivative G (G(0) = 0),
 * derivative, and the structural properties it is declared to have. When the
 * antiderivative or derivative is not supplied, numeric quadrature from 0 and
 * central differences are used.
 */
class AbsorptionSpec {
public:
    using Fn = std::function<double(double)>;

    AbsorptionSpec() : AbsorptionSpec("zero", [](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; },
                                      AbsorptionFlags{true, false, false, true})
    {
    }

    AbsorptionSpec(std::string name, Fn g, Fn antiderivative, Fn derivative, AbsorptionFlags flags,
                   std::optional<PowerGrowth> growth = std::nullopt)
        : name_(std::move(name)), g_(std::move(g)), G_(std::move(antiderivative)), dg_(std::move(derivative)), flags_(flags),
          growth_(growth)
    {
        if (!g_) throw std::invalid_argument("AbsorptionSpec: evaluator required");
    }

    std::string const& name() const { return name_; }
    AbsorptionFlags const& flags() const { return flags_; }
    std::optional<PowerGrowth> const& power_growth() const { return growth_; }

    double operator()(double s) const { return g_(s); }

    double antiderivative(double s) const
    {
        if (G_) return G_(s);
        return detail::integrate_1d(g_, 0.0, s);
    }

    double derivative(double s) const
    {
        if (dg_) return dg_(s);
        double const step = 1e-6 * std::max(1.0, std::abs(s));
        return (g_(s + step) - g_(s - step)) / (2.0 * step);
    }

private:
    std::string name_;
    Fn g_;
    Fn G_;
    Fn dg_;
    AbsorptionFlags flags_;
    std::optional<PowerGrowth> growth_;
};

/// g(s) = c s.
inline AbsorptionSpec linear_absorption(double c)
{
    if (!(c > 0.0)) throw std::invalid_argument("linear absorption needs a positive slope");
    return AbsorptionSpec(
        c == 1.0 ? "identity" : "linear", [c](double s) { return c * s; }, [c](double s) { return 0.5 * c * s * s; },
        [c](double) { return c; }, AbsorptionFlags{true, true, true, true}, PowerGrowth{c, 2.0});
}

inline AbsorptionSpec identity_absorption()
{
    return linear_absorption(1.0);
}

/// g(s) = c0 |s|^{q-2} s, which satisfies g(s)s = c0|s|^q.
inline AbsorptionSpec power_absorption(double q, double c0)
{
    if (!(q > 1.0)) throw std::invalid_argument("power absorption needs q > 1");
    if (!(c0 > 0.0)) throw std::invalid_argument("power absorption needs c0 > 0");
    return AbsorptionSpec(
        "power", [q, c0](double s) { return std::copysign(c0 * std::pow(std::abs(s), q - 1.0), s); },
        [q, c0](double s) { return c0 * std::pow(std::abs(s), q) / q; },
        [q, c0](double s) {
            // g' is infinite at 0 when q < 2; the Newton matrix then relies on the other terms.
            if (s == 0.0) return q == 2.0 ? c0 : 0.0;
            return c0 * (q - 1.0) * std::pow(std::abs(s), q - 2.0);
        },
        AbsorptionFlags{true, true, true, true}, PowerGrowth{c0, q});
}

/// g(s) = arctan(s); bounded, hence declared non-coercive.
inline AbsorptionSpec arctan_absorption()
{
    return AbsorptionSpec(
        "atan", [](double s) { return std::atan(s); }, [](double s) { return s * std::atan(s) - 0.5 * std::log1p(s * s); },
        [](double s) { return 1.0 / (1.0 + s * s); }, AbsorptionFlags{true, false, true, true});
}

inline AbsorptionSpec zero_absorption()
{
    return AbsorptionSpec();
}

/// Parses `identity`, `power(q,c0)`, `atan`, `zero`.
inline AbsorptionSpec absorption_from_name(std::string const& text)
{
    std::string s;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
    }
    if (s == "identity") return identity_absorption();
    if (s == "atan") return arctan_absorption();
    if (s == "zero") return zero_absorption();
    if (s.rfind("power(", 0) == 0 && s.back() == ')') {
        auto const body = s.substr(6, s.size() - 7);
        auto const comma = body.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("power(q,c0) expects two arguments");
        return power_absorption(std::stod(body.substr(0, comma)), std::stod(body.substr(comma + 1)));
    }
    throw std::invalid_argument("unknown absorption '" + text + "'");
}

/// Outcome of the lattice spot checks of the declared structural flags.
struct FlagCheck {
    bool sign_ok = true;
    bool growth_ok = true;
    bool antiderivative_ok = true;
    bool coercive_sampled = true;
    std::vector<std::string> messages;

    bool consistent_with(AbsorptionFlags const& flags) const
    {
        return sign_ok && growth_ok && antiderivative_ok && coercive_sampled == flags.coercive;
    }
};

/**
 * Spot-verifies the declared properties on the lattice s = +-10^j. Coercivity
 * is judged by whether the increments of g over successive decades stop
 * decaying geometrically, which separates bounded from slowly growing g.
 */
inline FlagCheck verify_flags(AbsorptionSpec const& g)
{
    FlagCheck out;
    std::vector<double> lattice{0.0};
    for (int j = -3; j <= 6; ++j) {
        lattice.push_back(std::pow(10.0, j));
        lattice.push_back(-std::pow(10.0, j));
    }
    for (double s : lattice) {
        double const gs = g(s);
        if (g.flags().satisfies_sign && gs * s < -1e-12) {
            out.sign_ok = false;
            out.messages.push_back("sign condition fails at s=" + std::to_string(s));
        }
        if (auto const& pg = g.power_growth(); pg && gs * s < pg->c0 * std::pow(std::abs(s), pg->q) - 1e-9) {
            out.growth_ok = false;
            out.messages.push_back("power growth fails at s=" + std::to_string(s));
        }
        if (std::abs(s) <= 1e3) {
            double const step = 1e-5 * std::max(1.0, std::abs(s));
            double const fd = (g.antiderivative(s + step) - g.antiderivative(s - step)) / (2.0 * step);
            if (std::abs(fd - gs) > 1e-6 * std::max(1.0, std::abs(gs))) {
                out.antiderivative_ok = false;
                out.messages.push_back("antiderivative mismatch at s=" + std::to_string(s));
            }
        }
    }
    if (std::abs(g.antiderivative(0.0)) > 1e-14) {
        out.antiderivative_ok = false;
        out.messages.push_back("antiderivative must vanish at 0");
    }
    for (double side : {1.0, -1.0}) {
        double const first = side * (g(side * 10.0) - g(side * 1.0));
        double const last = side * (g(side * 1e12) - g(side * 1e11));
        if (!(first > 0.0) || !(last >= 1e-3 * first)) out.coercive_sampled = false;
    }
    return out;
}

/**
 * g_p = T_cap(g) with its derivative and antiderivative. cap = +inf leaves g
 * untouched. For nondecreasing g the antiderivative is closed form around
 * the saturation points; otherwise it falls back to quadrature.
 */
class TruncatedAbsorption {
public:
    TruncatedAbsorption(AbsorptionSpec g, double cap) : g_(std::move(g)), cap_(cap)
    {
        if (!(cap_ > 0.0)) throw std::invalid_argument("truncation cap must be positive");
        if (std::isfinite(cap_) && g_.flags().nondecreasing) {
            upper_ = saturation_point(1.0);
            lower_ = saturation_point(-1.0);
        }
    }

    double cap() const { return cap_; }
    AbsorptionSpec const& base() const { return g_; }

    double value(double s) const
    {
        double const v = g_(s);
        return std::isfinite(cap_) ? std::max(-cap_, std::min(v, cap_)) : v;
    }

    double derivative(double s) const
    {
        if (std::isfinite(cap_) && std::abs(g_(s)) >= cap_) return 0.0;
        return g_.derivative(s);
    }

    double antiderivative(double s) const
    {
        if (!std::isfinite(cap_)) return g_.antiderivative(s);
        if (g_.flags().nondecreasing) {
            auto const& sat = s >= 0.0 ? upper_ : lower_;
            if (!sat || (s >= 0.0 ? s <= *sat : s >= *sat)) return g_.antiderivative(s);
            return g_.antiderivative(*sat) + (s >= 0.0 ? cap_ : -cap_) * (s - *sat);
        }
        return detail::integrate_1d([this](double t) { return value(t); }, 0.0, s);
    }

private:
    // Smallest |s| on the given side where |g(s)| reaches the cap.
    std::optional<double> saturation_point(double side) const
    {
        double hi = side;
        int iter = 0;
        while (side * g_(hi) < cap_) {
            hi *= 2.0;
            if (++iter > 1100 || !std::isfinite(hi)) return std::nullopt;
        }
        double lo = 0.0;
        for (int k = 0; k < 200; ++k) {
            double const mid = 0.5 * (lo + hi);
            if (side * g_(mid) < cap_) lo = mid;
            else hi = mid;
            if (std::abs(hi - lo) <= 1e-15 * std::abs(hi)) break;
        }
        return hi;
    }

    AbsorptionSpec g_;
    double cap_;
    std::optional<double> upper_;
    std::optional<double> lower_;
};

/// g_p(s) = T_{1/(p-1)}(g(s)).
inline double g_trunc(AbsorptionSpec const& g, double p, double s)
{
    return truncate(g(s), cap_for(p));
}

enum class IntegrabilityClass { Linf, LN, LNweak, Lq, L1 };

inline std::string to_string(IntegrabilityClass c)
{
    switch (c) {
    case IntegrabilityClass::Linf: return "Linf";
    case IntegrabilityClass::LN: return "LN";
    case IntegrabilityClass::LNweak: return "LNweak";
    case IntegrabilityClass::Lq: return "Lq";
    case IntegrabilityClass::L1: return "L1";
    }
    return "unknown";
}

/**
 * The datum f: an analytic evaluator or a sampled field, optionally
 * truncated at `cap`. The integrability tag is informational only.
 */
class DatumSpec {
public:
    using Evaluator = std::function<double(Point const&)>;

    DatumSpec() : DatumSpec([](Point const&) { return 0.0; }, IntegrabilityClass::Linf) {}
    explicit DatumSpec(Evaluator f, IntegrabilityClass tag = IntegrabilityClass::Linf) : eval_(std::move(f)), tag_(tag) {}
    explicit DatumSpec(ScalarField sampled, IntegrabilityClass tag = IntegrabilityClass::Linf)
        : sampled_(std::move(sampled)), tag_(tag)
    {
    }

    static DatumSpec constant(double c) { return DatumSpec([c](Point const&) { return c; }); }

    bool is_analytic() const { return static_cast<bool>(eval_); }
    IntegrabilityClass tag() const { return tag_; }
    double cap() const { return cap_; }

    /// Analytic value at a point (throws for sampled data).
    double evaluate(Point const& x) const
    {
        if (!eval_) throw std::logic_error("DatumSpec: sampled datum has no pointwise evaluator");
        return clamp(eval_(x));
    }

    ScalarField sample(GridPtr const& grid) const
    {
        if (eval_) {
            std::vector<double> v(grid->node_count());
            for (std::size_t k = 0; k < v.size(); ++k) v[k] = clamp(eval_(grid->point(k)));
            return ScalarField(grid, std::move(v));
        }
        if (sampled_.grid().node_count() != grid->node_count()) {
            throw std::invalid_argument("DatumSpec: sampled datum lives on a different grid");
        }
        std::vector<double> v(sampled_.values().begin(), sampled_.values().end());
        for (double& x : v) x = clamp(x);
        return ScalarField(grid, std::move(v));
    }

    friend DatumSpec datum_trunc(DatumSpec const& f, double cap);

private:
    double clamp(double v) const { return std::isfinite(cap_) ? std::max(-cap_, std::min(v, cap_)) : v; }

    Evaluator eval_;
    ScalarField sampled_;
    IntegrabilityClass tag_ = IntegrabilityClass::Linf;
    double cap_ = std::numeric_limits<double>::infinity();
};

/// Pointwise T_cap of the datum; nested truncations compose to the smaller cap.
inline DatumSpec datum_trunc(DatumSpec const& f, double cap)
{
    if (!(cap > 0.0)) throw std::invalid_argument("datum_trunc: cap must be positive");
    DatumSpec out = f;
    out.cap_ = std::min(f.cap_, cap);
    return out;
}

} // namespace pmc
