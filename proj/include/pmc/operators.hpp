#pragma once

#include "pmc/fields.hpp"
#include "pmc/nonlinearity.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace pmc {

/**
 * Regularization exponent p of the (p-1)-weighted p-Laplacian term; p = 1 drops
 * it. With smoothing e > 0 the p-term density is ((p-1)/p)((|a|^2+e^2)^{p/2} - e^p),
 * whose flux is Lipschitz at a = 0; e = 0 gives the plain |a|^p.
 */
struct OperatorConfig {
    double p = 1.0;
    double smoothing = 0.0;

    double p_weight() const { return p - 1.0; }
    /// Truncation level of g and f; infinite at p = 1.
    double cap() const { return p > 1.0 ? 1.0 / (p - 1.0) : std::numeric_limits<double>::infinity(); }

    static OperatorConfig with_exponent(double p, double smoothing = 0.0)
    {
        if (!(p >= 1.0)) throw std::invalid_argument("OperatorConfig: p must be >= 1");
        if (!(smoothing >= 0.0)) throw std::invalid_argument("OperatorConfig: smoothing must be nonnegative");
        return OperatorConfig{p, smoothing};
    }
};

using Mat2 = std::array<std::array<double, 2>, 2>;

inline double norm(Vec2 const& a)
{
    return std::hypot(a[0], a[1]);
}

inline double dot(Vec2 const& a, Vec2 const& b)
{
    return a[0] * b[0] + a[1] * b[1];
}

inline Vec2 sample_gradient(Grid const& g, GradientSample const& s, std::span<const double> u)
{
    Vec2 a{0.0, 0.0};
    for (int j = 0; j < g.axes(); ++j) a[j] = (u[s.to[j]] - u[s.from[j]]) / g.spacing(j);
    return a;
}

/// Face-centred differences at every gradient sample; exact for affine u.
inline VectorField gradient(ScalarField const& u)
{
    auto const& g = u.grid();
    VectorField out(u.grid_ptr());
    auto const samples = g.samples();
    for (std::size_t s = 0; s < samples.size(); ++s) out[s] = sample_gradient(g, samples[s], u.values());
    return out;
}

/// z(a) = a / sqrt(1 + |a|^2), evaluated without overflow.
inline Vec2 mc_flux(Vec2 const& a)
{
    double const s = std::hypot(1.0, norm(a));
    return {a[0] / s, a[1] / s};
}

inline VectorField mc_flux(VectorField const& gu)
{
    VectorField out(gu.grid_ptr());
    for (std::size_t s = 0; s < gu.size(); ++s) out[s] = mc_flux(gu[s]);
    return out;
}

/// Exact Jacobian (I(1+|a|^2) - a a^T) / (1+|a|^2)^{3/2}.
inline Mat2 mc_flux_jacobian(Vec2 const& a)
{
    double const s = std::hypot(1.0, norm(a));
    Vec2 const b{a[0] / s, a[1] / s};
    return Mat2{{{(1.0 - b[0] * b[0]) / s, -b[0] * b[1] / s}, {-b[1] * b[0] / s, (1.0 - b[1] * b[1]) / s}}};
}

namespace detail {
// Below this magnitude a gradient is treated as exactly zero by the p-term.
inline constexpr double zero_gradient = 1e-200;
inline constexpr double eigen_floor = 1e-14;
} // namespace detail

/// (p-1)(|a|^2+e^2)^{(p-2)/2} a; for e = 0 the value at a = 0 is 0.
inline Vec2 p_flux(Vec2 const& a, double p, double smoothing = 0.0)
{
    double const n = norm(a);
    if (p == 1.0 || (smoothing == 0.0 && n <= detail::zero_gradient)) return {0.0, 0.0};
    double const c = (p - 1.0) * std::pow(std::hypot(n, smoothing), p - 2.0);
    return {c * a[0], c * a[1]};
}

/**
 * Jacobian of p_flux: perpendicular eigenvalue (p-1)s^{(p-2)/2}, parallel one
 * that times (1 + (p-2)|a|^2/s), s = |a|^2 + e^2; floored at 1e-14 and zero at
 * a = 0 when e = 0. With `secant` the parallel eigenvalue is replaced by the
 * perpendicular one, F(a)/|a|, which dominates the exact value for p < 2.
 */
inline Mat2 p_flux_jacobian(Vec2 const& a, double p, bool secant = false, double smoothing = 0.0)
{
    double const n = norm(a);
    if (p == 1.0) return Mat2{{{0.0, 0.0}, {0.0, 0.0}}};
    if (smoothing == 0.0 && n <= detail::zero_gradient) return Mat2{{{0.0, 0.0}, {0.0, 0.0}}};
    double const r = std::hypot(n, smoothing);
    double const base = (p - 1.0) * std::pow(r, p - 2.0);
    double const perp = std::max(base, detail::eigen_floor);
    double const ratio = n / r;
    double const par = secant ? perp : std::max(base * (1.0 + (p - 2.0) * ratio * ratio), detail::eigen_floor);
    Vec2 const e = n > 0.0 ? Vec2{a[0] / n, a[1] / n} : Vec2{1.0, 0.0};
    Mat2 m;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) m[i][j] = (i == j ? perp : 0.0) + (par - perp) * e[i] * e[j];
    }
    return m;
}

inline Vec2 total_flux(Vec2 const& a, OperatorConfig const& cfg)
{
    Vec2 const z = mc_flux(a);
    Vec2 const q = p_flux(a, cfg.p, cfg.smoothing);
    return {z[0] + q[0], z[1] + q[1]};
}

/// Per-sample energy density sqrt(1+|a|^2) + ((p-1)/p)|a|^p (smoothed form when e > 0).
inline double flux_potential(Vec2 const& a, OperatorConfig const& cfg)
{
    double const n = norm(a);
    double e = std::hypot(1.0, n);
    if (cfg.p > 1.0 && n > 0.0) {
        double const eps = cfg.smoothing;
        // e^p((1 + n^2/e^2)^{p/2} - 1) without cancellation at small n.
        double const t = (eps > 0.0 && n < 1e100 * eps) ? std::pow(eps, cfg.p) * std::expm1(0.5 * cfg.p * std::log1p((n / eps) * (n / eps)))
                                                        : std::pow(n, cfg.p);
        e += (cfg.p - 1.0) / cfg.p * t;
    }
    return e;
}

namespace detail {

// out[i] += sum_s w_s F_s . d(Du_s)/du_i  (the transpose of the weighted gradient).
inline void accumulate_transpose(Grid const& g, std::span<const Vec2> flux, std::vector<double>& out)
{
    auto const samples = g.samples();
    auto const ws = g.sample_weights();
    for (std::size_t s = 0; s < samples.size(); ++s) {
        for (int j = 0; j < g.axes(); ++j) {
            double const c = ws[s] * flux[s][j] / g.spacing(j);
            out[samples[s].to[j]] += c;
            out[samples[s].from[j]] -= c;
        }
    }
}

} // namespace detail

/**
 * Discrete -div F: the node-weighted transpose of `gradient`, so that
 * sum_i w_i (-div F)_i v_i = sum_s w_s F_s . (Dv)_s holds for every v.
 */
inline ScalarField negative_divergence(VectorField const& flux)
{
    auto const& g = flux.grid();
    std::vector<double> out(g.node_count(), 0.0);
    detail::accumulate_transpose(g, flux.values(), out);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] /= g.weight(k);
    return ScalarField(flux.grid_ptr(), std::move(out));
}

/// A_p(u) = -div(z(Du)) - (p-1) div(|Du|^{p-2} Du).
inline ScalarField apply_operator(ScalarField const& u, OperatorConfig const& cfg)
{
    auto const gu = gradient(u);
    VectorField flux(u.grid_ptr());
    for (std::size_t s = 0; s < gu.size(); ++s) flux[s] = total_flux(gu[s], cfg);
    return negative_divergence(flux);
}

/**
 * J_p(u) = int sqrt(1+|Du|^2) + ((p-1)/p) int |Du|^p + int G_p(u) - int f_p u,
 * with g_p, f_p truncated at 1/(p-1) when p > 1.
 */
inline double energy(ScalarField const& u, ScalarField const& f, AbsorptionSpec const& g, OperatorConfig const& cfg)
{
    auto const& grid = u.grid();
    TruncatedAbsorption const gp(g, cfg.cap());
    double const cap = cfg.cap();
    double e = 0.0;
    auto const samples = grid.samples();
    auto const ws = grid.sample_weights();
    for (std::size_t s = 0; s < samples.size(); ++s) {
        e += ws[s] * flux_potential(sample_gradient(grid, samples[s], u.values()), cfg);
    }
    for (std::size_t k = 0; k < u.size(); ++k) {
        double const fk = std::isfinite(cap) ? std::max(-cap, std::min(f[k], cap)) : f[k];
        e += grid.weight(k) * (gp.antiderivative(u[k]) - fk * u[k]);
    }
    return e;
}

/// Pointwise g_p(u) + A_p(u) - f_p at every node (the nodal gradient of J_p divided by the node weight).
inline ScalarField residual(ScalarField const& u, ScalarField const& f, AbsorptionSpec const& g, OperatorConfig const& cfg)
{
    TruncatedAbsorption const gp(g, cfg.cap());
    double const cap = cfg.cap();
    auto out = apply_operator(u, cfg);
    for (std::size_t k = 0; k < u.size(); ++k) {
        double const fk = std::isfinite(cap) ? std::max(-cap, std::min(f[k], cap)) : f[k];
        out[k] += gp.value(u[k]) - fk;
    }
    return out;
}

/**
 * sqrt(1+|a|^2) - sqrt(1-|z|^2) - z.a at every sample. Evaluated as
 * (s/2)|w - y|^2 with w = (a, 1)/s, y = (z, sqrt(1-|z|^2)), s = sqrt(1+|a|^2),
 * which avoids cancellation for steep gradients.
 */
inline std::vector<double> pairing_defect(VectorField const& z, VectorField const& gu)
{
    if (z.size() != gu.size()) throw std::invalid_argument("pairing_defect: fields differ in size");
    std::vector<double> out(z.size());
    for (std::size_t s = 0; s < z.size(); ++s) {
        double const nz = norm(z[s]);
        if (nz > 1.0 + 1e-12) throw std::domain_error("pairing_defect: |z| exceeds 1");
        double const c = std::sqrt(std::max(0.0, 1.0 - nz * nz));
        double const sa = std::hypot(1.0, norm(gu[s]));
        double const d0 = gu[s][0] / sa - z[s][0];
        double const d1 = gu[s][1] / sa - z[s][1];
        double const d2 = 1.0 / sa - c;
        out[s] = 0.5 * sa * (d0 * d0 + d1 * d1 + d2 * d2);
    }
    return out;
}

} // namespace pmc
