#pragma once

#include "pmc/fields.hpp"
#include "pmc/nonlinearity.hpp"
#include "pmc/operators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pmc {

inline double linf_norm(ScalarField const& u)
{
    double m = 0.0;
    for (double v : u.values()) m = std::max(m, std::abs(v));
    return m;
}

inline double lq_norm(ScalarField const& u, double q)
{
    if (!(q >= 1.0)) throw std::invalid_argument("lq_norm: q must be >= 1");
    double s = 0.0;
    auto const w = u.grid().weights();
    for (std::size_t k = 0; k < u.size(); ++k) s += w[k] * std::pow(std::abs(u[k]), q);
    return std::pow(s, 1.0 / q);
}

/// Discrete total variation: sum of |Du| over gradient samples.
inline double bv_seminorm(ScalarField const& u)
{
    auto const gu = gradient(u);
    auto const w = u.grid().sample_weights();
    double s = 0.0;
    for (std::size_t k = 0; k < gu.size(); ++k) s += w[k] * norm(gu[k]);
    return s;
}

/// Graph area int sqrt(1 + |Du|^2).
inline double area_measure(ScalarField const& u)
{
    auto const gu = gradient(u);
    auto const w = u.grid().sample_weights();
    double s = 0.0;
    for (std::size_t k = 0; k < gu.size(); ++k) s += w[k] * std::hypot(1.0, norm(gu[k]));
    return s;
}

/// Measure of {|u| > k} from nodal indicators.
inline double level_set_measure(ScalarField const& u, double k)
{
    double s = 0.0;
    auto const w = u.grid().weights();
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (std::abs(u[i]) > k) s += w[i];
    }
    return s;
}

/**
 * sup_t t |{|f| > t}|^{1/N} over the sample levels: with values sorted in
 * decreasing order, level t just below f_(m) sees the mass of the first m nodes.
 */
inline double weak_LN_norm(ScalarField const& f, int dimension)
{
    if (dimension < 2) throw std::invalid_argument("weak_LN_norm: N must be >= 2");
    auto const w = f.grid().weights();
    std::vector<std::size_t> order(f.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(f[a]) > std::abs(f[b]); });
    double mass = 0.0;
    double best = 0.0;
    for (std::size_t m = 0; m < order.size(); ++m) {
        mass += w[order[m]];
        // Ties share a level; evaluate once the whole tie group is counted.
        if (m + 1 < order.size() && std::abs(f[order[m + 1]]) == std::abs(f[order[m]])) continue;
        best = std::max(best, std::abs(f[order[m]]) * std::pow(mass, 1.0 / dimension));
    }
    return best;
}

inline double weak_LN_norm(DatumSpec const& f, GridPtr const& grid, int dimension)
{
    return weak_LN_norm(f.sample(grid), dimension);
}

struct Thresholds {
    double strong;  // N omega_N^{1/N}: L^N smallness threshold
    double weak;    // (N-1) omega_N^{1/N}: inverse of the best constant of BV into L^{N/(N-1),1}
};

inline Thresholds thresholds(int dimension)
{
    if (dimension < 2) throw std::invalid_argument("thresholds: N must be >= 2");
    double const root = std::pow(unit_ball_volume(dimension), 1.0 / dimension);
    return {dimension * root, (dimension - 1) * root};
}

/// A sub-interval, sub-rectangle, or sub-annulus [lower[0], upper[0]] in r for radial grids.
struct ScanRegion {
    Point lower{0.0, 0.0};
    Point upper{0.0, 0.0};
};

struct ScanResult {
    double worst_ratio = 0.0;
    ScanRegion witness;
    std::vector<double> ratios;
};

/// Centered concentric regions at `scales` sizes; on radial grids, balls or annuli growing from r_min.
inline std::vector<ScanRegion> default_scan_family(Grid const& g, int scales = 20)
{
    std::vector<ScanRegion> out;
    for (int j = 1; j <= scales; ++j) {
        double const t = static_cast<double>(j) / scales;
        ScanRegion r;
        if (g.kind() == GridKind::radial) {
            r.lower[0] = g.lower();
            r.upper[0] = g.lower() + t * (g.upper() - g.lower());
        } else {
            for (int a = 0; a < g.axes(); ++a) {
                double const c = 0.5 * (g.lower(a) + g.upper(a));
                double const half = 0.5 * t * (g.upper(a) - g.lower(a));
                r.lower[a] = c - half;
                r.upper[a] = c + half;
            }
        }
        out.push_back(r);
    }
    return out;
}

namespace detail {

inline constexpr std::array<double, 5> gl_nodes{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> gl_weights{0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                                                  0.2369268850561891};

template <class F>
double gauss_1d(F const& f, double a, double b, int panels)
{
    double sum = 0.0;
    double const w = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double const c = a + (p + 0.5) * w;
        for (std::size_t q = 0; q < gl_nodes.size(); ++q) sum += 0.5 * w * gl_weights[q] * f(c + 0.5 * w * gl_nodes[q]);
    }
    return sum;
}

// Multilinear interpolation of nodal values.
inline double interpolate(ScalarField const& f, Point const& x)
{
    auto const& g = f.grid();
    auto locate = [&](int a) {
        double const t = std::clamp((x[a] - g.lower(a)) / g.spacing(a), 0.0, static_cast<double>(g.extent(a) - 1));
        std::size_t i = std::min(static_cast<std::size_t>(t), g.extent(a) - 2);
        return std::pair<std::size_t, double>{i, t - static_cast<double>(i)};
    };
    auto const [i, tx] = locate(0);
    if (g.axes() == 1) return (1.0 - tx) * f[i] + tx * f[i + 1];
    auto const [j, ty] = locate(1);
    return (1.0 - tx) * (1.0 - ty) * f[g.index(i, j)] + tx * (1.0 - ty) * f[g.index(i + 1, j)] + (1.0 - tx) * ty * f[g.index(i, j + 1)]
         + tx * ty * f[g.index(i + 1, j + 1)];
}

} // namespace detail

/**
 * max over the family of |int_A f| / Per(A). A ratio >= 1 means the problem
 * without absorption has no solution for this datum. Analytic data are
 * integrated by composite Gauss-Legendre; sampled data through multilinear
 * interpolation.
 */
inline ScanResult necessary_condition_scan(DatumSpec const& f, GridPtr const& grid, std::vector<ScanRegion> const& family)
{
    auto const& g = *grid;
    std::optional<ScalarField> sampled;
    if (!f.is_analytic()) sampled = f.sample(grid);
    auto value = [&](Point const& x) { return sampled ? detail::interpolate(*sampled, x) : f.evaluate(x); };
    constexpr int panels = 64;

    ScanResult out;
    for (auto const& A : family) {
        double integral = 0.0;
        double perimeter = 0.0;
        switch (g.kind()) {
        case GridKind::interval:
            integral = detail::gauss_1d([&](double x) { return value({x, 0.0}); }, A.lower[0], A.upper[0], panels);
            perimeter = 2.0;
            break;
        case GridKind::rectangle:
            integral = detail::gauss_1d(
                [&](double y) { return detail::gauss_1d([&](double x) { return value({x, y}); }, A.lower[0], A.upper[0], panels); },
                A.lower[1], A.upper[1], panels);
            perimeter = 2.0 * ((A.upper[0] - A.lower[0]) + (A.upper[1] - A.lower[1]));
            break;
        case GridKind::radial: {
            int const n = g.dimension();
            double const area = unit_sphere_area(n);
            integral = area * detail::gauss_1d([&](double r) { return value({r, 0.0}) * std::pow(r, n - 1); }, A.lower[0], A.upper[0], panels);
            perimeter = area * (std::pow(A.upper[0], n - 1) + (A.lower[0] > 0.0 ? std::pow(A.lower[0], n - 1) : 0.0));
            break;
        }
        }
        double const ratio = perimeter > 0.0 ? std::abs(integral) / perimeter : 0.0;
        out.ratios.push_back(ratio);
        if (ratio > out.worst_ratio || out.ratios.size() == 1) {
            out.worst_ratio = ratio;
            out.witness = A;
        }
    }
    return out;
}

inline ScanResult necessary_condition_scan(DatumSpec const& f, GridPtr const& grid)
{
    return necessary_condition_scan(f, grid, default_scan_family(*grid));
}

struct StampacchiaRow {
    double k = 0.0;
    double level_measure = 0.0;      // |{|u| > k}|
    double remainder_variation = 0.0;  // int |D G_k(u)|
};

/// Distribution-function table; measures are forced nonincreasing in k.
inline std::vector<StampacchiaRow> stampacchia_table(ScalarField const& u, std::vector<double> const& levels)
{
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0) || (i > 0 && !(levels[i] > levels[i - 1]))) {
            throw std::invalid_argument("stampacchia_table: levels must be positive and increasing");
        }
    }
    std::vector<StampacchiaRow> out;
    for (double k : levels) {
        StampacchiaRow row;
        row.k = k;
        row.level_measure = level_set_measure(u, k);
        if (!out.empty()) row.level_measure = std::min(row.level_measure, out.back().level_measure);
        std::vector<double> gk(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) gk[i] = remainder(u[i], k);
        row.remainder_variation = bv_seminorm(ScalarField(u.grid_ptr(), std::move(gk)));
        out.push_back(row);
    }
    return out;
}

struct EquintResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = true;
};

/// int_{|u|>=k} |g(u)| <= int_{|u|>=k} |f| up to a quadrature tolerance 1e-8 + 1e-3 rhs.
inline EquintResult equint_check(ScalarField const& u, AbsorptionSpec const& g, ScalarField const& f, double k)
{
    if (!(k > 0.0)) throw std::invalid_argument("equint_check: k must be positive");
    if (u.size() != f.size()) throw std::invalid_argument("equint_check: fields differ in size");
    EquintResult r;
    auto const w = u.grid().weights();
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (std::abs(u[i]) >= k) {
            r.lhs += w[i] * std::abs(g(u[i]));
            r.rhs += w[i] * std::abs(f[i]);
        }
    }
    r.pass = r.lhs <= r.rhs + 1e-8 + 1e-3 * r.rhs;
    return r;
}

struct DiagnosticsBundle {
    std::vector<std::pair<double, double>> lq;  // (q, norm)
    double linf = 0.0;
    double weak_ln = 0.0;
    double bv = 0.0;
    double area = 0.0;
    std::vector<StampacchiaRow> levels;
    double pairing_defect_max = 0.0;
    std::vector<std::pair<double, EquintResult>> equint;
    ScanResult scan;
    Thresholds constants{0.0, 0.0};
};

/// Everything the library can measure about a solution (u, z) for datum f.
inline DiagnosticsBundle compute_diagnostics(ScalarField const& u, VectorField const& z, DatumSpec const& f, AbsorptionSpec const& g,
                                             std::vector<double> const& q_list = {1.0, 2.0},
                                             std::vector<double> const& k_levels = {0.1, 0.5, 1.0, 2.0})
{
    DiagnosticsBundle b;
    int const n = u.grid().dimension() < 2 ? 2 : u.grid().dimension();
    auto const fs = f.sample(u.grid_ptr());
    for (double q : q_list) b.lq.emplace_back(q, lq_norm(u, q));
    b.linf = linf_norm(u);
    b.weak_ln = weak_LN_norm(fs, n);
    b.bv = bv_seminorm(u);
    b.area = area_measure(u);
    b.levels = stampacchia_table(u, k_levels);
    auto const defect = pairing_defect(z, gradient(u));
    for (double d : defect) b.pairing_defect_max = std::max(b.pairing_defect_max, std::abs(d));
    for (double k : k_levels) b.equint.emplace_back(k, equint_check(u, g, fs, k));
    b.scan = necessary_condition_scan(f, u.grid_ptr());
    b.constants = thresholds(n);
    return b;
}

} // namespace pmc
