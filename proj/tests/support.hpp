#pragma once

#include "pmc/pmc.hpp"

#include <random>

namespace pmc::test {

inline GridPtr interval(double a, double b, std::size_t n)
{
    return build_grid({GridKind::interval, {a, 0.0}, {b, 0.0}, {n, 1}, 1});
}

inline GridPtr rectangle(std::size_t nx, std::size_t ny, Point lo = {0.0, 0.0}, Point hi = {1.0, 1.0})
{
    return build_grid({GridKind::rectangle, lo, hi, {nx, ny}, 2});
}

inline GridPtr radial(double rmin, double rmax, std::size_t n, int dim)
{
    return build_grid({GridKind::radial, {rmin, 0.0}, {rmax, 0.0}, {n, 1}, dim});
}

inline Problem zero_dirichlet(GridPtr grid, DatumSpec f, AbsorptionSpec g)
{
    return Problem{std::move(grid), std::move(f), std::move(g), {}};
}

/// Uniform values in [lo, hi] at every node, zero on the boundary when asked.
inline ScalarField random_field(GridPtr const& grid, std::mt19937_64& rng, double lo, double hi, bool zero_boundary)
{
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(grid->node_count());
    for (auto& x : v) x = dist(rng);
    if (zero_boundary) {
        for (std::size_t k : grid->boundary_nodes()) v[k] = 0.0;
    }
    return ScalarField(grid, std::move(v));
}

inline double sup_diff(ScalarField const& a, ScalarField const& b)
{
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

} // namespace pmc::test
