#pragma once

#include "pmc/fields.hpp"
#include "pmc/nonlinearity.hpp"
#include "pmc/operators.hpp"
#include "pmc/solver.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace pmc {

/**
 * Closed-form radial solution u(r) = r^{-alpha} - 1 of
 * u - div(Du/sqrt(1+|Du|^2)) = f_alpha on the unit ball of R^N, N >= 3,
 * 0 < alpha < N-1. The datum f_alpha sits exactly at the critical weak-L^N
 * norm (N-1) omega_N^{1/N}, and u is unbounded at the origin.
 */
class RadialExample {
public:
    RadialExample(double alpha, int dimension) : alpha_(alpha), n_(dimension)
    {
        if (n_ < 3) throw std::invalid_argument("RadialExample: dimension must be at least 3");
        if (!(alpha_ > 0.0 && alpha_ < n_ - 1.0)) throw std::invalid_argument("RadialExample: alpha must lie in (0, N-1)");
    }

    double alpha() const { return alpha_; }
    int dimension() const { return n_; }

    double u(double r) const { return std::pow(r, -alpha_) - 1.0; }
    double du(double r) const { return -alpha_ * std::pow(r, -alpha_ - 1.0); }

    /// v_alpha as written, alpha r^{-a-1}(alpha^2 r^{-2a-2} - c) / (1 + alpha^2 r^{-2a-2})^{3/2}.
    double v_direct(double r) const
    {
        double const c = (alpha_ + 2.0 - n_) / (n_ - 1.0);
        double const q = alpha_ * alpha_ * std::pow(r, -2.0 * alpha_ - 2.0);
        return alpha_ * std::pow(r, -alpha_ - 1.0) * (q - c) / std::pow(1.0 + q, 1.5);
    }

    /// Same quantity with r^{-2a-2} factored out: alpha (alpha^2 - c t) / (alpha^2 + t)^{3/2}, t = r^{2a+2}.
    double v_scaled(double r) const
    {
        double const c = (alpha_ + 2.0 - n_) / (n_ - 1.0);
        double const t = std::pow(r, 2.0 * alpha_ + 2.0);
        double const a2 = alpha_ * alpha_;
        return alpha_ * (a2 - c * t) / std::pow(a2 + t, 1.5);
    }

    double v(double r) const { return r < 0.1 ? v_scaled(r) : v_direct(r); }

    double f(double r) const
    {
        return (n_ - 1.0) / r * (v(r) + (std::pow(r, 1.0 - alpha_) - r) / (n_ - 1.0));
    }

private:
    double alpha_;
    int n_;
};

inline void require_radial(Grid const& g, bool positive_inner = true)
{
    if (g.kind() != GridKind::radial) throw std::invalid_argument("expected a radial grid");
    if (positive_inner && !(g.lower() > 0.0)) throw std::invalid_argument("expected an annulus with r_min > 0");
}

/// Samples of (u_alpha, f_alpha) on an annulus.
inline std::pair<ScalarField, ScalarField> example_fields(double alpha, int dimension, GridPtr const& grid)
{
    RadialExample const ex(alpha, dimension);
    require_radial(*grid);
    if (grid->dimension() != dimension) throw std::invalid_argument("example_fields: grid dimension differs from N");
    auto u = ScalarField::sample(grid, [&](Point const& x) { return ex.u(x[0]); });
    auto f = ScalarField::sample(grid, [&](Point const& x) { return ex.f(x[0]); });
    return {std::move(u), std::move(f)};
}

/// -r^{1-N}(r^{N-1} u'/sqrt(1+u'^2))' at every node (boundary entries are not meaningful).
inline ScalarField radial_apply(ScalarField const& u)
{
    require_radial(u.grid(), false);
    return apply_operator(u, OperatorConfig{1.0});
}

/// Largest |radial_apply(u) + u - f| over interior nodes.
inline double manufactured_residual(ScalarField const& u, ScalarField const& f)
{
    auto const au = radial_apply(u);
    double m = 0.0;
    for (std::size_t k : u.grid().interior_nodes()) m = std::max(m, std::abs(au[k] + u[k] - f[k]));
    return m;
}

/**
 * Continuation solve on a radial grid with Dirichlet values at r_min (when
 * r_min > 0) and r_max. With r_min = 0 the origin is an ordinary node and the
 * symmetry condition u'(0) = 0 holds naturally.
 */
inline SolveReport solve_radial_bvp(DatumSpec const& f, AbsorptionSpec const& g, GridPtr const& grid, double inner, double outer,
                                    ContinuationSchedule const& sched, NewtonOptions const& opts)
{
    require_radial(*grid, false);
    if (!std::isfinite(inner) || !std::isfinite(outer)) throw std::invalid_argument("solve_radial_bvp: boundary values must be finite");
    Problem pr{grid, f, g, std::vector<double>(grid->node_count(), 0.0)};
    if (grid->lower() > 0.0) pr.boundary_values.front() = inner;
    pr.boundary_values.back() = outer;
    // Linear interpolation of the boundary data as starting guess.
    auto init = ScalarField::sample(grid, [&](Point const& x) {
        double const t = (x[0] - grid->lower()) / (grid->upper() - grid->lower());
        return grid->lower() > 0.0 ? (1.0 - t) * inner + t * outer : outer;
    });
    return continue_to_limit(pr, sched, opts, init);
}

} // namespace pmc
