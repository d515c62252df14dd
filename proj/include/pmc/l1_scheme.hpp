#pragma once

#include "pmc/diagnostics.hpp"
#include "pmc/fields.hpp"
#include "pmc/nonlinearity.hpp"
#include "pmc/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmc {

struct L1Options {
    std::vector<double> caps{1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
    std::vector<double> k_levels{1.0, 2.0, 4.0, 8.0};
    std::vector<double> equint_levels{0.1, 0.5, 1.0, 2.0};
    double k_ref = 1.0;        // Cauchy check restricted to {|u_n| <= k_ref}
    double tolerance = 1e-5;

    void validate() const
    {
        if (caps.empty()) throw std::invalid_argument("L1Options: empty cap schedule");
        for (std::size_t i = 0; i < caps.size(); ++i) {
            if (!(caps[i] > 0.0) || (i > 0 && !(caps[i] > caps[i - 1]))) {
                throw std::invalid_argument("L1Options: caps must be positive and increasing");
            }
        }
        if (k_levels.empty()) throw std::invalid_argument("L1Options: no truncation levels");
        if (!(k_ref > 0.0)) throw std::invalid_argument("L1Options: k_ref must be positive");
        if (!(tolerance > 0.0)) throw std::invalid_argument("L1Options: tolerance must be positive");
    }
};

struct L1Record {
    double n = 0.0;
    std::vector<double> truncated_bv;  // ||T_k(u_n)||_BV, one per k level
    double bv_slope = 0.0;             // least-squares slope of truncated_bv against k
    std::vector<std::pair<double, EquintResult>> equint;
    double restricted_increment = std::numeric_limits<double>::quiet_NaN();
    double datum_l1 = 0.0;       // int |f_n|
    double absorption_l1 = 0.0;  // int |g(u_n)|
    std::size_t continuation_steps = 0;
};

struct L1Report {
    SolveReport last;
    std::vector<L1Record> records;
    bool converged = false;
    std::vector<std::string> warnings;
};

/// ||v||_BV = int |v| + int |Dv| on the grid.
inline double bv_norm(ScalarField const& v)
{
    return lq_norm(v, 1.0) + bv_seminorm(v);
}

inline double fitted_slope(std::vector<double> const& x, std::vector<double> const& y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fitted_slope: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

inline ScalarField truncated(ScalarField const& u, double k)
{
    std::vector<double> v(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = truncate(u[i], k);
    return ScalarField(u.grid_ptr(), std::move(v));
}

/**
 * Chain of continuation solves with data T_n(f) for increasing caps n, warm
 * started from the previous level. Stops once successive solutions differ by
 * less than the tolerance on the nodes where both satisfy |u| <= k_ref.
 */
inline L1Report solve_l1(Problem const& problem, ContinuationSchedule const& sched, NewtonOptions const& opts, L1Options const& options = {})
{
    options.validate();
    L1Report out;
    if (!problem.absorption.flags().coercive) out.warnings.push_back("absorption '" + problem.absorption.name() + "' is not coercive");

    std::optional<ScalarField> previous;
    for (double n : options.caps) {
        Problem pn = problem;
        pn.datum = datum_trunc(problem.datum, n);
        auto rep = continue_to_limit(pn, sched, opts, previous);

        L1Record rec;
        rec.n = n;
        rec.continuation_steps = rep.steps.size();
        for (double k : options.k_levels) rec.truncated_bv.push_back(bv_norm(truncated(rep.u, k)));
        if (options.k_levels.size() >= 2) rec.bv_slope = fitted_slope(options.k_levels, rec.truncated_bv);
        auto const fn = pn.datum.sample(problem.grid);
        for (double k : options.equint_levels) rec.equint.emplace_back(k, equint_check(rep.u, problem.absorption, fn, k));
        rec.datum_l1 = lq_norm(fn, 1.0);
        std::vector<double> gu(rep.u.size());
        for (std::size_t i = 0; i < gu.size(); ++i) gu[i] = std::abs(problem.absorption(rep.u[i]));
        rec.absorption_l1 = integrate(ScalarField(problem.grid, std::move(gu)));

        bool settled = false;
        if (previous) {
            double diff = 0.0;
            for (std::size_t i = 0; i < rep.u.size(); ++i) {
                if (std::abs(rep.u[i]) <= options.k_ref && std::abs((*previous)[i]) <= options.k_ref) {
                    diff = std::max(diff, std::abs(rep.u[i] - (*previous)[i]));
                }
            }
            rec.restricted_increment = diff;
            settled = diff < options.tolerance;
        }
        out.records.push_back(std::move(rec));
        previous = rep.u;
        out.last = std::move(rep);
        if (settled) {
            out.converged = true;
            break;
        }
    }
    return out;
}

} // namespace pmc
