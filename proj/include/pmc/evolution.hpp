#pragma once

#include "pmc/fields.hpp"
#include "pmc/nonlinearity.hpp"
#include "pmc/solver.hpp"

#include <stdexcept>
#include <vector>

namespace pmc {

struct EvolutionConfig {
    double lambda = 0.05;
    int steps = 40;
    /// Schedule of every resolvent solve; a stop tolerance of 0 fixes the final exponent for all steps.
    ContinuationSchedule schedule = ContinuationSchedule::geometric(20, 0.0);
    NewtonOptions newton{};

    void validate() const
    {
        if (!(lambda > 0.0)) throw std::invalid_argument("EvolutionConfig: lambda must be positive");
        if (steps < 1) throw std::invalid_argument("EvolutionConfig: at least one step required");
        schedule.validate();
        newton.validate();
    }
};

/// v with v - lambda div(Dv/sqrt(1+|Dv|^2)) = w and v = 0 on the boundary: g(s) = s/lambda, datum w/lambda.
inline ScalarField resolvent_step(ScalarField const& w, double lambda, ContinuationSchedule const& sched, NewtonOptions const& opts)
{
    if (!(lambda > 0.0)) throw std::invalid_argument("resolvent_step: lambda must be positive");
    std::vector<double> d(w.values().begin(), w.values().end());
    for (double& x : d) x /= lambda;
    Problem pr{w.grid_ptr(), DatumSpec(ScalarField(w.grid_ptr(), std::move(d))), linear_absorption(1.0 / lambda), {}};
    return continue_to_limit(pr, sched, opts, w).u;
}

/// Implicit Euler trajectory u^0, ..., u^M with u^{m+1} = resolvent_step(u^m).
inline std::vector<ScalarField> evolve(ScalarField const& u0, EvolutionConfig const& cfg)
{
    cfg.validate();
    std::vector<ScalarField> traj{u0};
    traj.reserve(cfg.steps + 1);
    for (int m = 0; m < cfg.steps; ++m) traj.push_back(resolvent_step(traj.back(), cfg.lambda, cfg.schedule, cfg.newton));
    return traj;
}

} // namespace pmc
