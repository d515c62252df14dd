#pragma once

#include "pmc/fields.hpp"
#include "pmc/nonlinearity.hpp"
#include "pmc/operators.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmc {

struct NewtonOptions {
    double tolerance = 1e-10;  // discrete L2 norm of the pointwise residual
    int max_iterations = 200;
    double backtrack = 0.5;
    double min_step = 1e-12;
    double smoothing = 1e-8;  // p-term smoothing scale, see OperatorConfig

    void validate() const
    {
        if (!(tolerance > 0.0)) throw std::invalid_argument("NewtonOptions: tolerance must be positive");
        if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("NewtonOptions: backtracking factor must lie in (0,1)");
        if (max_iterations < 1) throw std::invalid_argument("NewtonOptions: max_iterations must be positive");
        if (!(min_step > 0.0)) throw std::invalid_argument("NewtonOptions: min_step must be positive");
        if (!(smoothing >= 0.0)) throw std::invalid_argument("NewtonOptions: smoothing must be nonnegative");
    }
};

/// Decreasing exponents p_k > 1 and the sup-norm stop tolerance between successive solutions.
struct ContinuationSchedule {
    std::vector<double> p_values;
    double stop_tolerance = 1e-6;

    /// p_k = 1 + 2^{-k}, k = 0..k_max.
    static ContinuationSchedule geometric(int k_max = 24, double stop_tolerance = 1e-6)
    {
        ContinuationSchedule s;
        for (int k = 0; k <= k_max; ++k) s.p_values.push_back(1.0 + std::ldexp(1.0, -k));
        s.stop_tolerance = stop_tolerance;
        return s;
    }

    void validate() const
    {
        if (p_values.empty()) throw std::invalid_argument("ContinuationSchedule: empty schedule");
        for (std::size_t k = 0; k < p_values.size(); ++k) {
            if (!(p_values[k] > 1.0)) throw std::invalid_argument("ContinuationSchedule: every p must exceed 1");
            if (k > 0 && !(p_values[k] < p_values[k - 1])) throw std::invalid_argument("ContinuationSchedule: p must decrease strictly");
        }
        if (stop_tolerance < 0.0) throw std::invalid_argument("ContinuationSchedule: negative stop tolerance");
    }
};

/**
 * A Dirichlet problem g(u) - div(Du/sqrt(1+|Du|^2)) = f. Boundary values
 * default to zero; when given, `boundary_values` has one entry per node and
 * only the boundary entries are read.
 */
struct Problem {
    GridPtr grid;
    DatumSpec datum;
    AbsorptionSpec absorption;
    std::vector<double> boundary_values;
};

class SolverError : public std::runtime_error {
public:
    SolverError(std::string const& what, std::vector<double> last_iterate)
        : std::runtime_error(what), last_(std::move(last_iterate))
    {
    }
    std::vector<double> const& last_iterate() const { return last_; }

private:
    std::vector<double> last_;
};

class NonConvergence : public SolverError {
public:
    using SolverError::SolverError;
};

class SingularLinearization : public SolverError {
public:
    using SolverError::SolverError;
};

struct NewtonStats {
    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    double energy = 0.0;
    std::vector<double> energy_history;  // J_p after each accepted step, starting with the initial guess
    bool precision_limited = false;      // stopped because the Newton step fell below rounding of u
};

struct RegularizedSolution {
    ScalarField u;
    VectorField z;
    NewtonStats stats;
};

struct StepRecord {
    double p = 0.0;
    int newton_iterations = 0;
    double residual = 0.0;
    double sup_norm = 0.0;
    double p_energy = 0.0;  // (p-1) int |Du_p|^p
    double bv = 0.0;        // int |Du_p|
    double energy = 0.0;    // J_p(u_p)
    double increment = std::numeric_limits<double>::quiet_NaN();  // sup |u_p - u_prev|
};

struct SolveReport {
    ScalarField u;
    VectorField z;
    std::vector<StepRecord> steps;
    bool converged = false;
};

class ScheduleExhausted : public std::runtime_error {
public:
    explicit ScheduleExhausted(SolveReport report)
        : std::runtime_error("continuation schedule exhausted before successive solutions settled"), report_(std::move(report))
    {
    }
    SolveReport const& report() const { return report_; }

private:
    SolveReport report_;
};

namespace detail {

/// Assembly of J_p, its nodal gradient and Hessian over the interior unknowns.
class RegularizedSystem {
public:
    RegularizedSystem(Problem const& problem, double p, double smoothing = 0.0)
        : grid_(*problem.grid), cfg_(OperatorConfig::with_exponent(p, smoothing)), gp_(problem.absorption, cfg_.cap())
    {
        auto const f = problem.datum.sample(problem.grid);
        double const cap = cfg_.cap();
        fp_.resize(f.size());
        for (std::size_t k = 0; k < f.size(); ++k) fp_[k] = std::isfinite(cap) ? std::max(-cap, std::min(f[k], cap)) : f[k];
        unknown_.assign(grid_.node_count(), -1);
        int next = 0;
        for (std::size_t k : grid_.interior_nodes()) unknown_[k] = next++;
        unknowns_ = next;
    }

    int unknowns() const { return unknowns_; }
    int unknown(std::size_t node) const { return unknown_[node]; }
    OperatorConfig const& config() const { return cfg_; }

    double energy(std::vector<double> const& u) const
    {
        double e = 0.0;
        auto const samples = grid_.samples();
        auto const ws = grid_.sample_weights();
        for (std::size_t s = 0; s < samples.size(); ++s) e += ws[s] * flux_potential(sample_gradient(grid_, samples[s], u), cfg_);
        for (std::size_t k = 0; k < u.size(); ++k) e += grid_.weight(k) * (gp_.antiderivative(u[k]) - fp_[k] * u[k]);
        return e;
    }

    /**
     * Weighted residual (dJ/du_i) on the unknowns and, optionally, the Hessian
     * triplets; `secant` receives the same matrix with the secant p-term Jacobian.
     */
    void assemble(std::vector<double> const& u, Eigen::VectorXd& grad, std::vector<Eigen::Triplet<double>>* triplets,
                  std::vector<Eigen::Triplet<double>>* secant = nullptr) const
    {
        grad.setZero(unknowns_);
        if (triplets) triplets->clear();
        if (secant) secant->clear();
        for (std::size_t k : grid_.interior_nodes()) {
            int const i = unknown_[k];
            grad[i] += grid_.weight(k) * (gp_.value(u[k]) - fp_[k]);
            if (triplets) triplets->emplace_back(i, i, grid_.weight(k) * gp_.derivative(u[k]));
            if (secant) secant->emplace_back(i, i, grid_.weight(k) * gp_.derivative(u[k]));
        }
        auto const samples = grid_.samples();
        auto const ws = grid_.sample_weights();
        std::array<std::size_t, 4> nodes{};
        std::array<Vec2, 4> coef{};
        for (std::size_t s = 0; s < samples.size(); ++s) {
            auto const& smp = samples[s];
            Vec2 const a = sample_gradient(grid_, smp, u);
            Vec2 const flux = total_flux(a, cfg_);
            int count = 0;
            auto add = [&](std::size_t node, int comp, double c) {
                for (int m = 0; m < count; ++m) {
                    if (nodes[m] == node) {
                        coef[m][comp] += c;
                        return;
                    }
                }
                nodes[count] = node;
                coef[count] = Vec2{0.0, 0.0};
                coef[count][comp] = c;
                ++count;
            };
            for (int j = 0; j < grid_.axes(); ++j) {
                add(smp.to[j], j, 1.0 / grid_.spacing(j));
                add(smp.from[j], j, -1.0 / grid_.spacing(j));
            }
            for (int m = 0; m < count; ++m) {
                int const i = unknown_[nodes[m]];
                if (i >= 0) grad[i] += ws[s] * dot(flux, coef[m]);
            }
            if (!triplets) continue;
            Mat2 const jm = mc_flux_jacobian(a);
            add_block(*triplets, jm, p_flux_jacobian(a, cfg_.p, false, cfg_.smoothing), nodes, coef, count, ws[s]);
            if (secant) add_block(*secant, jm, p_flux_jacobian(a, cfg_.p, true, cfg_.smoothing), nodes, coef, count, ws[s]);
        }
    }

    void add_block(std::vector<Eigen::Triplet<double>>& out, Mat2 const& jm, Mat2 const& jp, std::array<std::size_t, 4> const& nodes,
                   std::array<Vec2, 4> const& coef, int count, double w) const
    {
        for (int m = 0; m < count; ++m) {
            int const i = unknown_[nodes[m]];
            if (i < 0) continue;
            Vec2 jc{0.0, 0.0};
            for (int r = 0; r < 2; ++r) jc[r] = (jm[r][0] + jp[r][0]) * coef[m][0] + (jm[r][1] + jp[r][1]) * coef[m][1];
            for (int l = 0; l < count; ++l) {
                int const jdx = unknown_[nodes[l]];
                if (jdx < 0) continue;
                out.emplace_back(jdx, i, w * dot(coef[l], jc));
            }
        }
    }

    /// Discrete L2 norm of the pointwise residual g_p + A_p - f_p over the interior.
    double residual_norm(Eigen::VectorXd const& grad) const
    {
        double sum = 0.0;
        for (std::size_t k : grid_.interior_nodes()) {
            double const r = grad[unknown_[k]];
            sum += r * r / grid_.weight(k);
        }
        return std::sqrt(sum);
    }

private:
    Grid const& grid_;
    OperatorConfig cfg_;
    TruncatedAbsorption gp_;
    std::vector<double> fp_;
    std::vector<int> unknown_;
    int unknowns_ = 0;
};

inline VectorField flux_of(ScalarField const& u)
{
    return mc_flux(gradient(u));
}

} // namespace detail

/**
 * Damped Newton for the regularized problem at exponent p > 1 with strong
 * Dirichlet values. Steps are accepted only if they do not increase J_p
 * beyond rounding, so the energy history is nonincreasing. Stops when the
 * residual meets the tolerance, or flags precision_limited when the iterate
 * can no longer improve in floating point: the Newton step drops below the
 * rounding level of u, or J_p stays flat to rounding while the residual stalls.
 * The latter happens near critical points of u once p is close to 1, where the
 * gradients of the regularized solution fall below the resolution of u.
 */
inline RegularizedSolution solve_regularized(Problem const& problem, double p, NewtonOptions const& opts,
                                             std::optional<ScalarField> const& init = std::nullopt)
{
    opts.validate();
    if (!(p > 1.0)) throw std::invalid_argument("solve_regularized: p must exceed 1");
    auto const& grid = *problem.grid;
    detail::RegularizedSystem const sys(problem, p, opts.smoothing);

    std::vector<double> u(grid.node_count(), 0.0);
    if (init) {
        if (init->size() != u.size()) throw std::invalid_argument("solve_regularized: initial guess has the wrong size");
        u.assign(init->values().begin(), init->values().end());
    }
    for (std::size_t k : grid.boundary_nodes()) u[k] = problem.boundary_values.empty() ? 0.0 : problem.boundary_values.at(k);

    NewtonStats stats;
    double e = sys.energy(u);
    stats.energy_history.push_back(e);

    Eigen::VectorXd grad;
    Eigen::VectorXd trial_grad;
    std::vector<Eigen::Triplet<double>> exact_triplets;
    std::vector<Eigen::Triplet<double>> secant_triplets;
    bool const use_secant = p < 2.0;
    Eigen::SparseMatrix<double> hessian(sys.unknowns(), sys.unknowns());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
    std::vector<double> trial(u.size());

    // Descent direction from one linearization: LDLT, then LU, then the weighted gradient.
    auto direction = [&](std::vector<Eigen::Triplet<double>> const& triplets) {
        hessian.setFromTriplets(triplets.begin(), triplets.end());
        if (!analyzed) {
            ldlt.analyzePattern(hessian);
            analyzed = true;
        }
        ldlt.factorize(hessian);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success) {
            step = ldlt.solve(-grad);
            if (ldlt.info() == Eigen::Success && step.allFinite() && step.dot(grad) < 0.0) return step;
        }
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(hessian);
        if (lu.info() != Eigen::Success) throw SingularLinearization("solve_regularized: Newton matrix is singular", u);
        step = lu.solve(-grad);
        if (lu.info() != Eigen::Success || !step.allFinite()) throw SingularLinearization("solve_regularized: linear solve failed", u);
        if (step.dot(grad) >= 0.0) {
            // Not a descent direction (non-monotone g): fall back to the weighted gradient.
            for (std::size_t k : grid.interior_nodes()) step[sys.unknown(k)] = -grad[sys.unknown(k)] / grid.weight(k);
        }
        return step;
    };
    auto try_step = [&](Eigen::VectorXd const& step, double t, double slope) {
        trial = u;
        for (std::size_t k : grid.interior_nodes()) trial[k] += t * step[sys.unknown(k)];
        double const et = sys.energy(trial);
        if (std::isfinite(et) && et <= e + 1e-4 * t * slope + 1e-14 * (1.0 + std::abs(e))) {
            u.swap(trial);
            e = et;
            return true;
        }
        return false;
    };
    auto negligible = [&](Eigen::VectorXd const& step) {
        double umax = 0.0;
        for (double v : u) umax = std::max(umax, std::abs(v));
        return step.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + umax);
    };

    // Stall detection: the energy flat to summation rounding over a window of accepted steps
    // while the residual fails to halve.
    constexpr int stall_window = 10;
    int flat_steps = 0;
    double window_residual = std::numeric_limits<double>::infinity();

    bool converged = false;
    for (int it = 0; it <= opts.max_iterations; ++it) {
        sys.assemble(u, grad, &exact_triplets, use_secant ? &secant_triplets : nullptr);
        stats.residual = sys.residual_norm(grad);
        if (!std::isfinite(stats.residual)) throw NonConvergence("solve_regularized: residual is not finite", u);
        if (stats.residual <= opts.tolerance) {
            converged = true;
            break;
        }
        if (flat_steps == 0) window_residual = stats.residual;
        if (flat_steps >= stall_window) {
            if (stats.residual > 0.5 * window_residual) {
                stats.precision_limited = true;
                converged = true;
                break;
            }
            flat_steps = 0;
            window_residual = stats.residual;
        }
        if (it == opts.max_iterations) break;
        if (sys.unknowns() == 0) break;

        // Full exact-Newton step first. For p < 2 it overshoots where the p-term
        // dominates, and the secant linearization with backtracking takes over.
        Eigen::VectorXd step = direction(exact_triplets);
        bool accepted = false;
        if (negligible(step)) {
            // Near-flat facets carry gradients below the resolution of u; once the
            // full step no longer moves u the residual cannot decrease further.
            stats.precision_limited = true;
            converged = true;
            break;
        }
        if (use_secant) {
            // The energy is flat to rounding near the minimizer, so the exact step must also reduce the residual.
            std::vector<double> const saved = u;
            double const saved_e = e;
            accepted = try_step(step, 1.0, step.dot(grad));
            if (accepted) {
                sys.assemble(u, trial_grad, nullptr);
                if (!(sys.residual_norm(trial_grad) < stats.residual)) {
                    u = saved;
                    e = saved_e;
                    accepted = false;
                }
            }
            if (!accepted) step = direction(secant_triplets);
        }
        if (!accepted) {
            double const slope = step.dot(grad);
            for (double t = 1.0; !try_step(step, t, slope);) {
                t *= opts.backtrack;
                if (t < opts.min_step) throw NonConvergence("solve_regularized: line search stalled", u);
            }
        }
        double const previous = stats.energy_history.back();
        double const rounding = std::numeric_limits<double>::epsilon() * static_cast<double>(sys.unknowns()) * (1.0 + std::abs(previous));
        flat_steps = previous - e <= rounding ? flat_steps + 1 : 0;
        stats.energy_history.push_back(e);
        stats.iterations = it + 1;
    }
    stats.energy = e;
    if (!converged) throw NonConvergence("solve_regularized: iteration cap reached", u);

    ScalarField uf(problem.grid, std::move(u));
    auto z = detail::flux_of(uf);
    return RegularizedSolution{std::move(uf), std::move(z), std::move(stats)};
}

inline StepRecord summarize_step(RegularizedSolution const& sol, double p)
{
    StepRecord rec;
    rec.p = p;
    rec.newton_iterations = sol.stats.iterations;
    rec.residual = sol.stats.residual;
    rec.energy = sol.stats.energy;
    for (double v : sol.u.values()) rec.sup_norm = std::max(rec.sup_norm, std::abs(v));
    auto const& g = sol.u.grid();
    auto const gu = gradient(sol.u);
    auto const ws = g.sample_weights();
    for (std::size_t s = 0; s < gu.size(); ++s) {
        double const n = norm(gu[s]);
        rec.bv += ws[s] * n;
        rec.p_energy += ws[s] * (p - 1.0) * std::pow(n, p);
    }
    return rec;
}

/**
 * Runs every exponent of the schedule with warm starts, stopping early once
 * successive solutions differ by less than the stop tolerance in sup norm.
 * Never throws ScheduleExhausted; `converged` records whether it stopped early.
 * A stop tolerance of 0 runs the whole schedule and accepts its last exponent.
 */
inline SolveReport trace_continuation(Problem const& problem, ContinuationSchedule const& sched, NewtonOptions const& opts,
                                      std::optional<ScalarField> init = std::nullopt)
{
    sched.validate();
    SolveReport report;
    std::optional<ScalarField> guess = std::move(init);
    for (double p : sched.p_values) {
        auto sol = solve_regularized(problem, p, opts, guess);
        auto rec = summarize_step(sol, p);
        if (guess && !report.steps.empty()) {
            double diff = 0.0;
            for (std::size_t k = 0; k < sol.u.size(); ++k) diff = std::max(diff, std::abs(sol.u[k] - (*guess)[k]));
            rec.increment = diff;
        }
        report.steps.push_back(rec);
        guess = sol.u;
        report.u = std::move(sol.u);
        report.z = std::move(sol.z);
        if (report.steps.size() > 1 && rec.increment < sched.stop_tolerance) {
            report.converged = true;
            break;
        }
    }
    if (sched.stop_tolerance == 0.0) report.converged = true;
    return report;
}

/// Continuation p -> 1+; throws ScheduleExhausted (with the full history) if the iterates never settle.
inline SolveReport continue_to_limit(Problem const& problem, ContinuationSchedule const& sched, NewtonOptions const& opts,
                                     std::optional<ScalarField> init = std::nullopt)
{
    auto report = trace_continuation(problem, sched, opts, std::move(init));
    if (!report.converged) throw ScheduleExhausted(std::move(report));
    return report;
}

enum class BoundaryState { attached, detached_consistent, violation };

inline std::string to_string(BoundaryState s)
{
    switch (s) {
    case BoundaryState::attached: return "attached";
    case BoundaryState::detached_consistent: return "detached";
    case BoundaryState::violation: return "violation";
    }
    return "unknown";
}

struct DetachmentReport {
    BoundaryTrace trace;
    std::vector<BoundaryState> state;
    std::size_t attached = 0;
    std::size_t detached = 0;
    std::size_t violations = 0;
    double max_normal_flux = 0.0;
};

/**
 * Checks u(sgn u + [z,nu]) = 0 node by node: a node is attached when its
 * trace is below `tol_u`, detached-consistent when |[z,nu]| > 1 - tol_z with
 * the sign opposite to the trace, and a violation otherwise.
 */
inline DetachmentReport detachment_report(SolveReport const& report, double tol_u = 1e-3, double tol_z = 5e-2)
{
    DetachmentReport out;
    out.trace = boundary_trace(report.u, report.z);
    for (std::size_t b = 0; b < out.trace.nodes.size(); ++b) {
        double const tu = out.trace.u_trace[b];
        double const zn = out.trace.normal_flux[b];
        out.max_normal_flux = std::max(out.max_normal_flux, std::abs(zn));
        BoundaryState st = BoundaryState::violation;
        if (std::abs(tu) < tol_u) st = BoundaryState::attached;
        else if (std::abs(zn) > 1.0 - tol_z && zn * tu < 0.0) st = BoundaryState::detached_consistent;
        out.state.push_back(st);
        switch (st) {
        case BoundaryState::attached: ++out.attached; break;
        case BoundaryState::detached_consistent: ++out.detached; break;
        case BoundaryState::violation: ++out.violations; break;
        }
    }
    return out;
}

} // namespace pmc
