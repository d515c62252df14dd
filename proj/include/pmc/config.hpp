#pragma once

#include "pmc/evolution.hpp"
#include "pmc/expression.hpp"
#include "pmc/fields.hpp"
#include "pmc/l1_scheme.hpp"
#include "pmc/nonlinearity.hpp"
#include "pmc/radial.hpp"
#include "pmc/solver.hpp"

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatumConfig {
    std::string source = "expression";  // expression | radial_example
    std::string expr = "0";
    double alpha = 1.0;
    IntegrabilityClass tag = IntegrabilityClass::Linf;
};

struct RunConfig {
    GridDescription grid;
    DatumConfig datum;
    std::string absorption = "identity";
    NewtonOptions newton;
    ContinuationSchedule schedule = ContinuationSchedule::geometric();
    std::string initial_guess = "zero";  // zero | random
    std::uint64_t seed = 0;
    std::optional<double> inner;
    std::optional<double> outer;
    L1Options l1;
    double lambda = 0.05;
    int steps = 40;
    std::string initial = "0";  // evolution initial datum
};

namespace detail {

inline std::string trim(std::string const& s)
{
    auto const b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline double to_double(std::string const& key, std::string const& v)
{
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &used);
    } catch (std::exception const&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
    if (trim(v.substr(used)) != "") throw ConfigError("key '" + key + "': trailing characters in '" + v + "'");
    return x;
}

inline long to_int(std::string const& key, std::string const& v)
{
    double const x = to_double(key, v);
    if (x != std::floor(x)) throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return static_cast<long>(x);
}

inline std::vector<double> to_list(std::string const& key, std::string const& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

inline IntegrabilityClass to_class(std::string const& v)
{
    for (auto c : {IntegrabilityClass::Linf, IntegrabilityClass::LN, IntegrabilityClass::LNweak, IntegrabilityClass::Lq, IntegrabilityClass::L1}) {
        if (to_string(c) == v) return c;
    }
    throw ConfigError("unknown integrability class '" + v + "'");
}

} // namespace detail

/**
 * Flat key = value text with [section] headers; '#' starts a comment.
 * Unknown sections and keys are errors.
 */
inline RunConfig parse_config(std::istream& in)
{
    RunConfig cfg;
    std::string section;
    std::string line;
    int lineno = 0;
    std::set<std::string> seen;
    std::optional<int> k_max;
    std::optional<double> stop;
    std::optional<std::vector<double>> p_values;

    while (std::getline(in, line)) {
        ++lineno;
        auto const hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto where = [&] { return "line " + std::to_string(lineno) + ": "; };
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where() + "malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            static std::set<std::string> const sections{"grid", "datum", "absorption", "solver", "schedule", "boundary", "l1", "evolution"};
            if (!sections.count(section)) throw ConfigError(where() + "unknown section [" + section + "]");
            continue;
        }
        auto const eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where() + "expected key = value");
        std::string const key = detail::trim(line.substr(0, eq));
        std::string const value = detail::trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError(where() + "key '" + key + "' outside any section");
        std::string const full = section + "." + key;
        if (!seen.insert(full).second) throw ConfigError(where() + "duplicate key '" + full + "'");
        auto num = [&] { return detail::to_double(full, value); };
        auto integer = [&] { return detail::to_int(full, value); };
        auto list = [&] { return detail::to_list(full, value); };

        if (full == "grid.kind") {
            if (value == "interval") cfg.grid.kind = GridKind::interval;
            else if (value == "rectangle") cfg.grid.kind = GridKind::rectangle;
            else if (value == "radial") cfg.grid.kind = GridKind::radial;
            else throw ConfigError(where() + "unknown grid kind '" + value + "'");
        } else if (full == "grid.lower" || full == "grid.upper") {
            auto const v = list();
            if (v.size() > 2) throw ConfigError(where() + full + " takes at most two values");
            Point& p = key == "lower" ? cfg.grid.lower : cfg.grid.upper;
            for (std::size_t i = 0; i < v.size(); ++i) p[i] = v[i];
        } else if (full == "grid.nodes") {
            auto const v = list();
            if (v.size() > 2) throw ConfigError(where() + "grid.nodes takes at most two values");
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (v[i] < 0.0 || v[i] != std::floor(v[i])) throw ConfigError(where() + "grid.nodes must be nonnegative integers");
                cfg.grid.nodes[i] = static_cast<std::size_t>(v[i]);
            }
            if (v.size() == 1) cfg.grid.nodes[1] = cfg.grid.kind == GridKind::rectangle ? cfg.grid.nodes[0] : 1;
        } else if (full == "grid.dimension") {
            cfg.grid.dimension = static_cast<int>(integer());
        } else if (full == "datum.source") {
            if (value != "expression" && value != "radial_example") throw ConfigError(where() + "unknown datum source '" + value + "'");
            cfg.datum.source = value;
        } else if (full == "datum.expr") {
            cfg.datum.expr = value;
        } else if (full == "datum.alpha") {
            cfg.datum.alpha = num();
        } else if (full == "datum.class") {
            cfg.datum.tag = detail::to_class(value);
        } else if (full == "absorption.name") {
            cfg.absorption = value;
        } else if (full == "solver.tolerance") {
            cfg.newton.tolerance = num();
        } else if (full == "solver.max_iterations") {
            cfg.newton.max_iterations = static_cast<int>(integer());
        } else if (full == "solver.backtrack") {
            cfg.newton.backtrack = num();
        } else if (full == "solver.min_step") {
            cfg.newton.min_step = num();
        } else if (full == "solver.initial_guess") {
            if (value != "zero" && value != "random") throw ConfigError(where() + "initial_guess must be zero or random");
            cfg.initial_guess = value;
        } else if (full == "solver.seed") {
            auto const s = integer();
            if (s < 0) throw ConfigError(where() + "seed must be nonnegative");
            cfg.seed = static_cast<std::uint64_t>(s);
        } else if (full == "schedule.k_max") {
            k_max = static_cast<int>(integer());
        } else if (full == "schedule.stop_tolerance") {
            stop = num();
        } else if (full == "schedule.p_values") {
            p_values = list();
        } else if (full == "boundary.inner") {
            cfg.inner = num();
        } else if (full == "boundary.outer") {
            cfg.outer = num();
        } else if (full == "l1.caps") {
            cfg.l1.caps = list();
        } else if (full == "l1.k_levels") {
            cfg.l1.k_levels = list();
        } else if (full == "l1.k_ref") {
            cfg.l1.k_ref = num();
        } else if (full == "l1.tolerance") {
            cfg.l1.tolerance = num();
        } else if (full == "evolution.lambda") {
            cfg.lambda = num();
        } else if (full == "evolution.steps") {
            cfg.steps = static_cast<int>(integer());
        } else if (full == "evolution.initial") {
            cfg.initial = value;
        } else {
            throw ConfigError(where() + "unknown key '" + full + "'");
        }
    }

    if (p_values && k_max) throw ConfigError("schedule: give either p_values or k_max, not both");
    if (k_max && *k_max < 0) throw ConfigError("schedule.k_max must be nonnegative");
    cfg.schedule = ContinuationSchedule::geometric(k_max.value_or(24), stop.value_or(1e-6));
    if (p_values) cfg.schedule.p_values = *p_values;
    try {
        cfg.schedule.validate();
        cfg.newton.validate();
        cfg.l1.validate();
        Expression::parse(cfg.datum.expr);
        Expression::parse(cfg.initial);
        absorption_from_name(cfg.absorption);
    } catch (std::invalid_argument const& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline RunConfig load_config(std::string const& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

inline GridPtr make_grid(RunConfig const& cfg)
{
    try {
        return build_grid(cfg.grid);
    } catch (std::invalid_argument const& e) {
        throw ConfigError(e.what());
    }
}

inline DatumSpec make_datum(RunConfig const& cfg, Grid const& grid)
{
    if (cfg.datum.source == "radial_example") {
        if (grid.kind() != GridKind::radial) throw ConfigError("datum radial_example needs a radial grid");
        try {
            RadialExample const ex(cfg.datum.alpha, grid.dimension());
            return DatumSpec([ex](Point const& x) { return ex.f(x[0]); }, IntegrabilityClass::LNweak);
        } catch (std::invalid_argument const& e) {
            throw ConfigError(e.what());
        }
    }
    auto const expr = Expression::parse(cfg.datum.expr);
    bool const radial = grid.kind() == GridKind::radial;
    return DatumSpec([expr, radial](Point const& x) { return expr(x, radial); }, cfg.datum.tag);
}

inline Problem make_problem(RunConfig const& cfg, GridPtr const& grid)
{
    Problem pr{grid, make_datum(cfg, *grid), absorption_from_name(cfg.absorption), std::vector<double>(grid->node_count(), 0.0)};
    if (grid->kind() == GridKind::radial) {
        if (grid->lower() > 0.0 && cfg.inner) pr.boundary_values.front() = *cfg.inner;
        if (cfg.outer) pr.boundary_values.back() = *cfg.outer;
    } else if (cfg.inner || cfg.outer) {
        throw ConfigError("[boundary] values apply to radial grids only");
    }
    return pr;
}

/// Zero, or uniform noise in [-1,1] at interior nodes drawn from the configured seed.
inline std::optional<ScalarField> make_initial_guess(RunConfig const& cfg, GridPtr const& grid)
{
    if (cfg.initial_guess == "zero") return std::nullopt;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(grid->node_count(), 0.0);
    for (std::size_t k : grid->interior_nodes()) v[k] = dist(rng);
    return ScalarField(grid, std::move(v));
}

inline ScalarField make_evolution_initial(RunConfig const& cfg, GridPtr const& grid)
{
    auto const expr = Expression::parse(cfg.initial);
    bool const radial = grid->kind() == GridKind::radial;
    return ScalarField::sample(grid, [&](Point const& x) { return expr(x, radial); });
}

} // namespace pmc
