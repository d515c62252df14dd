#include "pmc/pmc.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_solver = 2;

struct Common {
    std::string config;
    std::string out = "pmc_out";
    int jobs = 1;
};

json step_json(pmc::StepRecord const& s)
{
    return json{{"p", s.p},
                {"newton_iterations", s.newton_iterations},
                {"residual", s.residual},
                {"sup_norm", s.sup_norm},
                {"p_energy", s.p_energy},
                {"bv", s.bv},
                {"energy", s.energy},
                {"increment", std::isfinite(s.increment) ? json(s.increment) : json(nullptr)}};
}

json schedule_json(pmc::ContinuationSchedule const& s)
{
    return json{{"p_values", s.p_values}, {"stop_tolerance", s.stop_tolerance}};
}

json diagnostics_json(pmc::DiagnosticsBundle const& b)
{
    json lq = json::array();
    for (auto const& [q, v] : b.lq) lq.push_back({{"q", q}, {"norm", v}});
    json levels = json::array();
    for (auto const& r : b.levels) levels.push_back({{"k", r.k}, {"measure", r.level_measure}, {"remainder_variation", r.remainder_variation}});
    json eq = json::array();
    for (auto const& [k, r] : b.equint) eq.push_back({{"k", k}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"pass", r.pass}});
    return json{{"lq", lq},
                {"linf", b.linf},
                {"weak_LN", b.weak_ln},
                {"bv", b.bv},
                {"area", b.area},
                {"level_sets", levels},
                {"pairing_defect_max", b.pairing_defect_max},
                {"equint", eq},
                {"scan", {{"worst_ratio", b.scan.worst_ratio},
                          {"witness_lower", b.scan.witness.lower},
                          {"witness_upper", b.scan.witness.upper}}},
                {"thresholds", {b.constants.strong, b.constants.weak}}};
}

json detachment_json(pmc::DetachmentReport const& d)
{
    return json{{"attached", d.attached}, {"detached", d.detached}, {"violations", d.violations}, {"max_normal_flux", d.max_normal_flux}};
}

void write_field(fs::path const& path, pmc::ScalarField const& f)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    pmc::write_field_csv(os, f);
}

void write_manifest(fs::path const& dir, json const& j)
{
    std::ofstream os(dir / "manifest.json");
    if (!os) throw std::runtime_error("cannot write manifest in " + dir.string());
    os << std::setw(2) << j << '\n';
}

json base_manifest(std::string const& command, pmc::RunConfig const& cfg, pmc::Grid const& grid)
{
    return json{{"manifest_version", 1},
                {"command", command},
                {"grid", grid.header()},
                {"absorption", cfg.absorption},
                {"datum", cfg.datum.source == "expression" ? cfg.datum.expr : "radial_example alpha=" + std::to_string(cfg.datum.alpha)},
                {"seed", cfg.seed},
                {"initial_guess", cfg.initial_guess}};
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

pmc::RunConfig load(Common const& c)
{
    if (c.config.empty()) throw pmc::ConfigError("--config is required");
    return pmc::load_config(c.config);
}

fs::path prepare_out(Common const& c)
{
    fs::path dir(c.out);
    fs::create_directories(dir);
    return dir;
}

std::vector<double> parse_p_list(std::string const& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double const p = std::stod(item);
        if (!(p > 1.0)) throw pmc::ConfigError("--p values must exceed 1");
        out.push_back(p);
    }
    if (out.empty()) throw pmc::ConfigError("--p needs at least one value");
    return out;
}

int run_solve(Common const& c, std::string const& p_text)
{
    auto const t0 = std::chrono::steady_clock::now();
    auto const cfg = load(c);
    auto const grid = pmc::make_grid(cfg);
    auto const pr = pmc::make_problem(cfg, grid);
    auto const init = pmc::make_initial_guess(cfg, grid);
    auto const dir = prepare_out(c);
    auto manifest = base_manifest("solve", cfg, *grid);

    if (!p_text.empty()) {
        // Independent fixed-p solves; these are the sweep entries --jobs runs concurrently.
        auto const ps = parse_p_list(p_text);
        std::vector<std::optional<pmc::RegularizedSolution>> sols(ps.size());
        std::vector<std::string> errors(ps.size());
        std::size_t next = 0;
        while (next < ps.size()) {
            std::vector<std::future<void>> batch;
            for (int j = 0; j < std::max(1, c.jobs) && next < ps.size(); ++j, ++next) {
                std::size_t const i = next;
                batch.push_back(std::async(std::launch::async, [&, i] {
                    try {
                        sols[i] = pmc::solve_regularized(pr, ps[i], cfg.newton, init);
                    } catch (pmc::SolverError const& e) {
                        errors[i] = e.what();
                    }
                }));
            }
            for (auto& f : batch) f.get();
        }
        json runs = json::array();
        bool failed = false;
        for (std::size_t i = 0; i < ps.size(); ++i) {
            if (!sols[i]) {
                failed = true;
                runs.push_back({{"p", ps[i]}, {"error", errors[i]}});
                std::cerr << "p = " << ps[i] << ": " << errors[i] << '\n';
                continue;
            }
            std::ostringstream name;
            name << "u_p" << i << ".csv";
            write_field(dir / name.str(), sols[i]->u);
            auto j = step_json(pmc::summarize_step(*sols[i], ps[i]));
            j["field"] = name.str();
            runs.push_back(j);
            std::cout << "p = " << ps[i] << "  sup|u| = " << pmc::linf_norm(sols[i]->u) << "  newton = " << sols[i]->stats.iterations << '\n';
        }
        manifest["runs"] = runs;
        manifest["wall_time_s"] = seconds_since(t0);
        write_manifest(dir, manifest);
        return failed ? exit_solver : exit_ok;
    }

    manifest["schedule"] = schedule_json(cfg.schedule);
    try {
        auto const rep = pmc::continue_to_limit(pr, cfg.schedule, cfg.newton, init);
        write_field(dir / "u.csv", rep.u);
        json steps = json::array();
        for (auto const& s : rep.steps) steps.push_back(step_json(s));
        manifest["steps"] = steps;
        manifest["converged"] = true;
        manifest["diagnostics"] = diagnostics_json(pmc::compute_diagnostics(rep.u, rep.z, pr.datum, pr.absorption));
        manifest["boundary"] = detachment_json(pmc::detachment_report(rep));
        manifest["wall_time_s"] = seconds_since(t0);
        write_manifest(dir, manifest);
        std::cout << "converged after " << rep.steps.size() << " exponents; sup|u| = " << pmc::linf_norm(rep.u) << '\n';
        return exit_ok;
    } catch (pmc::ScheduleExhausted const& e) {
        json steps = json::array();
        for (auto const& s : e.report().steps) steps.push_back(step_json(s));
        manifest["steps"] = steps;
        manifest["converged"] = false;
        manifest["wall_time_s"] = seconds_since(t0);
        write_manifest(dir, manifest);
        std::cerr << e.what() << '\n';
        return exit_solver;
    }
}

int run_continuation(Common const& c)
{
    auto const t0 = std::chrono::steady_clock::now();
    auto const cfg = load(c);
    auto const grid = pmc::make_grid(cfg);
    auto const pr = pmc::make_problem(cfg, grid);
    auto const dir = prepare_out(c);
    auto const rep = pmc::trace_continuation(pr, cfg.schedule, cfg.newton, pmc::make_initial_guess(cfg, grid));

    std::ofstream table(dir / "continuation.csv");
    table << "p,newton_iterations,residual,sup_norm,p_energy,bv,energy,increment\n" << std::setprecision(17);
    json steps = json::array();
    for (auto const& s : rep.steps) {
        table << s.p << ',' << s.newton_iterations << ',' << s.residual << ',' << s.sup_norm << ',' << s.p_energy << ',' << s.bv << ','
              << s.energy << ',' << s.increment << '\n';
        steps.push_back(step_json(s));
        std::cout << std::setw(12) << s.p << "  sup|u| = " << std::setw(12) << s.sup_norm << "  (p-1)int|Du|^p = " << s.p_energy << '\n';
    }
    write_field(dir / "u.csv", rep.u);
    auto manifest = base_manifest("continuation", cfg, *grid);
    manifest["schedule"] = schedule_json(cfg.schedule);
    manifest["steps"] = steps;
    manifest["converged"] = rep.converged;
    manifest["wall_time_s"] = seconds_since(t0);
    write_manifest(dir, manifest);
    return rep.converged ? exit_ok : exit_solver;
}

int run_l1(Common const& c)
{
    auto const t0 = std::chrono::steady_clock::now();
    auto const cfg = load(c);
    auto const grid = pmc::make_grid(cfg);
    auto const pr = pmc::make_problem(cfg, grid);
    auto const dir = prepare_out(c);
    auto const rep = pmc::solve_l1(pr, cfg.schedule, cfg.newton, cfg.l1);
    for (auto const& w : rep.warnings) std::cerr << "warning: " << w << '\n';

    json table = json::array();
    for (auto const& r : rep.records) {
        json eq = json::array();
        for (auto const& [k, e] : r.equint) eq.push_back({{"k", k}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"pass", e.pass}});
        table.push_back({{"n", r.n},
                         {"truncated_bv", r.truncated_bv},
                         {"bv_slope", r.bv_slope},
                         {"equint", eq},
                         {"restricted_increment", std::isfinite(r.restricted_increment) ? json(r.restricted_increment) : json(nullptr)},
                         {"datum_l1", r.datum_l1},
                         {"absorption_l1", r.absorption_l1}});
        std::cout << "n = " << r.n << "  BV slope = " << r.bv_slope << "  int|g(u_n)| = " << r.absorption_l1 << "  int|f_n| = " << r.datum_l1
                  << '\n';
    }
    write_field(dir / "u.csv", rep.last.u);
    auto manifest = base_manifest("l1", cfg, *grid);
    manifest["schedule"] = schedule_json(cfg.schedule);
    manifest["k_levels"] = cfg.l1.k_levels;
    manifest["l1"] = table;
    manifest["converged"] = rep.converged;
    manifest["warnings"] = rep.warnings;
    manifest["wall_time_s"] = seconds_since(t0);
    write_manifest(dir, manifest);
    return rep.converged ? exit_ok : exit_solver;
}

int run_radial_verify(double alpha, int n, double rmin, std::size_t nodes)
{
    if (nodes < 5 || nodes % 2 == 0) throw pmc::ConfigError("--nodes must be odd and at least 5");
    auto residual_at = [&](std::size_t m) {
        auto const grid = pmc::build_grid({pmc::GridKind::radial, {rmin, 0.0}, {1.0, 0.0}, {m, 1}, n});
        auto const [u, f] = pmc::example_fields(alpha, n, grid);
        return pmc::manufactured_residual(u, f);
    };
    double const fine = residual_at(nodes);
    double const coarse = residual_at((nodes - 1) / 2 + 1);
    std::cout << std::setprecision(6) << "max residual (" << nodes << " nodes): " << fine << '\n'
              << "max residual (" << (nodes - 1) / 2 + 1 << " nodes): " << coarse << '\n'
              << "observed order: " << std::log2(coarse / fine) << '\n';
    return exit_ok;
}

int run_evolve(Common const& c, std::optional<double> lambda, std::optional<int> steps)
{
    auto const t0 = std::chrono::steady_clock::now();
    auto cfg = load(c);
    if (lambda) cfg.lambda = *lambda;
    if (steps) cfg.steps = *steps;
    auto const grid = pmc::make_grid(cfg);
    auto const dir = prepare_out(c);
    pmc::EvolutionConfig ec;
    ec.lambda = cfg.lambda;
    ec.steps = cfg.steps;
    ec.newton = cfg.newton;
    auto const traj = pmc::evolve(pmc::make_evolution_initial(cfg, grid), ec);
    json index = json::array();
    for (std::size_t m = 0; m < traj.size(); ++m) {
        std::ostringstream name;
        name << "step_" << std::setw(4) << std::setfill('0') << m << ".csv";
        write_field(dir / name.str(), traj[m]);
        index.push_back({{"step", m}, {"time", m * cfg.lambda}, {"field", name.str()}, {"linf", pmc::linf_norm(traj[m])},
                         {"l1", pmc::lq_norm(traj[m], 1.0)}});
    }
    auto manifest = base_manifest("evolve", cfg, *grid);
    manifest["lambda"] = cfg.lambda;
    manifest["steps"] = index;
    manifest["wall_time_s"] = seconds_since(t0);
    write_manifest(dir, manifest);
    std::cout << "sup|u^0| = " << pmc::linf_norm(traj.front()) << "  sup|u^" << cfg.steps << "| = " << pmc::linf_norm(traj.back()) << '\n';
    return exit_ok;
}

int run_thresholds(int n)
{
    auto const t = pmc::thresholds(n);
    std::cout << std::setprecision(6) << t.strong << '\n' << t.weak << '\n';
    return exit_ok;
}

int run_scan(Common const& c)
{
    auto const cfg = load(c);
    auto const grid = pmc::make_grid(cfg);
    auto const datum = pmc::make_datum(cfg, *grid);
    auto const res = pmc::necessary_condition_scan(datum, grid);
    std::cout << std::setprecision(6) << "worst ratio |int_A f| / Per(A): " << res.worst_ratio << '\n'
              << "witness: [" << res.witness.lower[0] << ", " << res.witness.upper[0] << "]";
    if (grid->kind() == pmc::GridKind::rectangle) std::cout << " x [" << res.witness.lower[1] << ", " << res.witness.upper[1] << "]";
    std::cout << '\n' << (res.worst_ratio >= 1.0 ? "necessary condition fails without absorption\n" : "necessary condition holds on the family\n");
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Prescribed mean curvature solver with absorption"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", common.config, "configuration file");
        if (needs_config) opt->required();
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--jobs", common.jobs, "concurrent sweep entries")->check(CLI::PositiveNumber);
    };

    std::string p_text;
    auto* solve = app.add_subcommand("solve", "continuation solve, or fixed-p solves with --p");
    add_common(solve, true);
    solve->add_option("--p", p_text, "comma separated exponents for independent regularized solves");

    auto* cont = app.add_subcommand("continuation", "full continuation trace with per-exponent table");
    add_common(cont, true);
    auto* l1 = app.add_subcommand("l1", "truncated-datum chain for integrable data");
    add_common(l1, true);

    double alpha = 1.0, rmin = 0.05;
    int n = 3;
    std::size_t nodes = 2001;
    auto* rv = app.add_subcommand("radial-verify", "manufactured radial solution check");
    rv->add_option("--alpha", alpha, "exponent alpha in (0, N-1)");
    rv->add_option("--N", n, "ambient dimension");
    rv->add_option("--rmin", rmin, "inner radius");
    rv->add_option("--nodes", nodes, "radial nodes (odd)");

    std::optional<double> lambda;
    std::optional<int> steps;
    auto* ev = app.add_subcommand("evolve", "implicit time stepping of the mean curvature flow");
    add_common(ev, true);
    ev->add_option("--lambda", lambda, "time step");
    ev->add_option("--steps", steps, "number of steps");

    int tn = 3;
    auto* th = app.add_subcommand("thresholds", "datum threshold constants");
    th->add_option("--N", tn, "ambient dimension");

    auto* scan = app.add_subcommand("scan", "necessary-condition scan of the datum");
    add_common(scan, true);

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int const code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*solve) return run_solve(common, p_text);
        if (*cont) return run_continuation(common);
        if (*l1) return run_l1(common);
        if (*rv) return run_radial_verify(alpha, n, rmin, nodes);
        if (*ev) return run_evolve(common, lambda, steps);
        if (*th) return run_thresholds(tn);
        if (*scan) return run_scan(common);
    } catch (pmc::ConfigError const& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (pmc::ScheduleExhausted const& e) {
        std::cerr << "solver: " << e.what() << '\n';
        return exit_solver;
    } catch (pmc::SolverError const& e) {
        std::cerr << "solver: " << e.what() << '\n';
        return exit_solver;
    } catch (std::invalid_argument const& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_ok;
}
