// Command-line front end for the bequest-goal solver: tabulate the solution,
// sweep a parameter, run Monte Carlo, run the verification battery, or report
// the qualitative strategy properties. Output is CSV or JSON, written with
// fixed formatting so identical invocations produce identical bytes.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bequest/bequest.hpp"

namespace {

using bequest::fmt17;
using nlohmann::ordered_json;

struct ParamFlags {
    double mu = 0.08, r = 0.04, sigma = 0.2, lambda = 0.04, c = 0.0, b = 1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--mu", mu, "drift of the risky asset (per year)");
        cmd->add_option("--r", r, "riskless rate (per year)");
        cmd->add_option("--sigma", sigma, "volatility (per sqrt-year)");
        cmd->add_option("--lambda", lambda, "mortality hazard rate (per year)");
        cmd->add_option("--c", c, "consumption rate (currency per year)");
        cmd->add_option("--b", b, "bequest goal (currency)");
    }
    bequest::ModelParams build() const { return {mu, r, sigma, lambda, c, b}; }
};

void write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << text;
}

std::string json_text(const ordered_json& doc) { return doc.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

int run_solve(const ParamFlags& pf, std::size_t grid, double wmin, double wmax,
              const std::string& format, const std::string& out_path) {
    const auto params = pf.build();
    const auto sol = bequest::Solution::solve(params);
    bequest::GridSpec spec{grid, wmin, wmax};
    const auto rows = bequest::tabulate(sol, spec);
    if (format == "json")
        write_output(json_text(bequest::table_json(sol, rows)), out_path);
    else
        write_output(bequest::table_csv(sol, rows), out_path);
    return 0;
}

int run_sweep(const ParamFlags& pf, const std::string& name, double from, double to,
              std::size_t steps, double at, const std::string& format,
              const std::string& out_path) {
    if (steps < 2) throw std::invalid_argument("sweep: need at least 2 steps");
    struct Row {
        double value, w_eval, phi, pi;
        bequest::DerivedConstants k;
        std::optional<bequest::FreeBoundaries> fb;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < steps; ++i) {
        const double v = from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1);
        ParamFlags cur = pf;
        if (name == "mu") cur.mu = v;
        else if (name == "r") cur.r = v;
        else if (name == "sigma") cur.sigma = v;
        else if (name == "lambda") cur.lambda = v;
        else if (name == "c") cur.c = v;
        else if (name == "b") cur.b = v;
        else throw std::invalid_argument("sweep: unknown parameter " + name);
        const auto params = cur.build();
        const auto sol = bequest::Solution::solve(params);
        Row row{v, 0.0, 0.0, 0.0, sol.constants(), sol.boundaries()};
        row.w_eval = at >= 0.0 ? std::min(at, sol.w_safe()) : 0.5 * sol.w_safe();
        row.phi = sol.phi(row.w_eval);
        row.pi = sol.pi(row.w_eval);
        rows.push_back(row);
    }

    if (format == "json") {
        ordered_json doc;
        doc["schema"] = bequest::kSchemaVersion;
        doc["tool"] = bequest::kToolVersion;
        doc["sweep"] = name;
        auto& arr = doc["rows"] = ordered_json::array();
        for (const auto& r : rows) {
            ordered_json jr;
            jr[name] = r.value;
            jr["regime"] = to_string(r.k.regime);
            jr["constants"] = bequest::constants_json(r.k);
            if (r.fb)
                jr["boundaries"] = {{"z_b0", r.fb->z_b0}, {"z_b", r.fb->z_b}, {"z_0", r.fb->z_0}};
            else
                jr["boundaries"] = nullptr;
            jr["w"] = r.w_eval;
            jr["phi"] = r.phi;
            jr["pi_star"] = r.pi;
            arr.push_back(std::move(jr));
        }
        write_output(json_text(doc), out_path);
    } else {
        std::string out = "# schema=1\n# tool=" + std::string(bequest::kToolVersion) +
                          "\n# sweep=" + name + "\n";
        out += name + ",regime,m,q,alpha1,alpha2,p,w_safe,z_b0,z_b,z_0,w,phi,pi_star\n";
        for (const auto& r : rows) {
            out += fmt17(r.value) + "," + to_string(r.k.regime) + "," + fmt17(r.k.m) + "," +
                   fmt17(r.k.q) + "," + fmt17(r.k.alpha1) + "," + fmt17(r.k.alpha2) + "," +
                   fmt17(r.k.p) + "," + fmt17(r.k.w_safe) + ",";
            if (r.fb)
                out += fmt17(r.fb->z_b0) + "," + fmt17(r.fb->z_b) + "," + fmt17(r.fb->z_0);
            else
                out += ",,";
            out += "," + fmt17(r.w_eval) + "," + fmt17(r.phi) + "," + fmt17(r.pi) + "\n";
        }
        write_output(out, out_path);
    }
    return 0;
}

int run_simulate(const ParamFlags& pf, double w0, std::int64_t paths, double dt,
                 std::uint64_t seed, double horizon, int threads, const std::string& strategy,
                 const std::string& format, const std::string& out_path) {
    const auto params = pf.build();
    const auto sol = bequest::Solution::solve(params);
    bequest::SimConfig cfg;
    cfg.n_paths = paths;
    cfg.dt = dt;
    cfg.seed = seed;
    cfg.horizon_cap = horizon;
    cfg.n_threads = threads;

    bequest::SimResult res;
    if (strategy == "optimal") {
        if (sol.regime() == bequest::Regime::ZeroConsumption)
            res = bequest::simulate(params, cfg, w0, bequest::optimal_strategy_zero_c(sol));
        else
            res = bequest::simulate(params, cfg, w0, bequest::TabulatedStrategy(sol));
    } else if (strategy == "ruin-min") {
        const double coeff = params.risk_ratio() * (sol.constants().alpha1 - 1.0);
        const double cr = params.c / params.r;
        res = bequest::simulate(params, cfg, w0,
                                [&](double w) { return coeff * std::max(cr - w, 0.0); });
    } else if (strategy == "floor-restricted") {
        const double coeff = params.risk_ratio() / (1.0 - sol.constants().q);
        const double cr = params.c / params.r;
        res = bequest::simulate(params, cfg, w0,
                                [&](double w) { return coeff * std::max(w - cr, 0.0); });
    } else {
        throw std::invalid_argument("simulate: unknown strategy " + strategy);
    }

    const double phi_ref = sol.phi(w0);
    if (format == "json") {
        ordered_json doc;
        doc["schema"] = bequest::kSchemaVersion;
        doc["tool"] = bequest::kToolVersion;
        doc["params"] = bequest::params_json(params);
        doc["w0"] = w0;
        doc["strategy"] = strategy;
        doc["config"] = {{"n_paths", cfg.n_paths},
                         {"dt", cfg.dt},
                         {"seed", cfg.seed},
                         {"horizon_cap", cfg.horizon_cap <= 0.0 ? 50.0 / params.lambda
                                                                : cfg.horizon_cap}};
        doc["result"] = {{"p_hat", res.p_hat},
                         {"std_err", res.std_err},
                         {"n_ruined", res.n_ruined},
                         {"n_died_below_goal", res.n_died_below_goal},
                         {"n_died_meeting_goal", res.n_died_meeting_goal},
                         {"n_hit_safe", res.n_hit_safe},
                         {"n_capped", res.n_capped}};
        doc["phi_reference"] = phi_ref;
        write_output(json_text(doc), out_path);
    } else {
        std::string out = "# schema=1\n# tool=" + std::string(bequest::kToolVersion) + "\n";
        out += "p_hat,std_err,n_ruined,n_died_below_goal,n_died_meeting_goal,n_hit_safe,"
               "n_capped,phi_reference\n";
        out += fmt17(res.p_hat) + "," + fmt17(res.std_err) + "," + std::to_string(res.n_ruined) +
               "," + std::to_string(res.n_died_below_goal) + "," +
               std::to_string(res.n_died_meeting_goal) + "," + std::to_string(res.n_hit_safe) +
               "," + std::to_string(res.n_capped) + "," + fmt17(phi_ref) + "\n";
        write_output(out, out_path);
    }
    if (res.n_capped > 0)
        std::cerr << "warning: " << res.n_capped
                  << " paths hit the simulation horizon and were counted as failures\n";
    return 0;
}

int run_verify_cmd(const ParamFlags& pf, bool quick, std::int64_t mc_paths, std::uint64_t seed,
                   int threads, double corrupt_zb0, const std::string& format,
                   const std::string& out_path) {
    const auto params = pf.build();
    bequest::VerifyOptions opt;
    opt.quick = quick;
    opt.mc_paths = mc_paths;
    opt.seed = seed;
    opt.n_threads = threads;
    opt.corrupt_zb0 = corrupt_zb0;
    const auto rep = bequest::run_verify(params, opt);

    if (format == "json") {
        ordered_json doc;
        doc["schema"] = bequest::kSchemaVersion;
        doc["tool"] = bequest::kToolVersion;
        doc["params"] = bequest::params_json(params);
        doc["all_pass"] = rep.all_pass();
        auto& arr = doc["checks"] = ordered_json::array();
        for (const auto& c : rep.checks)
            arr.push_back({{"name", c.name},
                           {"value", c.value},
                           {"tol", c.tol},
                           {"kind", c.kind == bequest::CheckResult::Kind::ResidualBelow
                                        ? "residual_below"
                                        : "slack_above"},
                           {"pass", c.pass}});
        write_output(json_text(doc), out_path);
    } else {
        std::string out;
        for (const auto& c : rep.checks) {
            out += std::string(c.pass ? "PASS" : "FAIL") + "  " + c.name + "  value=" +
                   fmt17(c.value) +
                   (c.kind == bequest::CheckResult::Kind::ResidualBelow ? "  tol<" : "  slack>") +
                   fmt17(c.tol) + "\n";
        }
        if (const auto* f = rep.first_failure())
            out += "FIRST FAILURE: " + f->name + "\n";
        out += rep.all_pass() ? "ALL CHECKS PASSED\n" : "VERIFICATION FAILED\n";
        write_output(out, out_path);
    }
    return rep.all_pass() ? 0 : 1;
}

int run_props(const ParamFlags& pf, double b2, std::size_t grid_n, const std::string& format,
              const std::string& out_path) {
    const auto params = pf.build();
    const auto sol = bequest::Solution::solve(params);
    ordered_json doc;
    doc["schema"] = bequest::kSchemaVersion;
    doc["tool"] = bequest::kToolVersion;
    doc["params"] = bequest::params_json(params);
    doc["regime"] = to_string(sol.regime());

    if (sol.regime() == bequest::Regime::ZeroConsumption) {
        const auto lev = bequest::check_leveraging(params);
        ordered_json jl;
        jl["status"] = lev.status == bequest::Leveraging::AlwaysLeveraged ? "AlwaysLeveraged"
                                                                          : "NotAlwaysLeveraged";
        jl["risk_multiple"] = lev.lhs;
        if (lev.sigma_l)
            jl["sigma_l"] = *lev.sigma_l;
        else
            jl["sigma_l"] = nullptr;
        doc["leveraging"] = jl;
        const auto zs = bequest::check_zero_c_sensitivity(params, 0.5 * params.b);
        doc["sensitivity"] = {{"dpi_dlambda", zs.dpi_dlambda}, {"dpi_dsigma", zs.dpi_dsigma}};
    } else {
        if (sol.regime() == bequest::Regime::LowConsumption) {
            const auto mono = bequest::classify_monotonicity(sol);
            ordered_json jm;
            jm["pattern"] = to_string(mono.pattern);
            jm["w_star"] = mono.w_star ? ordered_json(*mono.w_star) : ordered_json(nullptr);
            jm["c_star"] = mono.c_star ? ordered_json(*mono.c_star) : ordered_json(nullptr);
            doc["monotonicity"] = jm;
            const auto cs = bequest::check_c_sensitivity(params);
            doc["sensitivity"] = {{"dpi_dc_near_zero_wealth", cs.derivative}};
        }
        std::vector<double> grid;
        for (std::size_t i = 1; i < grid_n; ++i)
            grid.push_back(sol.w_safe() * static_cast<double>(i) / static_cast<double>(grid_n));
        const auto cmp = bequest::compare_strategies(sol, grid);
        auto& arr = doc["strategy_comparisons"] = ordered_json::array();
        for (const auto& e : cmp.entries)
            arr.push_back({{"name", e.name}, {"min_slack", e.min_slack}, {"n_points", e.n_points}});
        doc["crosses_zero_consumption"] = cmp.crosses_zero_consumption;
        doc["crossover_w"] =
            cmp.crossover_w ? ordered_json(*cmp.crossover_w) : ordered_json(nullptr);
        if (cmp.goal_jump)
            doc["pi_at_goal"] = {{"left", cmp.goal_jump->first}, {"right", cmp.goal_jump->second}};
    }

    if (b2 > 0.0) {
        const auto grid = bequest::b_independence_grid(params.b, 256);
        const auto rep = bequest::check_b_independence(params, params.b, b2, grid);
        doc["b_independence"] = {{"b1", params.b},
                                 {"b2", b2},
                                 {"max_deviation", rep.max_deviation},
                                 {"pass", rep.pass}};
    }

    if (format == "csv") {
        // flat key,value rows with the nested values carried as quoted JSON
        auto quote = [](std::string s) {
            std::string q = "\"";
            for (char ch : s) {
                if (ch == '"') q += '"';
                q += ch;
            }
            return q + "\"";
        };
        std::string out = "# schema=1\n# tool=" + std::string(bequest::kToolVersion) + "\n";
        out += "key,value\n";
        out += "regime," + std::string(to_string(sol.regime())) + "\n";
        for (const auto& [key, val] : doc.items()) {
            if (key == "schema" || key == "tool" || key == "params" || key == "regime") continue;
            out += key + "," + quote(val.dump()) + "\n";
        }
        write_output(out, out_path);
    } else {
        write_output(json_text(doc), out_path);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximum probability of meeting a bequest goal at death: solver, "
                 "simulator and verifier"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(bequest::kToolVersion));

    std::string format = "csv", out_path;
    auto add_io = [&](CLI::App* cmd) {
        cmd->add_option("--format", format, "output format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--out", out_path, "output file (default stdout)");
    };

    // solve
    ParamFlags solve_p;
    std::size_t solve_grid = 101;
    double solve_wmin = 0.0, solve_wmax = -1.0;
    auto* solve_cmd = app.add_subcommand("solve", "tabulate phi(w) and pi*(w) on a wealth grid");
    solve_p.attach(solve_cmd);
    solve_cmd->add_option("--grid", solve_grid, "number of grid points (>= 2)");
    solve_cmd->add_option("--wmin", solve_wmin, "lower wealth bound (default 0)");
    solve_cmd->add_option("--wmax", solve_wmax, "upper wealth bound (default w_safe)");
    add_io(solve_cmd);

    // sweep
    ParamFlags sweep_p;
    std::string sweep_param = "c";
    double sweep_from = 0.0, sweep_to = 0.0, sweep_at = -1.0;
    std::size_t sweep_steps = 11;
    auto* sweep_cmd =
        app.add_subcommand("sweep", "vary one model parameter and tabulate the solution");
    sweep_p.attach(sweep_cmd);
    sweep_cmd->add_option("--param", sweep_param, "parameter to sweep: mu r sigma lambda c b")
        ->check(CLI::IsMember({"mu", "r", "sigma", "lambda", "c", "b"}));
    sweep_cmd->add_option("--from", sweep_from, "first value")->required();
    sweep_cmd->add_option("--to", sweep_to, "last value")->required();
    sweep_cmd->add_option("--steps", sweep_steps, "number of values (>= 2)");
    sweep_cmd->add_option("--at", sweep_at,
                          "wealth at which phi and pi* are reported (default w_safe/2)");
    add_io(sweep_cmd);

    // simulate
    ParamFlags sim_p;
    double sim_w0 = 0.5;
    std::int64_t sim_paths = 100000;
    double sim_dt = 1e-3, sim_horizon = 0.0;
    std::uint64_t sim_seed = 1;
    int sim_threads = 0;
    std::string sim_strategy = "optimal";
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of the success probability");
    sim_p.attach(sim_cmd);
    sim_cmd->add_option("--w0", sim_w0, "starting wealth")->required();
    sim_cmd->add_option("--paths", sim_paths, "number of paths");
    sim_cmd->add_option("--dt", sim_dt, "time step in years (<= 1/252)");
    sim_cmd->add_option("--seed", sim_seed, "RNG seed");
    sim_cmd->add_option("--horizon", sim_horizon, "horizon cap in years (default 50/lambda)");
    sim_cmd->add_option("--threads", sim_threads, "worker threads (0 = hardware)");
    sim_cmd->add_option("--strategy", sim_strategy,
                        "feedback rule: optimal, ruin-min or floor-restricted")
        ->check(CLI::IsMember({"optimal", "ruin-min", "floor-restricted"}));
    add_io(sim_cmd);

    // verify
    ParamFlags verify_p;
    bool verify_quick = false;
    std::int64_t verify_paths = 20000;
    std::uint64_t verify_seed = 20260809;
    int verify_threads = 0;
    double verify_corrupt = 1.0;
    auto* verify_cmd =
        app.add_subcommand("verify", "run the residual/inequality/Monte Carlo battery");
    verify_p.attach(verify_cmd);
    verify_cmd->add_flag("--quick", verify_quick, "skip the Monte Carlo checks");
    verify_cmd->add_option("--mc-paths", verify_paths, "paths for the Monte Carlo check");
    verify_cmd->add_option("--seed", verify_seed, "RNG seed for the Monte Carlo check");
    verify_cmd->add_option("--threads", verify_threads, "worker threads (0 = hardware)");
    verify_cmd
        ->add_option("--corrupt-zb0", verify_corrupt,
                     "testing hook: scale the solved boundary ratio by this factor")
        ->group("");  // hidden from --help
    add_io(verify_cmd);

    // props
    ParamFlags props_p;
    double props_b2 = -1.0;
    std::size_t props_grid = 400;
    auto* props_cmd =
        app.add_subcommand("props", "qualitative properties of the optimal strategy");
    props_p.attach(props_cmd);
    props_cmd->add_option("--b2", props_b2,
                          "second bequest goal for the independence check (> b)");
    props_cmd->add_option("--grid", props_grid, "wealth grid size for the comparisons");
    add_io(props_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve_cmd->parsed())
            return run_solve(solve_p, solve_grid, solve_wmin, solve_wmax, format, out_path);
        if (sweep_cmd->parsed())
            return run_sweep(sweep_p, sweep_param, sweep_from, sweep_to, sweep_steps, sweep_at,
                             format, out_path);
        if (sim_cmd->parsed())
            return run_simulate(sim_p, sim_w0, sim_paths, sim_dt, sim_seed, sim_horizon,
                                sim_threads, sim_strategy, format, out_path);
        if (verify_cmd->parsed())
            return run_verify_cmd(verify_p, verify_quick, verify_paths, verify_seed,
                                  verify_threads, verify_corrupt, format, out_path);
        if (props_cmd->parsed())
            return run_props(props_p, props_b2, props_grid, format, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
