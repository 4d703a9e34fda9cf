// mcf-lab: radial forced mean-curvature-flow laboratory.
//
// Subcommands: evolve, eigen, oracle, coercivity, residual, run, compare.
// Exit codes: 0 success, 1 expectation failure, 2 input error, 3 numerical
// failure.

#include <atomic>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcflab/coercivity.hpp"
#include "mcflab/control_oracle.hpp"
#include "mcflab/eigen_solver.hpp"
#include "mcflab/hj_upwind.hpp"
#include "mcflab/parabolic.hpp"
#include "mcflab/problem.hpp"
#include "mcflab/runner.hpp"

namespace {

using namespace mcflab;
using nlohmann::json;

/** A --scenario argument may be a bare problem file, a full scenario file, or
 * a built-in scenario name. */
radial_problem load_problem_arg(const std::string& arg) {
    std::string path = arg;
    if (!std::filesystem::exists(path)) path = resolve_scenario_path(arg);
    const json doc = json::parse(read_text_file(path), nullptr, true, true);
    if (doc.contains("problem")) return parse_problem(doc["problem"]);
    return parse_problem(doc);
}

int cmd_evolve(const std::string& scen, double eta, int m, double T, double cfl,
               const std::string& out_dir, std::vector<double> snaps) {
    const radial_problem prob = load_problem_arg(scen);
    std::filesystem::create_directories(out_dir);
    solver_config cfg;
    cfg.eta = eta;
    cfg.T = T;
    cfg.cfl_safety = cfl;
    cfg.report_every = 4000;
    cfg.snapshot_times = snaps;
    const double t1 = 0.5 * T;
    if (std::find(snaps.begin(), snaps.end(), t1) == snaps.end())
        cfg.snapshot_times.push_back(t1);
    const grid g(prob.R, m);

    const time_series series =
        (eta > 0.0) ? evolve(prob, cfg, g) : evolve_hj(prob, cfg, g);

    for (const auto& [t, u] : series.snapshots) {
        if (t == 0.0 || std::find_if(cfg.snapshot_times.begin(), cfg.snapshot_times.end(),
                                     [&](double s) { return std::abs(s - t) < 1e-12; }) !=
                            cfg.snapshot_times.end() ||
            std::abs(t - T) < 1e-12) {
            char name[64];
            std::snprintf(name, sizeof name, "/u_t%.6f.csv", t);
            write_csv(u, out_dir + name);
        }
    }
    auto monitor = [&](const std::vector<std::pair<double, double>>& tr,
                       const std::string& name) {
        std::ofstream f(out_dir + "/" + name);
        f << "t,value\n";
        char buf[64];
        for (auto [t, v] : tr) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, v);
            f << buf;
        }
    };
    monitor(series.grad_sup, "grad_sup.csv");
    monitor(series.dt_sup, "dt_sup.csv");
    monitor(series.lambda_trace, "lambda_trace.csv");

    const auto ev = eigen_from_evolution(series, t1, T);
    json summary;
    summary["lambda_mean"] = ev.lambda_mean;
    summary["final_grad_sup"] = series.final_grad_sup;
    summary["max_dt_sup"] = series.max_dt_sup;
    if (eta == 0.0) {
        radial_problem pr = prob;
        double anchor = prob.R;
        try {
            anchor = eigenvalue_formula(pr, m).smallest_aubry_r();
        } catch (const std::exception&) {
        }
        write_csv(profile_from_evolution(series, ev.lambda_mean, T, anchor),
                  out_dir + "/profile.csv");
        summary["profile"] = out_dir + "/profile.csv";
    }
    scenario_runner::write_json(summary, out_dir + "/summary.json");
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_eigen(const std::string& scen, std::vector<double> ks, std::vector<double> etas,
              int m, const std::string& out_dir) {
    const radial_problem prob = load_problem_arg(scen);
    std::filesystem::create_directories(out_dir);
    solver_config cfg;
    cfg.T = 4000.0;
    cfg.tol_steady = 1e-3;
    cfg.report_every = 100000;
    const eigen_estimate est = eigen_limit(prob, ks, etas, cfg, grid(prob.R, m));
    json j;
    j["lambda"] = est.lambda;
    j["route"] = est.route;
    j["extrapolation_residual"] = est.extrapolation_residual;
    j["max_ku_sup"] = est.max_ku_sup;
    j["max_grad_sup"] = est.max_grad_sup;
    for (const auto& d : est.diagnostics)
        j["diagnostics"].push_back({{"k", d.k},
                                    {"eta", d.eta},
                                    {"lambda_k", d.lambda_k},
                                    {"steady_residual", d.steady_residual}});
    write_csv(est.w, out_dir + "/w.csv");
    scenario_runner::write_json(j, out_dir + "/eigen.json");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_oracle(const std::string& scen, int m, double dt, double horizon,
               const std::string& out_dir) {
    const radial_problem prob = load_problem_arg(scen);
    std::filesystem::create_directories(out_dir);
    dp_config dpc;
    dpc.m = m;
    dpc.dt = dt;
    dpc.horizon = horizon;
    const aubry_report rep = eigenvalue_formula(prob, m);
    json j;
    j["r_cr"] = std::isfinite(rep.r_cr) ? json(rep.r_cr) : json("infinity");
    j["lambda"] = rep.lambda;
    j["boundary_candidate"] = rep.boundary_candidate;
    j["interior_sup"] = rep.interior_sup;
    for (int idx : rep.aubry_nodes) j["aubry_r"].push_back(rep.g.r(idx));

    const auto vs = dp_value_series(prob, dpc, {0.5 * horizon, horizon});
    write_csv(vs[0], out_dir + "/dp_value_half.csv");
    write_csv(vs[1], out_dir + "/dp_value_final.csv");

    const distance_result dr = distance(prob, rep.lambda, dpc);
    {
        std::ofstream f(out_dir + "/distance_matrix.csv");
        char buf[64];
        for (int i = 0; i <= dr.g.m; ++i) {
            for (int jj = 0; jj <= dr.g.m; ++jj) {
                std::snprintf(buf, sizeof buf, "%.17g%c", dr.d[i][jj],
                              jj == dr.g.m ? '\n' : ',');
                f << buf;
            }
        }
    }
    j["distance_stationary"] = dr.stationary;
    write_csv(asymptotic_profile(prob, dpc, rep), out_dir + "/profile.csv");
    scenario_runner::write_json(j, out_dir + "/aubry.json");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_coercivity(const std::string& scen, int m) {
    const radial_problem prob = load_problem_arg(scen);
    const coercivity_report rep = coercivity_margin(prob, m);
    json j;
    j["C0"] = rep.C0;
    j["K0"] = rep.K0;
    j["delta_star"] = rep.delta_star;
    j["satisfied"] = rep.satisfied;
    const double rcr = crossing_point(prob);
    j["r_cr"] = std::isfinite(rcr) ? json(rcr) : json("infinity");
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_residual(const std::string& scen, double lambda, const std::string& w_file,
                 std::vector<double> w_poly, double eta, double q, int m) {
    radial_problem prob = load_problem_arg(scen);
    if (q > 0.0) prob.q = q;
    const grid g(prob.R, m);
    grid_function w(g);
    if (!w_file.empty())
        w = read_csv(w_file);
    else if (!w_poly.empty())
        w = sample(scalar_field::make_polynomial(w_poly), g);
    else
        throw input_error("residual: provide --w-file or --w-poly");
    const grid_function res = residual(prob, lambda, w, eta, prob.q);
    json j;
    double interior = 0.0;
    for (int i = 0; i < res.g.m; ++i) interior = std::max(interior, std::abs(res[i]));
    j["sup_interior"] = interior;
    j["boundary"] = res[res.g.m];
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_one(const std::string& name, const std::string& out_root) {
    const scenario s = load_scenario_file(resolve_scenario_path(name));
    scenario_runner runner(s, out_root + "/" + s.name);
    int code = 0;
    const json summary = runner.run(&code);
    std::cout << summary.dump(2) << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mcf-lab: forced mean-curvature flow laboratory (radial)"};
    app.require_subcommand(1);

    std::string scen, out_dir = "out", w_file;
    std::vector<std::string> names, routes;
    std::vector<double> snaps, ks{0.1, 0.05, 0.025}, etas{0.05}, w_poly;
    int grid_m = 400, jobs = 1;
    double eta = 0.0, T = 10.0, cfl = 0.9, dt = 0.0, horizon = 60.0;
    double lambda = 0.0, q = 0.0, lambda_tol = 5e-2, profile_tol = 1e-1;

    auto* ev = app.add_subcommand("evolve", "time-step a scenario");
    ev->add_option("--scenario", scen)->required();
    ev->add_option("--eta", eta);
    ev->add_option("--grid-m", grid_m);
    ev->add_option("--T", T);
    ev->add_option("--cfl", cfl);
    ev->add_option("--out", out_dir);
    ev->add_option("--snap", snaps);

    auto* eg = app.add_subcommand("eigen", "k-regularized eigenvalue route");
    eg->add_option("--scenario", scen)->required();
    eg->add_option("--ks", ks);
    eg->add_option("--etas", etas);
    eg->add_option("--grid-m", grid_m);
    eg->add_option("--out", out_dir);

    auto* orc = app.add_subcommand("oracle", "control-oracle route");
    orc->add_option("--scenario", scen)->required();
    orc->add_option("--grid-m", grid_m);
    orc->add_option("--dt", dt);
    orc->add_option("--horizon", horizon);
    orc->add_option("--out", out_dir);

    auto* co = app.add_subcommand("coercivity", "coercivity report");
    co->add_option("--scenario", scen)->required();
    co->add_option("--grid-m", grid_m);

    auto* rs = app.add_subcommand("residual", "stationary residual check");
    rs->add_option("--scenario", scen)->required();
    rs->add_option("--lambda", lambda)->required();
    rs->add_option("--w-file", w_file);
    rs->add_option("--w-poly", w_poly);
    rs->add_option("--eta", eta);
    rs->add_option("--q", q);
    rs->add_option("--grid-m", grid_m);

    auto* rn = app.add_subcommand("run", "run named scenarios with expectations");
    rn->add_option("names", names)->required();
    rn->add_option("--out", out_dir);
    rn->add_option("--jobs", jobs);

    auto* cp = app.add_subcommand("compare", "cross-route comparison");
    cp->add_option("--scenario", scen)->required();
    cp->add_option("--routes", routes)->required();
    cp->add_option("--lambda-tol", lambda_tol);
    cp->add_option("--profile-tol", profile_tol);
    cp->add_option("--out", out_dir);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ev->parsed()) return cmd_evolve(scen, eta, grid_m, T, cfl, out_dir, snaps);
        if (eg->parsed()) return cmd_eigen(scen, ks, etas, grid_m, out_dir);
        if (orc->parsed()) return cmd_oracle(scen, grid_m, dt, horizon, out_dir);
        if (co->parsed()) return cmd_coercivity(scen, grid_m);
        if (rs->parsed())
            return cmd_residual(scen, lambda, w_file, w_poly, eta, q, grid_m);
        if (rn->parsed()) {
            std::atomic<int> worst{0};
            std::atomic<std::size_t> next{0};
            auto work = [&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= names.size()) return;
                    int code;
                    try {
                        code = run_one(names[i], out_dir);
                    } catch (const input_error& e) {
                        std::cerr << "error: " << e.what() << "\n";
                        code = 2;
                    } catch (const std::exception& e) {
                        std::cerr << "error: " << e.what() << "\n";
                        code = 3;
                    }
                    int cur = worst.load();
                    while (code > cur && !worst.compare_exchange_weak(cur, code)) {
                    }
                }
            };
            std::vector<std::thread> pool;
            const int nthreads = std::max(1, std::min<int>(jobs, (int)names.size()));
            for (int i = 0; i < nthreads - 1; ++i) pool.emplace_back(work);
            work();
            for (auto& th : pool) th.join();
            return worst.load();
        }
        if (cp->parsed()) {
            const scenario s = load_scenario_file(resolve_scenario_path(scen));
            scenario_runner runner(s, out_dir + "/" + s.name + "-compare");
            int code = 0;
            const nlohmann::json table =
                runner.compare(routes, lambda_tol, profile_tol, &code);
            std::cout << table.dump(2) << "\n";
            return code;
        }
    } catch (const input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
