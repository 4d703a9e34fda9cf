#ifndef MCFLAB_RUNNER_HPP
#define MCFLAB_RUNNER_HPP

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcflab/control_oracle.hpp"
#include "mcflab/eigen_solver.hpp"
#include "mcflab/hj_upwind.hpp"
#include "mcflab/parabolic.hpp"
#include "mcflab/problem.hpp"

namespace mcflab {

struct expectation {
    std::string quantity;
    nlohmann::json target;  // number, bool, or "nonconstant"
    double tol = 0.0;
};

struct scenario {
    std::string name;
    radial_problem problem;
    int grid_m = 400;
    double T = 20.0;
    double window_lo = 10.0, window_hi = 20.0;
    double evolution_eta = 0.05;
    int evolution_grid_m = 200;
    double evolution_T = 12.0;
    int eigen_grid_m = 100;
    std::vector<double> ks = {0.1, 0.05, 0.025};
    std::vector<double> etas = {0.05};
    dp_config dpc;
    std::vector<double> sweep_etas;
    double sweep_T = 1.0;
    unsigned seed = 0;
    int pair_count = 20;
    std::vector<std::string> routes;
    std::vector<expectation> expectations;
};

inline scenario parse_scenario(const nlohmann::json& j) {
    scenario s;
    try {
        s.name = j.at("name").get<std::string>();
        s.problem = parse_problem(j.at("problem"));
        s.grid_m = j.value("grid_m", 400);
        s.T = j.value("T", 20.0);
        if (j.contains("window")) {
            s.window_lo = j["window"].at(0).get<double>();
            s.window_hi = j["window"].at(1).get<double>();
        } else {
            s.window_lo = 0.5 * s.T;
            s.window_hi = s.T;
        }
        s.evolution_eta = j.value("evolution_eta", 0.05);
        s.evolution_grid_m = j.value("evolution_grid_m", 200);
        s.evolution_T = j.value("evolution_T", 12.0);
        s.eigen_grid_m = j.value("eigen_grid_m", 100);
        if (j.contains("ks")) s.ks = j["ks"].get<std::vector<double>>();
        if (j.contains("etas")) s.etas = j["etas"].get<std::vector<double>>();
        if (j.contains("dp")) {
            const auto& d = j["dp"];
            s.dpc.m = d.value("m", 160);
            s.dpc.dt = d.value("dt", 0.0);
            s.dpc.horizon = d.value("horizon", 80.0);
            s.dpc.controls_per_node = d.value("controls_per_node", 3);
        } else {
            s.dpc.m = 160;
            s.dpc.horizon = 80.0;
        }
        if (j.contains("sweep_etas"))
            s.sweep_etas = j["sweep_etas"].get<std::vector<double>>();
        s.sweep_T = j.value("sweep_T", 1.0);
        s.seed = j.value("seed", 0u);
        s.pair_count = j.value("pair_count", 20);
        if (j.contains("routes")) s.routes = j["routes"].get<std::vector<std::string>>();
        if (j.contains("expectations"))
            for (const auto& e : j["expectations"]) {
                expectation ex;
                ex.quantity = e.at("quantity").get<std::string>();
                ex.target = e.at("target");
                ex.tol = e.value("tol", 0.0);
                s.expectations.push_back(ex);
            }
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("malformed scenario: ") + e.what());
    }
    return s;
}

inline scenario load_scenario_file(const std::string& path) {
    return parse_scenario(nlohmann::json::parse(read_text_file(path), nullptr, true, true));
}

/** Locate a named scenario file: an existing path wins, then
 * $MCFLAB_SCENARIOS, then the build-time scenario directory. */
inline std::string resolve_scenario_path(const std::string& name_or_path) {
    namespace fs = std::filesystem;
    if (fs::exists(name_or_path)) return name_or_path;
    std::vector<std::string> dirs;
    if (const char* env = std::getenv("MCFLAB_SCENARIOS")) dirs.push_back(env);
#ifdef MCFLAB_SCENARIO_DIR
    dirs.push_back(MCFLAB_SCENARIO_DIR);
#endif
    dirs.push_back("scenarios");
    for (const auto& d : dirs) {
        const std::string p = d + "/" + name_or_path + ".json";
        if (fs::exists(p)) return p;
    }
    throw input_error("unknown scenario: " + name_or_path);
}

/** Random compatible ordered initial pair for the comparison tests: a table
 * whose final-segment slope matches the Neumann datum, plus a nonnegative
 * bump that is flat at the boundary. */
inline std::pair<scalar_field, scalar_field> ordered_initial_pair(
    const radial_problem& p, std::mt19937& rng) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::uniform_real_distribution<double> bump(0.0, 1.0);
    const int nk = 6;
    std::vector<double> knots(nk), lo(nk), hi(nk);
    for (int i = 0; i < nk; ++i) knots[i] = p.R * i / (nk - 1);
    for (int i = 0; i < nk; ++i) lo[i] = amp(rng);
    lo[nk - 1] = lo[nk - 2] + p.phi_R * (knots[nk - 1] - knots[nk - 2]);
    for (int i = 0; i < nk; ++i) hi[i] = lo[i] + bump(rng);
    hi[nk - 1] = hi[nk - 2] + p.phi_R * (knots[nk - 1] - knots[nk - 2]);
    return {scalar_field::make_table(knots, lo), scalar_field::make_table(knots, hi)};
}

namespace detail {

inline double snapshot_violation(const time_series& a, const time_series& b) {
    double worst = 0.0;
    const std::size_t ns = std::min(a.snapshots.size(), b.snapshots.size());
    for (std::size_t s = 0; s < ns; ++s) {
        const auto& ua = a.snapshots[s].second;
        const auto& ub = b.snapshots[s].second;
        for (int i = 0; i <= ua.g.m; ++i)
            worst = std::max(worst, ua[i] - ub[i]);
    }
    return worst;
}

}  // namespace detail

/** Largest ordering violation max(u_A - u_B) over all snapshots for
 * pair_count random compatible ordered pairs, run through both steppers with
 * a shared fixed step. Nonpositive values mean the discrete comparison
 * principle held. */
inline std::pair<double, double> comparison_violations(const radial_problem& base,
                                                       unsigned seed, int pair_count,
                                                       int m, double T, double eta) {
    std::mt19937 rng(seed);
    const grid g(base.R, m);
    double worst_par = -1.0, worst_hj = -1.0;
    for (int p = 0; p < pair_count; ++p) {
        auto [u0a, u0b] = ordered_initial_pair(base, rng);
        radial_problem pa = base, pb = base;
        pa.u0 = u0a;
        pb.u0 = u0b;

        double grad_bound = 0.0;
        for (int i = 0; i <= m; ++i) {
            const double r = g.r(i);
            grad_bound = std::max({grad_bound, std::abs(u0a.derivative(r)),
                                   std::abs(u0b.derivative(r))});
        }
        double sup_c = 0.0;
        for (int i = 0; i <= m; ++i)
            sup_c = std::max(sup_c, std::abs(base.c.evaluate(g.r(i))));
        const double h = g.h();
        const double adv0 = (base.n - 1) / h;

        solver_config cfg;
        cfg.T = T;
        cfg.report_every = 50;

        cfg.eta = eta;
        cfg.dt = 0.35 * std::min(h * h / (2.0 * base.n),
                                 h / (adv0 + sup_c * (1.0 + 4.0 * (grad_bound + 1.0))));
        const time_series ra = evolve(pa, cfg, g);
        const time_series rb = evolve(pb, cfg, g);
        worst_par = std::max(worst_par, detail::snapshot_violation(ra, rb));

        cfg.eta = 0.0;
        cfg.dt = 0.0;  // the eta=0 step does not depend on the data
        const time_series ha = evolve_hj(pa, cfg, g);
        const time_series hb = evolve_hj(pb, cfg, g);
        worst_hj = std::max(worst_hj, detail::snapshot_violation(ha, hb));
    }
    return {worst_par, worst_hj};
}

/** Everything a scenario run (or comparison) may need, computed lazily and
 * exposed as named scalar quantities. */
class scenario_runner {
  public:
    scenario_runner(const scenario& s, std::string out_dir)
        : s_(s), out_(std::move(out_dir)) {
        std::filesystem::create_directories(out_);
    }

    bool wants(const std::string& route) const {
        if (s_.routes.empty()) return true;
        for (const auto& r : s_.routes)
            if (r == route) return true;
        return false;
    }

    const aubry_report& formula() {
        if (!formula_) {
            coercivity_report cr = coercivity_margin(s_.problem, s_.grid_m);
            if (!cr.satisfied)
                throw numerical_error(
                    "formula route refused: coercivity condition unsatisfied "
                    "(delta_star <= 0); the constant-speed formula does not apply");
            formula_ = eigenvalue_formula(s_.problem, s_.grid_m);
        }
        return *formula_;
    }

    /** Anchor for profile normalization; falls back to the boundary when the
     * formula route is refused. */
    double anchor_radius() {
        try {
            return formula().smallest_aubry_r();
        } catch (const numerical_error&) {
            return s_.problem.R;
        }
    }

    double lambda_reference() {
        try {
            return formula().lambda;
        } catch (const numerical_error&) {
            return eigen_from_evolution(hj_run(), s_.window_lo, s_.window_hi).lambda_mean;
        }
    }

    const time_series& hj_run() {
        if (!hj_) {
            solver_config cfg;
            cfg.eta = 0.0;
            cfg.T = s_.T;
            cfg.report_every = 4000;
            cfg.snapshot_times = {s_.window_lo, s_.window_hi};
            hj_ = evolve_hj(s_.problem, cfg, grid(s_.problem.R, s_.grid_m));
        }
        return *hj_;
    }

    const time_series& evolution_run() {
        if (!evo_) {
            solver_config cfg;
            cfg.eta = s_.evolution_eta;
            cfg.T = s_.evolution_T;
            cfg.report_every = 4000;
            cfg.snapshot_times = {0.5 * s_.evolution_T, s_.evolution_T};
            evo_ = evolve(s_.problem, cfg, grid(s_.problem.R, s_.evolution_grid_m));
        }
        return *evo_;
    }

    const eigen_estimate& klimit() {
        if (!klimit_) {
            solver_config cfg;
            cfg.T = 4000.0;
            cfg.tol_steady = 1e-3;
            cfg.report_every = 100000;
            klimit_ = eigen_limit(s_.problem, s_.ks, s_.etas, cfg,
                                  grid(s_.problem.R, s_.eigen_grid_m));
        }
        return *klimit_;
    }

    const std::vector<grid_function>& dp_runs() {
        if (!dp_) dp_ = dp_value_series(s_.problem, s_.dpc, {s_.window_lo, s_.window_hi});
        return *dp_;
    }

    const grid_function& oracle_profile() {
        if (!oracle_profile_) {
            aubry_report rep = eigenvalue_formula(s_.problem, s_.dpc.m);
            oracle_profile_ = asymptotic_profile(s_.problem, s_.dpc, rep);
        }
        return *oracle_profile_;
    }

    const sweep_result& sweep() {
        if (!sweep_) {
            solver_config cfg;
            cfg.T = s_.sweep_T;
            cfg.report_every = 100000;
            sweep_ = viscosity_sweep(s_.problem, s_.sweep_etas, cfg,
                                     grid(s_.problem.R, s_.evolution_grid_m));
        }
        return *sweep_;
    }

    double quantity(const std::string& q) {
        if (auto it = cache_.find(q); it != cache_.end()) return it->second;
        const double v = compute(q);
        cache_[q] = v;
        return v;
    }

    /** Executes the scenario's routes, writes the output bundle, evaluates
     * the expectations. Returns the summary; exit status 0 only if every
     * expectation held. */
    nlohmann::json run(int* exit_code) {
        nlohmann::json summary;
        summary["name"] = s_.name;
        nlohmann::json results = nlohmann::json::object();
        bool all_ok = true;
        for (const auto& ex : s_.expectations) {
            nlohmann::json row;
            row["quantity"] = ex.quantity;
            row["target"] = ex.target;
            row["tol"] = ex.tol;
            bool ok = false;
            std::string status = "ok";
            double val = 0.0;
            try {
                val = quantity(ex.quantity);
                row["value"] = val;
                if (ex.target.is_string() && ex.target.get<std::string>() == "nonconstant")
                    ok = val >= ex.tol;
                else if (ex.target.is_boolean())
                    ok = (val != 0.0) == ex.target.get<bool>();
                else
                    ok = std::abs(val - ex.target.get<double>()) <= ex.tol;
            } catch (const std::exception& e) {
                status = e.what();
                ok = false;
            }
            row["status"] = status;
            row["pass"] = ok;
            all_ok = all_ok && ok;
            results[ex.quantity] = row;
        }
        summary["expectations"] = results;
        summary["pass"] = all_ok;
        write_bundle();
        write_json(summary, out_ + "/summary.json");
        if (exit_code) *exit_code = all_ok ? 0 : 1;
        return summary;
    }

    /** Pairwise lambda and profile distances between the requested routes. */
    nlohmann::json compare(const std::vector<std::string>& routes, double lambda_tol,
                           double profile_tol, int* exit_code) {
        if (routes.size() < 2) throw input_error("compare needs at least two routes");
        nlohmann::json out;
        std::map<std::string, double> lambdas;
        std::map<std::string, grid_function> profiles;
        nlohmann::json status = nlohmann::json::object();
        for (const auto& r : routes) {
            try {
                lambdas[r] = quantity("lambda." + r);
                status[r] = "ok";
            } catch (const std::exception& e) {
                status[r] = std::string("refused: ") + e.what();
            }
            try {
                if (r == "hj")
                    profiles[r] = profile_from_evolution(hj_run(), lambda_reference(),
                                                         s_.window_hi, anchor_radius());
                else if (r == "dp")
                    profiles[r] = oracle_profile();
            } catch (const std::exception&) {
            }
        }
        out["status"] = status;
        nlohmann::json lam = nlohmann::json::object();
        for (const auto& [r, v] : lambdas) lam[r] = v;
        out["lambda"] = lam;

        bool flagged = false;
        nlohmann::json dist = nlohmann::json::object();
        for (auto a = lambdas.begin(); a != lambdas.end(); ++a)
            for (auto b = std::next(a); b != lambdas.end(); ++b) {
                const double d = std::abs(a->second - b->second);
                dist[a->first + "-" + b->first] = d;
                if (d > lambda_tol) flagged = true;
            }
        out["lambda_distance"] = dist;

        nlohmann::json pdist = nlohmann::json::object();
        for (auto a = profiles.begin(); a != profiles.end(); ++a)
            for (auto b = std::next(a); b != profiles.end(); ++b) {
                const double d = profile_distance(a->second, b->second);
                pdist[a->first + "-" + b->first] = d;
                if (d > profile_tol) flagged = true;
            }
        out["profile_distance"] = pdist;
        out["flagged"] = flagged;
        write_json(out, out_ + "/compare.json");
        if (exit_code) *exit_code = flagged ? 1 : 0;
        return out;
    }

    static void write_json(const nlohmann::json& j, const std::string& path) {
        std::ofstream f(path);
        if (!f) throw input_error("cannot open for writing: " + path);
        f << j.dump(2) << "\n";
    }

    /** Sup distance between profiles on possibly different grids (the coarser
     * one is compared at its own nodes against the interpolated finer one). */
    static double profile_distance(const grid_function& a, const grid_function& b) {
        const grid_function& coarse = (a.g.m <= b.g.m) ? a : b;
        const grid_function& fine = (a.g.m <= b.g.m) ? b : a;
        double d = 0.0;
        for (int i = 0; i <= coarse.g.m; ++i)
            d = std::max(d, std::abs(coarse[i] - interpolate(fine, coarse.g.r(i))));
        return d;
    }

  private:
    double compute(const std::string& q) {
        if (q == "coercivity.delta_star") return coercivity_margin(s_.problem, s_.grid_m).delta_star;
        if (q == "coercivity.satisfied")
            return coercivity_margin(s_.problem, s_.grid_m).satisfied ? 1.0 : 0.0;
        if (q == "coercivity.C0") return boundary_constants(s_.problem).first;
        if (q == "coercivity.K0") return boundary_constants(s_.problem).second;
        if (q == "r_cr") return crossing_point(s_.problem);
        if (q == "lambda.formula") return formula().lambda;
        if (q == "formula.refused") {
            try {
                formula();
                return 0.0;
            } catch (const numerical_error&) {
                return 1.0;
            }
        }
        if (q == "lambda.hj")
            return eigen_from_evolution(hj_run(), s_.window_lo, s_.window_hi).lambda_mean;
        if (q == "lambda.evolution")
            return eigen_from_evolution(evolution_run(), 0.5 * s_.evolution_T,
                                        s_.evolution_T)
                .lambda_mean;
        if (q == "lambda.k-limit" || q == "lambda.k_limit") return klimit().lambda;
        if (q == "lambda.dp") {
            const auto& vs = dp_runs();
            return (mean(vs[1]) - mean(vs[0])) / (s_.window_hi - s_.window_lo);
        }
        if (q == "lambda.pointwise.range") {
            const auto lam =
                eigen_from_evolution(hj_run(), s_.window_lo, s_.window_hi).lambda_pointwise;
            double lo = lam[0], hi = lam[0];
            for (double v : lam.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            return hi - lo;
        }
        if (q == "lambda.pointwise.max_err") {
            const auto lam =
                eigen_from_evolution(hj_run(), s_.window_lo, s_.window_hi).lambda_pointwise;
            const auto ref = pointwise_lambda_formula(s_.problem, lam.g);
            return sup_distance(lam, ref);
        }
        if (q == "profile.window_drift") {
            const double lam = lambda_reference();
            const double a = anchor_radius();
            return sup_distance(
                profile_from_evolution(hj_run(), lam, s_.window_lo, a),
                profile_from_evolution(hj_run(), lam, s_.window_hi, a));
        }
        if (q == "profile.hj_vs_oracle") {
            const double lam = lambda_reference();
            return profile_distance(
                profile_from_evolution(hj_run(), lam, s_.window_hi, anchor_radius()),
                oracle_profile());
        }
        if (q == "residual.branch1.sup" || q == "residual.branch2.sup") {
            const grid g(s_.problem.R, s_.grid_m);
            const bool b1 = q == "residual.branch1.sup";
            const double lam = b1 ? (s_.problem.n - 1) / s_.problem.R : 0.0;
            const scalar_field w =
                b1 ? scalar_field::make_polynomial({0.0, 0.0, 0.5 / s_.problem.R})
                   : scalar_field::make_constant(1.0);
            return sup_norm(residual(s_.problem, lam, w, 0.0, s_.problem.q, g));
        }
        if (q == "comparison.max_violation.parabolic" ||
            q == "comparison.max_violation.hj") {
            if (!cmp_) {
                cmp_ = comparison_violations(s_.problem, s_.seed, s_.pair_count,
                                             s_.evolution_grid_m, 0.5, 0.1);
            }
            return q.back() == 'c' ? cmp_->first : cmp_->second;
        }
        if (q == "sweep.distances_decreasing") {
            const auto& sw = sweep();
            for (std::size_t i = 1; i < sw.consecutive_distances.size(); ++i)
                if (!(sw.consecutive_distances[i] < sw.consecutive_distances[i - 1]))
                    return 0.0;
            return 1.0;
        }
        if (q == "sweep.grad_variation") {
            const auto& sw = sweep();
            double lo = sw.final_grad_sups[0], hi = lo;
            for (double v : sw.final_grad_sups) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            return (hi - lo) / std::max(1e-300, hi);
        }
        if (q == "sweep.grad_growth") {
            const auto& sw = sweep();
            return sw.final_grad_sups.back() / std::max(1e-300, sw.final_grad_sups.front());
        }
        throw input_error("unknown quantity: " + q);
    }

    void write_bundle() {
        if (hj_) {
            write_csv(hj_->at(s_.window_hi), out_ + "/hj_final.csv");
            write_monitor(hj_->grad_sup, out_ + "/hj_grad_sup.csv");
            write_monitor(hj_->dt_sup, out_ + "/hj_dt_sup.csv");
            write_monitor(hj_->lambda_trace, out_ + "/hj_lambda_trace.csv");
            const auto ev = eigen_from_evolution(*hj_, s_.window_lo, s_.window_hi);
            write_csv(ev.lambda_pointwise, out_ + "/hj_lambda_pointwise.csv");
            write_csv(profile_from_evolution(*hj_, lambda_reference(), s_.window_hi,
                                             anchor_radius()),
                      out_ + "/hj_profile.csv");
        }
        if (evo_) {
            write_csv(evo_->at(s_.evolution_T), out_ + "/evolve_final.csv");
            write_monitor(evo_->grad_sup, out_ + "/evolve_grad_sup.csv");
            write_monitor(evo_->dt_sup, out_ + "/evolve_dt_sup.csv");
        }
        if (klimit_) write_csv(klimit_->w, out_ + "/klimit_w.csv");
        if (dp_) write_csv(dp_->back(), out_ + "/dp_value.csv");
        if (oracle_profile_) write_csv(*oracle_profile_, out_ + "/oracle_profile.csv");
    }

    static void write_monitor(const std::vector<std::pair<double, double>>& tr,
                              const std::string& path) {
        std::ofstream f(path);
        if (!f) throw input_error("cannot open for writing: " + path);
        f << "t,value\n";
        char buf[64];
        for (const auto& [t, v] : tr) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", t, v);
            f << buf;
        }
    }

    scenario s_;
    std::string out_;
    std::optional<aubry_report> formula_;
    std::optional<time_series> hj_, evo_;
    std::optional<eigen_estimate> klimit_;
    std::optional<std::vector<grid_function>> dp_;
    std::optional<grid_function> oracle_profile_;
    std::optional<sweep_result> sweep_;
    std::optional<std::pair<double, double>> cmp_;
    std::map<std::string, double> cache_;
};

}  // namespace mcflab

#endif
