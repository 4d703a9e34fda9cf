#ifndef MCFLAB_PARABOLIC_HPP
#define MCFLAB_PARABOLIC_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "mcflab/coercivity.hpp"
#include "mcflab/grid.hpp"
#include "mcflab/problem.hpp"
#include "mcflab/time_series.hpp"

namespace mcflab {

namespace detail {

/** Sorted unique future landing times (snapshot requests plus T). */
inline std::vector<double> landing_times(const solver_config& cfg) {
    std::vector<double> ts = cfg.snapshot_times;
    ts.push_back(cfg.T);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             ts.end());
    for (double t : ts)
        if (t < 0.0 || t > cfg.T + 1e-12)
            throw input_error("snapshot time outside [0,T]");
    return ts;
}

inline void check_finite(const std::vector<double>& u, long step, double t) {
    for (std::size_t i = 0; i < u.size(); ++i)
        if (!std::isfinite(u[i])) {
            std::ostringstream msg;
            msg << "non-finite value at node " << i << " after step " << step
                << " (t = " << t << "); CFL safety too aggressive or data out of range";
            throw numerical_error(msg.str());
        }
}

}  // namespace detail

/** Explicit finite-difference evolution of the eta-regularized radial flow
 *
 *   u_t = eta^2 u_rr/(eta^2+u_r^2) + (n-1) u_r/r + c(r) sqrt(eta^2+u_r^2)
 *         - f(r) - k u
 *
 * on (0,R). The advection uses the forward difference (information travels
 * inward), the square-root term a centered gradient, and the origin row takes
 * the symmetry limit (n-1) u_r/r -> (n-1) u_rr with an even reflection ghost.
 * The boundary gradient is pinned by the capillary law. The time step obeys
 * both the parabolic bound (the origin row carries diffusion coefficient n)
 * and the advective bound with the current gradient estimate; both are
 * re-evaluated each step.
 *
 * With stop_when_steady the run ends once sup|u^{n+1}-u^n|/dt < tol_steady,
 * which turns the same stepper into the pseudo-time relaxation used by the
 * k-regularized stationary solve. */
inline time_series evolve(const radial_problem& prob, const solver_config& cfg,
                          const grid& g, bool stop_when_steady = false,
                          const std::optional<grid_function>& start = std::nullopt) {
    prob.validate();
    cfg.validate();
    if (!(cfg.eta > 0.0))
        throw input_error("evolve: eta must be positive (use the eta=0 upwind solver)");
    check_compatibility(prob, cfg.eta);

    const int m = g.m;
    const double h = g.h();
    const double eta2 = cfg.eta * cfg.eta;
    const double nm1 = prob.n - 1;
    const double p_bdry = boundary_gradient(prob.phi_R, cfg.eta, prob.q);

    std::vector<double> c(m + 1), f(m + 1), adv(m + 1);
    double sup_c = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double r = g.r(i);
        c[i] = prob.c.evaluate(r);
        f[i] = prob.f.evaluate(r);
        adv[i] = nm1 / std::max(r, h);
        sup_c = std::max(sup_c, std::abs(c[i]));
    }

    std::vector<double> u;
    if (start) {
        require_same_grid(*start, grid_function(g));
        u = start->values;
    } else {
        u = sample(prob.u0, g).values;
    }
    std::vector<double> du(m + 1);

    time_series series;
    double grad_est = sup_norm(grid_gradient(grid_function(g, u)));
    const std::vector<double> lands = detail::landing_times(cfg);
    std::size_t next_land = 0;

    double t = 0.0;
    long step = 0;
    double last_rec_t = 0.0, last_rec_mean = mean(grid_function(g, u));
    bool first_record = true;

    auto record = [&](double dtsup_now) {
        grid_function uf(g, u);
        const double gs = sup_norm(grid_gradient(uf));
        series.snapshots.emplace_back(t, uf);
        series.grad_sup.emplace_back(t, gs);
        series.dt_sup.emplace_back(t, dtsup_now);
        const double mu = mean(uf);
        if (!first_record && t > last_rec_t)
            series.lambda_trace.emplace_back(t, (mu - last_rec_mean) / (t - last_rec_t));
        first_record = false;
        last_rec_t = t;
        last_rec_mean = mu;
        series.final_grad_sup = gs;
    };
    record(0.0);

    const long max_steps = 400000000L;
    while (t < cfg.T - 1e-14) {
        const double dt_adv = h / (adv[0] + sup_c * (1.0 + grad_est));
        const double dt_diff = h * h / (2.0 * prob.n);
        double dt;
        if (cfg.dt > 0.0) {
            if (cfg.dt > std::min(dt_adv, dt_diff)) {
                std::ostringstream msg;
                msg << "CFL violation: configured dt = " << cfg.dt
                    << " exceeds the stable step " << std::min(dt_adv, dt_diff)
                    << " at t = " << t;
                if (step == 0) throw input_error(msg.str());
                throw numerical_error(msg.str());
            }
            dt = cfg.dt;
        } else {
            dt = cfg.cfl_safety * std::min(dt_adv, dt_diff);
        }
        if (prob.k > 0.0) dt = std::min(dt, 0.5 / prob.k);
        bool landed = false;
        while (next_land < lands.size() && lands[next_land] <= t + 1e-14) ++next_land;
        if (next_land < lands.size() && t + dt >= lands[next_land] - 1e-14) {
            dt = lands[next_land] - t;
            landed = true;
        }

        // origin: u_r = 0, so the quasilinear coefficient is 1 and the
        // L'Hopital replacement adds (n-1) u_rr
        const double urr0 = 2.0 * (u[1] - u[0]) / (h * h);
        du[0] = prob.n * urr0 + c[0] * cfg.eta - f[0] - prob.k * u[0];
        double gmax = std::abs(u[1] - u[0]) / h;
        for (int i = 1; i < m; ++i) {
            const double ur = (u[i + 1] - u[i - 1]) / (2.0 * h);
            const double v2 = eta2 + ur * ur;
            const double urr = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            du[i] = eta2 * urr / v2 + adv[i] * (u[i + 1] - u[i]) / h +
                    c[i] * std::sqrt(v2) - f[i] - prob.k * u[i];
            gmax = std::max(gmax, std::abs(u[i + 1] - u[i]) / h);
        }
        {
            const double v2 = eta2 + p_bdry * p_bdry;
            const double urr = 2.0 * (u[m - 1] - u[m] + h * p_bdry) / (h * h);
            du[m] = eta2 * urr / v2 + adv[m] * p_bdry + c[m] * std::sqrt(v2) - f[m] -
                    prob.k * u[m];
        }

        double dmax = 0.0;
        for (int i = 0; i <= m; ++i) {
            u[i] += dt * du[i];
            dmax = std::max(dmax, std::abs(du[i]));
        }
        t += dt;
        ++step;
        grad_est = gmax;

        if (step == 1) series.first_dt_sup = dmax;
        series.max_dt_sup = std::max(series.max_dt_sup, dmax);
        if ((step & 1023) == 0) detail::check_finite(u, step, t);

        const bool at_T = t >= cfg.T - 1e-14;
        if (landed || at_T || step % cfg.report_every == 0) record(dmax);
        if (stop_when_steady && dmax < cfg.tol_steady) {
            if (!landed && !at_T && step % cfg.report_every != 0) record(dmax);
            return series;
        }
        if (step > max_steps)
            throw numerical_error("evolve: exceeded maximum step count before t = T");
    }
    detail::check_finite(u, step, t);
    if (stop_when_steady) {
        std::ostringstream msg;
        msg << "no steady state within T = " << cfg.T
            << "; last |u_t| values:";
        for (std::size_t i = series.dt_sup.size() >= 4 ? series.dt_sup.size() - 4 : 0;
             i < series.dt_sup.size(); ++i)
            msg << " " << series.dt_sup[i].second;
        throw numerical_error(msg.str());
    }
    return series;
}

/** One evolve run per viscosity value, plus the stability diagnostics: the
 * sup-distance between consecutive eta runs at t = T and the per-eta final
 * gradient sup-norms. */
struct sweep_result {
    std::vector<double> etas;
    std::vector<time_series> runs;
    std::vector<double> consecutive_distances;
    std::vector<double> final_grad_sups;
    bool uniform_gradient_bound = true;
};

inline sweep_result viscosity_sweep(const radial_problem& prob,
                                    const std::vector<double>& etas,
                                    const solver_config& cfg, const grid& g) {
    if (etas.empty()) throw input_error("viscosity sweep needs at least one eta");
    if (prob.q != 1.0)
        throw input_error("viscosity sweep is defined for the q = 1 regime");
    for (std::size_t i = 1; i < etas.size(); ++i)
        if (!(etas[i] < etas[i - 1]))
            throw input_error("viscosity sweep etas must decrease");
    sweep_result out;
    out.etas = etas;
    for (double eta : etas) {
        solver_config c = cfg;
        c.eta = eta;
        out.runs.push_back(evolve(prob, c, g));
        out.final_grad_sups.push_back(out.runs.back().final_grad_sup);
    }
    for (std::size_t i = 1; i < out.runs.size(); ++i)
        out.consecutive_distances.push_back(sup_distance(
            out.runs[i - 1].at(cfg.T), out.runs[i].at(cfg.T)));
    const double g0 = out.final_grad_sups.front();
    const double g1 = out.final_grad_sups.back();
    out.uniform_gradient_bound = g1 <= 1.5 * g0;
    return out;
}

}  // namespace mcflab

#endif
