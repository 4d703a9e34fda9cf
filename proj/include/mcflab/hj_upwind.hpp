#ifndef MCFLAB_HJ_UPWIND_HPP
#define MCFLAB_HJ_UPWIND_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "mcflab/grid.hpp"
#include "mcflab/problem.hpp"
#include "mcflab/time_series.hpp"

namespace mcflab {

/** Monotone first-order scheme for the pure level-set radial equation
 *
 *   u_t = (n-1) u_r/r + c(r) |u_r| - f(r),   u_r(R) = phi(R),   q = 1.
 *
 * Advection by the forward difference; the growth term c|u_r| by the
 * expanding-front Godunov stencil c*sqrt(max(D+u,0)^2 + min(D-u,0)^2), which
 * is the monotone selection for this sign of the Hamiltonian with c >= 0.
 * Neumann datum via the ghost value u_{m+1} = u_m + h phi(R); the origin uses
 * the even-reflection L'Hopital row as in the regularized solver. */
inline time_series evolve_hj(const radial_problem& prob, const solver_config& cfg,
                             const grid& g,
                             const std::optional<grid_function>& start = std::nullopt) {
    prob.validate();
    cfg.validate();
    if (cfg.eta != 0.0) throw input_error("evolve_hj: config must have eta = 0");
    if (prob.q != 1.0)
        throw input_error("evolve_hj: the first-order scheme is restricted to q = 1");
    prob.require_nonnegative_forcing();
    check_compatibility(prob, 0.0);

    const int m = g.m;
    const double h = g.h();
    const double nm1 = prob.n - 1;
    const double phi = prob.phi_R;

    std::vector<double> c(m + 1), f(m + 1), adv(m + 1);
    double speed_max = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double r = g.r(i);
        c[i] = prob.c.evaluate(r);
        f[i] = prob.f.evaluate(r);
        adv[i] = nm1 / std::max(r, h);
        speed_max = std::max(speed_max, adv[i] + std::sqrt(2.0) * c[i]);
    }
    const double dt_adv = h / speed_max;
    const double dt_origin = h * h / (2.0 * nm1);
    const double dt_stable = std::min(dt_adv, dt_origin);

    std::vector<double> u;
    if (start) {
        require_same_grid(*start, grid_function(g));
        u = start->values;
    } else {
        u = sample(prob.u0, g).values;
    }
    std::vector<double> du(m + 1);

    time_series series;
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

    if (cfg.dt > 0.0 && cfg.dt > dt_stable) {
        std::ostringstream msg;
        msg << "CFL violation: configured dt = " << cfg.dt
            << " exceeds the stable step " << dt_stable;
        throw input_error(msg.str());
    }

    auto godunov = [](double dminus, double dplus) {
        const double a = std::max(dplus, 0.0);
        const double b = std::min(dminus, 0.0);
        return std::sqrt(a * a + b * b);
    };

    const long max_steps = 400000000L;
    while (t < cfg.T - 1e-14) {
        double dt = (cfg.dt > 0.0) ? cfg.dt : cfg.cfl_safety * dt_stable;
        bool landed = false;
        while (next_land < lands.size() && lands[next_land] <= t + 1e-14) ++next_land;
        if (next_land < lands.size() && t + dt >= lands[next_land] - 1e-14) {
            dt = lands[next_land] - t;
            landed = true;
        }

        {
            const double dplus = (u[1] - u[0]) / h;
            du[0] = nm1 * 2.0 * (u[1] - u[0]) / (h * h) + c[0] * godunov(-dplus, dplus) -
                    f[0] - prob.k * u[0];
        }
        for (int i = 1; i < m; ++i) {
            const double dminus = (u[i] - u[i - 1]) / h;
            const double dplus = (u[i + 1] - u[i]) / h;
            du[i] = adv[i] * dplus + c[i] * godunov(dminus, dplus) - f[i] - prob.k * u[i];
        }
        {
            const double dminus = (u[m] - u[m - 1]) / h;
            du[m] = adv[m] * phi + c[m] * godunov(dminus, phi) - f[m] - prob.k * u[m];
        }

        double dmax = 0.0;
        for (int i = 0; i <= m; ++i) {
            u[i] += dt * du[i];
            dmax = std::max(dmax, std::abs(du[i]));
        }
        t += dt;
        ++step;

        if (step == 1) series.first_dt_sup = dmax;
        series.max_dt_sup = std::max(series.max_dt_sup, dmax);
        if ((step & 4095) == 0) detail::check_finite(u, step, t);

        const bool at_T = t >= cfg.T - 1e-14;
        if (landed || at_T || step % cfg.report_every == 0) record(dmax);
        if (step > max_steps)
            throw numerical_error("evolve_hj: exceeded maximum step count before t = T");
    }
    detail::check_finite(u, step, t);
    return series;
}

/** Large-time profile u(.,t) - lambda t, normalized to vanish at the node
 * nearest the given anchor radius (the smallest Aubry point). */
inline grid_function profile_from_evolution(const time_series& s, double lambda,
                                            double t, double anchor_r) {
    const grid_function& u = s.at(t);
    grid_function w(u.g);
    for (int i = 0; i <= u.g.m; ++i) w[i] = u[i] - lambda * t;
    const int a = static_cast<int>(std::lround(anchor_r / u.g.h()));
    const int ai = std::clamp(a, 0, u.g.m);
    const double w0 = w[ai];
    for (double& v : w.values) v -= w0;
    return w;
}

}  // namespace mcflab

#endif
