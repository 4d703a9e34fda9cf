#ifndef MCFLAB_EIGEN_SOLVER_HPP
#define MCFLAB_EIGEN_SOLVER_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mcflab/grid.hpp"
#include "mcflab/parabolic.hpp"
#include "mcflab/problem.hpp"

namespace mcflab {

struct eigen_estimate {
    double lambda = 0.0;
    grid_function w;  // profile, value 0 at the anchor node
    std::string route;
    struct diag {
        double k, eta, lambda_k, steady_residual;
    };
    std::vector<diag> diagnostics;
    double extrapolation_residual = 0.0;  // misfit of the linear-in-k model
    double max_ku_sup = 0.0;              // sup |k u_k| over the sweep
    double max_grad_sup = 0.0;            // sup |D u_k| over the sweep
};

struct k_problem_result {
    grid_function u;
    double lambda_k = 0.0;
    double steady_residual = 0.0;
};

/** Steady state of the k-regularized stationary problem by pseudo-time
 * relaxation with the regularized stepper (the -k u term makes the flow a
 * contraction). lambda_k = k times the volume mean of the steady state, the
 * quantity that converges to the additive eigenvalue as k -> 0. */
inline k_problem_result solve_k_problem(const radial_problem& prob, double eta,
                                        const solver_config& cfg, const grid& g,
                                        const std::optional<grid_function>& start =
                                            std::nullopt) {
    if (!(prob.k > 0.0 && prob.k < 1.0))
        throw input_error("solve_k_problem: k must lie in (0,1)");
    if (!(eta > 0.0 && eta <= 1.0))
        throw input_error("solve_k_problem: eta must lie in (0,1]");
    solver_config c = cfg;
    c.eta = eta;
    c.snapshot_times.clear();
    time_series run = evolve(prob, c, g, /*stop_when_steady=*/true, start);
    k_problem_result out;
    out.u = run.snapshots.back().second;
    out.steady_residual = run.dt_sup.back().second;
    out.lambda_k = prob.k * radial_mean(out.u, prob.n);
    return out;
}

/** The double limit of the homogenization route: solve the k-problem on a
 * (k, eta) parameter grid, extrapolate lambda_k linearly in k at the smallest
 * eta, and report the uniform-bound diagnostics sup|k u_k| and sup|D u_k|
 * over the sweep. */
inline eigen_estimate eigen_limit(const radial_problem& prob,
                                  const std::vector<double>& ks,
                                  const std::vector<double>& etas,
                                  const solver_config& cfg, const grid& g) {
    if (ks.empty() || etas.empty())
        throw input_error("eigen_limit: parameter lists must be nonempty");
    for (std::size_t i = 1; i < ks.size(); ++i)
        if (!(ks[i] < ks[i - 1])) throw input_error("eigen_limit: ks must decrease");
    for (std::size_t i = 1; i < etas.size(); ++i)
        if (!(etas[i] < etas[i - 1])) throw input_error("eigen_limit: etas must decrease");

    eigen_estimate est;
    est.route = "k-limit";
    std::vector<double> lam_at_smallest_eta;
    grid_function u_final;
    for (double eta : etas) {
        std::optional<grid_function> warm;
        for (double k : ks) {
            radial_problem pk = prob;
            pk.k = k;
            const k_problem_result res = solve_k_problem(pk, eta, cfg, g, warm);
            warm = res.u;
            est.diagnostics.push_back({k, eta, res.lambda_k, res.steady_residual});
            est.max_ku_sup = std::max(est.max_ku_sup, k * sup_norm(res.u));
            est.max_grad_sup =
                std::max(est.max_grad_sup, sup_norm(grid_gradient(res.u)));
            if (eta == etas.back()) {
                lam_at_smallest_eta.push_back(res.lambda_k);
                u_final = res.u;
            }
        }
    }

    // linear-in-k extrapolation: lambda_k = lambda + C k
    const std::size_t nk = lam_at_smallest_eta.size();
    if (nk == 1) {
        est.lambda = lam_at_smallest_eta[0];
    } else {
        const double k1 = ks[nk - 2], k2 = ks[nk - 1];
        const double l1 = lam_at_smallest_eta[nk - 2], l2 = lam_at_smallest_eta[nk - 1];
        est.lambda = l2 + (l2 - l1) * k2 / (k1 - k2);
        if (nk >= 3) {
            const double k0 = ks[nk - 3], l0 = lam_at_smallest_eta[nk - 3];
            const double pred = est.lambda + (l2 - est.lambda) / k2 * k0;
            est.extrapolation_residual = std::abs(pred - l0);
        }
    }

    const double mu = radial_mean(u_final, prob.n);
    est.w = grid_function(u_final.g);
    for (int i = 0; i <= u_final.g.m; ++i) est.w[i] = u_final[i] - mu;
    const double anchor = est.w[0];
    for (double& v : est.w.values) v -= anchor;
    return est;
}

/** Nodewise residual of the stationary additive-eigenvalue equation
 *
 *   lambda = eta^2 w_rr/(eta^2+w_r^2) + (n-1) w_r/r + c sqrt(eta^2+w_r^2) - f
 *
 * with centered differences inside (the transport and square-root terms are
 * smooth evaluations here, not upwind fluxes: the checker needs second-order
 * consistency near the origin, where one-sided stencils of 1/r terms do not
 * decay), the symmetry limit at r = 0, and the capillary law
 * w_r(R) - phi (eta^2 + w_r(R)^2)^((1-q)/2) at the boundary node measured by
 * the one-sided difference. */
inline grid_function residual(const radial_problem& prob, double lambda,
                              const grid_function& w, double eta, double q) {
    const grid& g = w.g;
    const int m = g.m;
    const double h = g.h();
    const double eta2 = eta * eta;
    grid_function res(g);

    {
        const double wrr = 2.0 * (w[1] - w[0]) / (h * h);
        const double diff = (eta > 0.0) ? wrr : 0.0;
        res[0] = lambda -
                 (diff + (prob.n - 1) * wrr + prob.c.evaluate(0.0) * eta -
                  prob.f.evaluate(0.0));
    }
    for (int i = 1; i < m; ++i) {
        const double r = g.r(i);
        const double wr = (w[i + 1] - w[i - 1]) / (2.0 * h);
        const double wrr = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h);
        const double v2 = eta2 + wr * wr;
        const double diff = (eta > 0.0) ? eta2 * wrr / v2 : 0.0;
        res[i] = lambda - (diff + (prob.n - 1) * wr / r + prob.c.evaluate(r) * std::sqrt(v2) -
                           prob.f.evaluate(r));
    }
    {
        const double wr = (w[m] - w[m - 1]) / h;
        res[m] = wr - prob.phi_R * std::pow(eta2 + wr * wr, 0.5 * (1.0 - q));
    }
    return res;
}

inline grid_function residual(const radial_problem& prob, double lambda,
                              const scalar_field& w, double eta, double q,
                              const grid& g) {
    return residual(prob, lambda, sample(w, g), eta, q);
}

}  // namespace mcflab

#endif
