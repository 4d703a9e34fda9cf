#ifndef MCFLAB_CONTROL_ORACLE_HPP
#define MCFLAB_CONTROL_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mcflab/coercivity.hpp"
#include "mcflab/grid.hpp"
#include "mcflab/problem.hpp"

namespace mcflab {

/** Large-negative sentinel for control-unreachable pairs; keeps max-reductions
 * total instead of raising. */
inline constexpr double kUnreachable = -1e18;
inline bool is_unreachable(double v) { return v < -1e15; }

struct aubry_report {
    double r_cr = std::numeric_limits<double>::infinity();
    double lambda = 0.0;
    grid g;
    std::vector<int> aubry_nodes;      // node indices attaining the sup
    double boundary_candidate = 0.0;   // -f(R) + phi(R)((n-1)/R + sgn(phi) c(R))
    double interior_sup = 0.0;         // sup of -f over [r_cr, R]
    double smallest_aubry_r() const { return g.r(aubry_nodes.front()); }
};

namespace detail {

/** sup of -f over [lo, R]: exact at table knots and interval endpoints, dense
 * scan otherwise. */
inline double sup_neg(const scalar_field& f, double lo, double R) {
    double best = std::max(-f.evaluate(lo), -f.evaluate(R));
    if (f.is_table()) {
        for (double kn : f.as_table().knots)
            if (kn > lo && kn < R) best = std::max(best, -f.evaluate(kn));
    }
    const int scan = 4096;
    for (int i = 1; i < scan; ++i) {
        const double r = lo + (R - lo) * i / scan;
        best = std::max(best, -f.evaluate(r));
    }
    return best;
}

}  // namespace detail

/** Additive eigenvalue by the radial control formula: with crossing point
 * r_cr, lambda is the sup of -f over [r_cr, R] together with the boundary
 * candidate -f(R) + phi(R)((n-1)/R + sgn(phi(R)) c(R)); with no crossing the
 * boundary candidate alone remains and the Aubry set is {R}. */
inline aubry_report eigenvalue_formula(const radial_problem& p, int m = 400,
                                       double tol = 1e-9) {
    p.require_nonnegative_forcing();
    aubry_report rep;
    rep.g = grid(p.R, m);
    rep.r_cr = crossing_point(p);
    const double cR = p.c.evaluate(p.R);
    const double fR = p.f.evaluate(p.R);
    const double sgn_phi = (p.phi_R > 0.0) - (p.phi_R < 0.0);
    rep.boundary_candidate =
        -fR + p.phi_R * ((p.n - 1) / p.R + sgn_phi * cR);

    if (!std::isfinite(rep.r_cr)) {
        rep.interior_sup = -std::numeric_limits<double>::infinity();
        rep.lambda = rep.boundary_candidate;
        rep.aubry_nodes = {m};
        return rep;
    }

    rep.interior_sup = detail::sup_neg(p.f, rep.r_cr, p.R);
    rep.lambda = std::max(rep.interior_sup, rep.boundary_candidate);

    // Aubry nodes: grid maximizers of the objective restricted to r >= r_cr,
    // with the boundary node scored by its candidate value.
    double grid_max = -std::numeric_limits<double>::infinity();
    std::vector<double> obj(m + 1, -std::numeric_limits<double>::infinity());
    for (int i = 0; i <= m; ++i) {
        const double r = rep.g.r(i);
        if (r < rep.r_cr - 1e-12 && i != m) continue;
        obj[i] = (i == m) ? std::max(-fR, rep.boundary_candidate) : -p.f.evaluate(r);
        grid_max = std::max(grid_max, obj[i]);
    }
    for (int i = 0; i <= m; ++i)
        if (obj[i] >= grid_max - tol) rep.aubry_nodes.push_back(i);
    return rep;
}

/** Pointwise large-time speed from the reachability structure of the radial
 * dynamics: from r, trajectories drift outward wherever r c(r) < n-1 and can
 * hold position or move left wherever r c(r) >= n-1, so the parking set is
 * [left_reach(r), R] and
 *
 *   lambda(r) = max( sup{-f(s) : s in parking set}, boundary candidate ).
 *
 * This is the piecewise sup display of the radial analysis; it reduces to the
 * constant of eigenvalue_formula under a coercive forcing and stays
 * meaningful when coercivity fails. */
inline grid_function pointwise_lambda_formula(const radial_problem& p, const grid& g) {
    p.require_nonnegative_forcing();
    // Sample g(r) = r c(r) - (n-1) on a fine partition joined with the table
    // knots of c, so touching zeros at knots are seen exactly.
    const int fine = std::max(8192, 16 * g.m);
    std::vector<double> pts;
    pts.reserve(fine + 8);
    for (int j = 0; j <= fine; ++j) pts.push_back(p.R * j / fine);
    if (p.c.is_table())
        for (double kn : p.c.as_table().knots)
            if (kn > 0.0 && kn < p.R) pts.push_back(kn);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    const std::size_t np = pts.size();

    constexpr double eps = 1e-11;
    std::vector<char> can_left(np), can_hold(np);
    for (std::size_t j = 0; j < np; ++j) {
        const double gj = pts[j] * p.c.evaluate(pts[j]) - (p.n - 1);
        can_left[j] = gj > eps;    // leftward speed strictly available
        can_hold[j] = gj >= -eps;  // zero speed admissible
    }

    // L[j]: leftward closure from a holding point (slide down until the first
    // sample without leftward speed); P[j]: first holding point at or above j
    // for drift points.
    std::vector<double> L(np), P(np);
    double lastb = 0.0;
    for (std::size_t j = 0; j < np; ++j) {
        if (!can_left[j]) lastb = pts[j];
        L[j] = lastb;
    }
    double nextp = p.R;  // the boundary always admits parking via reflection
    for (std::size_t j = np; j-- > 0;) {
        if (can_hold[j]) nextp = pts[j];
        P[j] = nextp;
    }

    const double cR = p.c.evaluate(p.R);
    const double sgn_phi = (p.phi_R > 0.0) - (p.phi_R < 0.0);
    const double bnd = -p.f.evaluate(p.R) + p.phi_R * ((p.n - 1) / p.R + sgn_phi * cR);

    grid_function lam(g);
    for (int i = 0; i <= g.m; ++i) {
        const double r = g.r(i);
        const std::size_t j = static_cast<std::size_t>(
            std::lower_bound(pts.begin(), pts.end(), r - 1e-13) - pts.begin());
        const std::size_t jj = std::min(j, np - 1);
        // from a holding point the parking set extends down to the leftward
        // closure; from a drift region it starts at the first holding point
        const double lo = can_hold[jj] ? L[jj] : std::min(P[jj], p.R);
        lam[i] = std::max(detail::sup_neg(p.f, lo, p.R), bnd);
    }
    return lam;
}

/** Semi-Lagrangian value-iteration configuration. The step must not skip
 * cells (dt * max speed <= h) so interpolated feet stay within one cell and
 * reachability is preserved exactly; the horizon should cover several
 * traversals of [0,R]. */
struct dp_config {
    int m = 100;
    double dt = 0.0;  // 0 = auto: h / max admissible speed
    double horizon = 60.0;
    int controls_per_node = 3;
};

namespace detail {

struct dp_control {
    double reward;
    int j;      // foot cell
    double w;   // weight on node j+1
};

struct dp_scheme {
    grid g;
    double dt = 0.0;
    std::vector<std::vector<dp_control>> controls;

    /** One Bellman sweep: V'(i) = max over controls of
     *  dt (reward - lambda_shift) + interpolated V at the foot. */
    void apply(const std::vector<double>& V, std::vector<double>& out,
               double lambda_shift) const {
        const int m = g.m;
        for (int i = 0; i <= m; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            for (const dp_control& c : controls[static_cast<std::size_t>(i)]) {
                const double foot = (1.0 - c.w) * V[static_cast<std::size_t>(c.j)] +
                                    c.w * V[static_cast<std::size_t>(c.j + 1)];
                best = std::max(best, dt * (c.reward - lambda_shift) + foot);
            }
            out[static_cast<std::size_t>(i)] = best;
        }
    }
};

inline dp_scheme build_dp(const radial_problem& p, const dp_config& dpc,
                          bool reverse = false) {
    p.require_nonnegative_forcing();
    if (dpc.m < 8) throw input_error("dp: need at least 8 cells");
    if (dpc.controls_per_node < 3) throw input_error("dp: need at least 3 controls per node");
    if (!(dpc.horizon > 0.0)) throw input_error("dp: horizon must be positive");

    dp_scheme s;
    s.g = grid(p.R, dpc.m);
    const int m = dpc.m;
    const double h = s.g.h();

    double speed_max = 0.0;
    std::vector<double> c(m + 1), f(m + 1), a(m + 1);
    for (int i = 0; i <= m; ++i) {
        const double r = s.g.r(i);
        c[i] = p.c.evaluate(r);
        f[i] = p.f.evaluate(r);
        a[i] = (p.n - 1) / std::max(r, h);
        speed_max = std::max(speed_max, a[i] + c[i]);
    }
    if (dpc.dt > 0.0) {
        if (dpc.dt * speed_max > h * (1.0 + 1e-12))
            throw input_error("dp: dt skips cells (dt * max speed > h)");
        s.dt = dpc.dt;
    } else {
        s.dt = 0.999 * h / speed_max;
    }

    auto foot_of = [&](double r, double v) {
        const double ft = std::clamp(r + s.dt * v, h, p.R);
        int j = std::min(static_cast<int>(ft / h), m - 1);
        double w = ft / h - j;
        if (w < 0.0) w = 0.0;
        if (w > 1.0) w = 1.0;
        return dp_control{0.0, j, w};
    };

    s.controls.resize(static_cast<std::size_t>(m + 1));
    for (int i = 0; i <= m; ++i) {
        const double r = s.g.r(i);
        double vlo = a[i] - c[i], vhi = a[i] + c[i];
        if (reverse) {
            const double t = vlo;
            vlo = -vhi;
            vhi = -t;
        }
        std::vector<double> speeds;
        const int cpn = dpc.controls_per_node;
        for (int kk = 0; kk < cpn; ++kk)
            speeds.push_back(vlo + (vhi - vlo) * kk / (cpn - 1));
        if (vlo < 0.0 && vhi > 0.0) speeds.push_back(0.0);

        auto& ctls = s.controls[static_cast<std::size_t>(i)];
        if (i < m) {
            for (double v : speeds) {
                dp_control ct = foot_of(r, v);
                ct.reward = -f[i];
                ctls.push_back(ct);
            }
        } else {
            // boundary node: reflected stays collect the multiplier bonus
            // phi * l with l on the admissible interval of the reflection
            // problem, intersected with [0, inf)
            const double lmin = std::max(0.0, a[m] - c[m]);
            const double lmax = a[m] + c[m];
            std::vector<double> ls = {lmin, lmax};
            for (int kk = 1; kk + 1 < cpn; ++kk)
                ls.push_back(lmin + (lmax - lmin) * kk / (cpn - 1));
            for (double l : ls)
                ctls.push_back(dp_control{-f[m] + p.phi_R * l, m - 1, 1.0});
            // inward exit (only available when the drift can point inside)
            const double vin = reverse ? -(a[m] + c[m]) : a[m] - c[m];
            if (vin < 0.0) {
                dp_control ct = foot_of(p.R, vin);
                ct.reward = -f[m];
                ctls.push_back(ct);
            }
        }
    }
    return s;
}

}  // namespace detail

/** Finite-horizon value iteration for the Skorokhod representation formula:
 * V^0 = u0 and V^{k+1}(r) = max over the control set of dt * reward plus the
 * interpolated previous value at the foot point. Returns V at each requested
 * time (rounded to whole steps). */
inline std::vector<grid_function> dp_value_series(const radial_problem& p,
                                                  const dp_config& dpc,
                                                  const std::vector<double>& times) {
    const detail::dp_scheme s = detail::build_dp(p, dpc);
    for (double t : times)
        if (t < 0.0 || t > dpc.horizon + 1e-9)
            throw input_error("dp: requested time outside [0, horizon]");
    std::vector<long> steps;
    long max_step = 0;
    for (double t : times) {
        steps.push_back(std::lround(t / s.dt));
        max_step = std::max(max_step, steps.back());
    }

    std::vector<double> V = sample(p.u0, s.g).values, W(V.size());
    std::vector<grid_function> out(times.size(), grid_function(s.g));
    for (std::size_t q = 0; q < times.size(); ++q)
        if (steps[q] == 0) out[q] = grid_function(s.g, V);
    for (long k = 1; k <= max_step; ++k) {
        s.apply(V, W, 0.0);
        V.swap(W);
        for (std::size_t q = 0; q < times.size(); ++q)
            if (steps[q] == k) out[q] = grid_function(s.g, V);
    }
    return out;
}

inline grid_function dp_value(const radial_problem& p, const dp_config& dpc, double t) {
    return dp_value_series(p, dpc, {t})[0];
}

struct distance_result {
    grid g;
    std::vector<std::vector<double>> d;  // d[i][j]: from r_i to r_j
    bool stationary = true;
};

namespace detail {

/** Obstacle iteration V <- max(psi, Bellman(V) - lambda dt). Converges up to
 * the lambda-calibrated value of reaching the support of psi; nodes that
 * cannot reach it with certainty stay near the sentinel. */
inline bool obstacle_iterate(const dp_scheme& s, double lambda,
                             const std::vector<double>& psi, std::vector<double>& V,
                             double horizon, double tol = 1e-10) {
    V = psi;
    std::vector<double> W(V.size());
    const long max_sweeps = std::lround(horizon / s.dt);
    for (long k = 0; k < max_sweeps; ++k) {
        s.apply(V, W, lambda);
        double change = 0.0;
        for (std::size_t i = 0; i < V.size(); ++i) {
            W[i] = std::max(psi[i], W[i]);
            if (W[i] > -1e15 && V[i] > -1e15)
                change = std::max(change, std::abs(W[i] - V[i]));
            else if (W[i] > -1e15 || V[i] > -1e15)
                change = std::max(change, 1.0);
        }
        V.swap(W);
        if (change < tol) return true;
    }
    return false;
}

}  // namespace detail

/** Weak-KAM style distance d(r0, r1): the sup over admissible trajectories
 * from r0 reaching r1 of the running payoff -f + phi l - lambda. Computed per
 * target by obstacle value iteration; unreachable pairs keep the sentinel. */
inline distance_result distance(const radial_problem& p, double lambda,
                                const dp_config& dpc) {
    const detail::dp_scheme s = detail::build_dp(p, dpc);
    const int m = s.g.m;
    distance_result out;
    out.g = s.g;
    out.d.assign(m + 1, std::vector<double>(m + 1, kUnreachable));
    std::vector<double> psi(m + 1), V;
    for (int j = 0; j <= m; ++j) {
        std::fill(psi.begin(), psi.end(), kUnreachable);
        psi[static_cast<std::size_t>(j)] = 0.0;
        if (!detail::obstacle_iterate(s, lambda, psi, V, dpc.horizon))
            out.stationary = false;
        for (int i = 0; i <= m; ++i)
            out.d[i][j] = is_unreachable(V[static_cast<std::size_t>(i)])
                              ? kUnreachable
                              : V[static_cast<std::size_t>(i)];
    }
    return out;
}

/** Asymptotic profile by the control formula: w0(r) = max_rho d(r,rho) +
 * u0(rho) as a stopped value iteration with obstacle u0, then w(r) = max over
 * Aubry points s of d(r,s) + w0(s), normalized to vanish at the smallest
 * Aubry node. The reversed flag flips the trajectory direction inside d to
 * probe the opposite reading of the formula's argument order. */
inline grid_function asymptotic_profile(const radial_problem& p, const dp_config& dpc,
                                        const aubry_report& rep,
                                        bool reversed = false) {
    const detail::dp_scheme s = detail::build_dp(p, dpc, reversed);
    const int m = s.g.m;
    std::vector<double> psi = sample(p.u0, s.g).values, w0;
    detail::obstacle_iterate(s, rep.lambda, psi, w0, dpc.horizon);

    std::fill(psi.begin(), psi.end(), kUnreachable);
    for (int idx : rep.aubry_nodes) {
        const double r = rep.g.r(idx);
        const int i = std::clamp(static_cast<int>(std::lround(r / s.g.h())), 0, m);
        psi[static_cast<std::size_t>(i)] = w0[static_cast<std::size_t>(i)];
    }
    std::vector<double> w;
    detail::obstacle_iterate(s, rep.lambda, psi, w, dpc.horizon);

    const int anchor =
        std::clamp(static_cast<int>(std::lround(rep.smallest_aubry_r() / s.g.h())), 0, m);
    grid_function out(s.g);
    const double base = w[static_cast<std::size_t>(anchor)];
    for (int i = 0; i <= m; ++i) out[i] = w[static_cast<std::size_t>(i)] - base;
    return out;
}

}  // namespace mcflab

#endif
