#ifndef MCFLAB_COERCIVITY_HPP
#define MCFLAB_COERCIVITY_HPP

#include <cmath>
#include <limits>
#include <utility>

#include "mcflab/grid.hpp"
#include "mcflab/problem.hpp"

namespace mcflab {

/** Boundary-geometry constants for the ball B(0,R): every principal curvature
 * of the sphere is 1/R, so the top eigenvalue of -kappa is C0 = -1/R, and the
 * largest inscribed ball through a boundary point has radius K0 = R. */
inline std::pair<double, double> boundary_constants(const radial_problem& p) {
    return {-1.0 / p.R, p.R};
}

struct coercivity_report {
    double C0 = 0.0;
    double K0 = 0.0;
    grid_function margin;     // pointwise left-minus-right of the coercivity bound
    double delta_star = 0.0;  // min of margin
    bool satisfied = false;   // delta_star > 0
};

/** Pointwise coercivity margin
 *   c^2/(n-1) - |c'| - max{0, C0|c| + (n-1)C0/K0 + (1+q) sgn(C0) C0^2}.
 * Table forcings use the larger adjacent slope as |c'| at knots, so the check
 * is not granted by interpolation smoothing. */
inline coercivity_report coercivity_margin(const radial_problem& p, int m = 400) {
    const auto [C0, K0] = boundary_constants(p);
    const double sgnC0 = (C0 > 0.0) - (C0 < 0.0);
    coercivity_report rep;
    rep.C0 = C0;
    rep.K0 = K0;
    rep.margin = grid_function(grid(p.R, m));
    rep.delta_star = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= m; ++i) {
        const double r = rep.margin.g.r(i);
        const double c = p.c.evaluate(r);
        const double dc = p.c.max_adjacent_slope(r);
        const double geom =
            C0 * std::abs(c) + (p.n - 1) * C0 / K0 + (1.0 + p.q) * sgnC0 * C0 * C0;
        const double val = c * c / (p.n - 1) - dc - std::max(0.0, geom);
        rep.margin[i] = val;
        rep.delta_star = std::min(rep.delta_star, val);
    }
    rep.satisfied = rep.delta_star > 0.0;
    return rep;
}

/** Smallest root of g(r) = r*c(r) - (n-1) on (0,R], located by a sign-change
 * scan plus bisection; +infinity when c stays below (n-1)/r everywhere. Under
 * a satisfied coercivity report more than one sign change is an internal
 * inconsistency. */
inline double crossing_point(const radial_problem& p, double tol = 1e-10) {
    auto g = [&](double r) { return r * p.c.evaluate(r) - (p.n - 1); };
    const int scan = 4096;
    const double dr = p.R / scan;
    int sign_changes = 0;
    double root = std::numeric_limits<double>::infinity();
    double prev = g(dr * 1e-6);  // g(0) = -(n-1) < 0 always
    double prev_r = dr * 1e-6;
    for (int i = 1; i <= scan; ++i) {
        const double r = (i == scan) ? p.R : i * dr;
        const double cur = g(r);
        if ((prev < 0.0 && cur >= 0.0) || (prev >= 0.0 && cur < 0.0)) {
            ++sign_changes;
            if (!std::isfinite(root) || root == std::numeric_limits<double>::infinity()) {
                double lo = prev_r, hi = r;
                while (hi - lo > tol) {
                    const double mid = 0.5 * (lo + hi);
                    if ((g(lo) < 0.0) == (g(mid) < 0.0))
                        lo = mid;
                    else
                        hi = mid;
                }
                root = 0.5 * (lo + hi);
            }
        }
        prev = cur;
        prev_r = r;
    }
    if (sign_changes > 1 && coercivity_margin(p).satisfied)
        throw numerical_error(
            "crossing_point: multiple crossings of r*c(r) = n-1 under satisfied "
            "coercivity; forcing data inconsistent");
    return root;
}

}  // namespace mcflab

#endif
