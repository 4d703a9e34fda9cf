#ifndef MCFLAB_TIME_SERIES_HPP
#define MCFLAB_TIME_SERIES_HPP

#include <utility>
#include <vector>

#include "mcflab/grid.hpp"

namespace mcflab {

/** Evolution record: snapshots plus the monitor traces tied to the paper-side
 * bounds (gradient sup-norm, discrete time-derivative sup-norm, mean-slope
 * eigenvalue trace). */
struct time_series {
    std::vector<std::pair<double, grid_function>> snapshots;
    std::vector<std::pair<double, double>> grad_sup;
    std::vector<std::pair<double, double>> dt_sup;
    std::vector<std::pair<double, double>> lambda_trace;

    double first_dt_sup = 0.0;  // discrete |u_t| after the first step
    double max_dt_sup = 0.0;    // max over all steps
    double final_grad_sup = 0.0;

    double final_time() const { return snapshots.back().first; }

    const grid_function& at(double t, double tol = 1e-9) const {
        for (const auto& [ts, u] : snapshots)
            if (std::abs(ts - t) <= tol) return u;
        throw input_error("no snapshot at t = " + std::to_string(t) +
                          "; request it via snapshot_times");
    }

    bool has(double t, double tol = 1e-9) const {
        for (const auto& [ts, u] : snapshots)
            if (std::abs(ts - t) <= tol) return true;
        return false;
    }
};

/** Mean drift of u over a window: lambda estimates from an evolution run. */
struct evolution_eigen {
    double lambda_mean = 0.0;
    grid_function lambda_pointwise;
};

inline evolution_eigen eigen_from_evolution(const time_series& s, double t1, double t2) {
    if (!(t2 > t1) || t1 < 0.0) throw input_error("eigen window needs 0 <= t1 < t2");
    const grid_function& u1 = s.at(t1);
    const grid_function& u2 = s.at(t2);
    evolution_eigen out;
    out.lambda_pointwise = grid_function(u1.g);
    for (int i = 0; i <= u1.g.m; ++i)
        out.lambda_pointwise[i] = (u2[i] - u1[i]) / (t2 - t1);
    out.lambda_mean = (mean(u2) - mean(u1)) / (t2 - t1);
    return out;
}

}  // namespace mcflab

#endif
