#ifndef MCFLAB_GRID_HPP
#define MCFLAB_GRID_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "mcflab/scalar_field.hpp"

namespace mcflab {

/** Uniform radial grid on [0,R] with m cells, nodes r_i = i*h. */
struct grid {
    double R = 1.0;
    int m = 8;

    grid() = default;
    grid(double R_, int m_) : R(R_), m(m_) {
        if (!(R > 0.0)) throw input_error("grid: R must be positive");
        if (m < 8) throw input_error("grid: need at least 8 cells");
    }

    double h() const { return R / m; }
    int nodes() const { return m + 1; }
    double r(int i) const { return (i == m) ? R : i * h(); }

    friend bool operator==(const grid& a, const grid& b) {
        return a.R == b.R && a.m == b.m;
    }
};

/** Scalar field sampled on a grid; values.size() == m+1. */
struct grid_function {
    grid g;
    std::vector<double> values;

    grid_function() = default;
    explicit grid_function(const grid& g_, double fill = 0.0)
        : g(g_), values(static_cast<std::size_t>(g_.nodes()), fill) {}
    grid_function(const grid& g_, std::vector<double> v) : g(g_), values(std::move(v)) {
        if (values.size() != static_cast<std::size_t>(g.nodes()))
            throw input_error("grid_function: value count does not match grid");
    }

    double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline grid_function sample(const scalar_field& f, const grid& g) {
    grid_function out(g);
    for (int i = 0; i <= g.m; ++i) out[i] = f.evaluate(g.r(i));
    return out;
}

inline void require_same_grid(const grid_function& a, const grid_function& b) {
    if (!(a.g == b.g)) throw input_error("grid mismatch between grid functions");
}

inline double sup_norm(const grid_function& a) {
    double s = 0.0;
    for (double v : a.values) s = std::max(s, std::abs(v));
    return s;
}

inline double sup_distance(const grid_function& a, const grid_function& b) {
    require_same_grid(a, b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        s = std::max(s, std::abs(a.values[i] - b.values[i]));
    return s;
}

/** Central differences in the interior, one-sided at the endpoints. */
inline grid_function grid_gradient(const grid_function& a) {
    const int m = a.g.m;
    const double h = a.g.h();
    grid_function out(a.g);
    out[0] = (a[1] - a[0]) / h;
    for (int i = 1; i < m; ++i) out[i] = (a[i + 1] - a[i - 1]) / (2.0 * h);
    out[m] = (a[m] - a[m - 1]) / h;
    return out;
}

inline double mean(const grid_function& a) {
    double s = 0.0;
    for (double v : a.values) s += v;
    return s / static_cast<double>(a.values.size());
}

/** Volume mean of a radial field on the ball: trapezoid rule with weight
 * r^(n-1). */
inline double radial_mean(const grid_function& a, int n) {
    const int m = a.g.m;
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double w = (i == 0 || i == m) ? 0.5 : 1.0;
        const double rw = w * std::pow(a.g.r(i), n - 1);
        num += rw * a[i];
        den += rw;
    }
    return num / den;
}

inline grid_function operator+(grid_function a, double c) {
    for (double& v : a.values) v += c;
    return a;
}

inline grid_function operator-(const grid_function& a, const grid_function& b) {
    require_same_grid(a, b);
    grid_function out(a.g);
    for (std::size_t i = 0; i < a.values.size(); ++i)
        out.values[i] = a.values[i] - b.values[i];
    return out;
}

/** Linear interpolation of a grid function at an arbitrary radius (clamped). */
inline double interpolate(const grid_function& a, double r) {
    const double h = a.g.h();
    if (r <= 0.0) return a[0];
    if (r >= a.g.R) return a[a.g.m];
    const int i = static_cast<int>(r / h);
    const int j = std::min(i, a.g.m - 1);
    const double w = (r - a.g.r(j)) / h;
    return a[j] + w * (a[j + 1] - a[j]);
}

/** CSV serialization: header "r,value", 17 significant digits. */
inline void write_csv(const grid_function& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open for writing: " + path);
    out << "r,value\n";
    char buf[64];
    for (int i = 0; i <= a.g.m; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", a.g.r(i), a[i]);
        out << buf;
    }
}

inline grid_function read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("r,", 0) != 0)
        throw input_error("bad grid-function CSV header in " + path);
    std::vector<double> rs, vs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double r, v;
        if (std::sscanf(line.c_str(), "%lf,%lf", &r, &v) != 2)
            throw input_error("bad grid-function CSV row in " + path);
        rs.push_back(r);
        vs.push_back(v);
    }
    if (rs.size() < 9) throw input_error("grid-function CSV too short: " + path);
    grid g(rs.back(), static_cast<int>(rs.size()) - 1);
    return grid_function(g, std::move(vs));
}

}  // namespace mcflab

#endif
