#ifndef MCFLAB_PROBLEM_HPP
#define MCFLAB_PROBLEM_HPP

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcflab/scalar_field.hpp"

namespace mcflab {

/** Radially symmetric problem on the ball B(0,R): forcing c(r), transport
 * f(r), boundary datum phi(R), capillary exponent q, optional stationary
 * coupling k*u, and initial data u0(r). */
struct radial_problem {
    int n = 2;           // spatial dimension
    double R = 1.0;      // ball radius
    scalar_field c;      // forcing
    scalar_field f;      // transport
    double phi_R = 0.0;  // boundary datum
    double q = 1.0;      // capillary exponent
    double k = 0.0;      // stationary regularization coefficient
    scalar_field u0;     // initial data

    void validate() const {
        if (n < 2) throw input_error("problem: dimension n must be >= 2");
        if (!(R > 0.0)) throw input_error("problem: R must be positive");
        if (!(q > 0.0)) throw input_error("problem: q must be positive");
        if (!(k >= 0.0)) throw input_error("problem: k must be nonnegative");
        for (const auto* fld : {&c, &f, &u0}) {
            const double ext = fld->table_extent();
            if (ext >= 0.0 && std::abs(ext - R) > 1e-12 * std::max(1.0, R))
                throw input_error("problem: table field must end at r = R");
        }
    }

    /** The control oracle and the eta=0 scheme require c >= 0 on [0,R]. */
    void require_nonnegative_forcing() const {
        const int probes = 2048;
        for (int i = 0; i <= probes; ++i) {
            const double r = R * i / probes;
            if (c.evaluate(r) < 0.0)
                throw input_error("forcing c is negative at r = " + std::to_string(r) +
                                  "; the control formulation needs c >= 0");
        }
    }
};

/** Boundary gradient p solving the capillary law p = phi * (eta^2+p^2)^((1-q)/2).
 * Unique in the regimes used here (eta=1 with any q>0, or q=1); found by
 * bisection to 1e-12 so the boundary error sits below spatial truncation. */
inline double boundary_gradient(double phi, double eta, double q) {
    if (q == 1.0) return phi;  // Neumann: law reduces to p = phi
    if (phi == 0.0) return 0.0;
    const double P = 1.0 + std::pow(std::abs(phi), 1.0 / q) + std::abs(phi);
    auto law = [&](double p) {
        return p - phi * std::pow(eta * eta + p * p, 0.5 * (1.0 - q));
    };
    double lo = -P, hi = P;
    double flo = law(lo), fhi = law(hi);
    if (flo > 0.0 || fhi < 0.0) {
        std::ostringstream msg;
        msg << "boundary gradient bisection bracket failure: phi=" << phi
            << " q=" << q << " eta=" << eta;
        throw numerical_error(msg.str());
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (law(mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/** Compatibility of the initial data with the boundary law for a given eta;
 * violation is an error at solver start. */
inline void check_compatibility(const radial_problem& p, double eta, double tol = 1e-8) {
    const double du = p.u0.derivative(p.R);
    const double rhs = p.phi_R * std::pow(eta * eta + du * du, 0.5 * (1.0 - p.q));
    if (std::abs(du - rhs) > tol) {
        std::ostringstream msg;
        msg << "initial data incompatible with boundary condition: u0'(R)=" << du
            << " but phi(R)*(eta^2+u0'(R)^2)^((1-q)/2)=" << rhs << " (eta=" << eta << ")";
        throw input_error(msg.str());
    }
}

/** Time-stepping configuration. eta=0 selects the pure first-order scheme.
 * Either a fixed dt is given (rejected if it violates the scheme's CFL) or
 * the step is chosen adaptively from cfl_safety. */
struct solver_config {
    double eta = 0.0;
    double dt = 0.0;  // 0 = adaptive
    double cfl_safety = 0.9;
    double T = 1.0;
    double tol_steady = 1e-6;
    int report_every = 100;
    std::vector<double> snapshot_times;  // exact landing times, in addition to T

    void validate() const {
        if (eta < 0.0 || eta > 1.0) throw input_error("config: eta must lie in [0,1]");
        if (dt < 0.0) throw input_error("config: dt must be positive (or 0 for adaptive)");
        if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
            throw input_error("config: cfl_safety must lie in (0,1]");
        if (!(T > 0.0)) throw input_error("config: final time T must be positive");
        if (!(tol_steady > 0.0)) throw input_error("config: tol_steady must be positive");
        if (report_every < 1) throw input_error("config: report_every must be positive");
    }
};

// ---- scenario-file (de)serialization -------------------------------------

inline scalar_field parse_field(const nlohmann::json& j, const std::string& name) {
    if (j.is_number()) return scalar_field::make_constant(j.get<double>());
    if (!j.is_object())
        throw input_error("field '" + name + "': expected {const|poly|table}");
    if (j.contains("const")) return scalar_field::make_constant(j["const"].get<double>());
    if (j.contains("poly"))
        return scalar_field::make_polynomial(j["poly"].get<std::vector<double>>());
    if (j.contains("table")) {
        const auto& t = j["table"];
        if (!t.contains("r") || !t.contains("v"))
            throw input_error("field '" + name + "': table needs r and v arrays");
        return scalar_field::make_table(t["r"].get<std::vector<double>>(),
                                        t["v"].get<std::vector<double>>());
    }
    throw input_error("field '" + name + "': unknown representation");
}

inline nlohmann::json field_to_json(const scalar_field& f) {
    nlohmann::json j;
    if (f.is_constant()) {
        j["const"] = f.as_constant();
    } else if (f.is_polynomial()) {
        j["poly"] = f.as_polynomial().coeffs;
    } else {
        j["table"]["r"] = f.as_table().knots;
        j["table"]["v"] = f.as_table().values;
    }
    return j;
}

inline radial_problem parse_problem(const nlohmann::json& doc) {
    radial_problem p;
    try {
        p.n = doc.at("n").get<int>();
        p.R = doc.at("R").get<double>();
        p.c = parse_field(doc.at("c"), "c");
        p.f = parse_field(doc.at("f"), "f");
        p.phi_R = doc.at("phi_R").get<double>();
        p.q = doc.at("q").get<double>();
        p.k = doc.value("k", 0.0);
        p.u0 = parse_field(doc.at("u0"), "u0");
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("malformed problem document: ") + e.what());
    }
    p.validate();
    return p;
}

inline radial_problem parse_problem(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("scenario file is not valid JSON: ") + e.what());
    }
    return parse_problem(doc);
}

inline nlohmann::json serialize_problem(const radial_problem& p) {
    nlohmann::json j;
    j["n"] = p.n;
    j["R"] = p.R;
    j["c"] = field_to_json(p.c);
    j["f"] = field_to_json(p.f);
    j["phi_R"] = p.phi_R;
    j["q"] = p.q;
    if (p.k != 0.0) j["k"] = p.k;
    j["u0"] = field_to_json(p.u0);
    return j;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace mcflab

#endif
