#ifndef MCFLAB_SCALAR_FIELD_HPP
#define MCFLAB_SCALAR_FIELD_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mcflab {

/** Thrown on malformed inputs (scenario files, invariant violations). */
class input_error : public std::runtime_error {
  public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

/** Thrown when a solver loses stability or a numerical routine fails. */
class numerical_error : public std::runtime_error {
  public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/** Radial scalar coefficient on [0,R]: a constant, a polynomial in r, or a
 * piecewise-linear interpolation table. Tables are the work-horse for the
 * piecewise forcing/transport profiles; their derivative is the piecewise
 * slope, taken right-continuous at the knots. */
class scalar_field {
  public:
    struct constant {
        double value;
    };
    struct polynomial {
        std::vector<double> coeffs;  // c0 + c1*r + c2*r^2 + ...
    };
    struct table {
        std::vector<double> knots;   // strictly increasing, knots[0]=0, back()=R
        std::vector<double> values;  // same length as knots
    };

    scalar_field() : rep_(constant{0.0}) {}
    explicit scalar_field(double v) : rep_(constant{v}) {}
    explicit scalar_field(constant c) : rep_(c) {}
    explicit scalar_field(polynomial p) : rep_(std::move(p)) {
        if (std::get<polynomial>(rep_).coeffs.empty())
            throw input_error("polynomial field needs at least one coefficient");
    }
    explicit scalar_field(table t) : rep_(std::move(t)) {
        const auto& tab = std::get<table>(rep_);
        if (tab.knots.size() < 2 || tab.knots.size() != tab.values.size())
            throw input_error("table field needs matching knot/value lists of length >= 2");
        for (std::size_t i = 1; i < tab.knots.size(); ++i)
            if (!(tab.knots[i] > tab.knots[i - 1]))
                throw input_error("table knots must be strictly increasing");
        if (tab.knots.front() != 0.0)
            throw input_error("table knots must start at 0");
    }

    static scalar_field make_constant(double v) { return scalar_field(constant{v}); }
    static scalar_field make_polynomial(std::vector<double> c) {
        return scalar_field(polynomial{std::move(c)});
    }
    static scalar_field make_table(std::vector<double> r, std::vector<double> v) {
        return scalar_field(table{std::move(r), std::move(v)});
    }

    bool is_constant() const { return std::holds_alternative<constant>(rep_); }
    bool is_polynomial() const { return std::holds_alternative<polynomial>(rep_); }
    bool is_table() const { return std::holds_alternative<table>(rep_); }
    const table& as_table() const { return std::get<table>(rep_); }
    const polynomial& as_polynomial() const { return std::get<polynomial>(rep_); }
    double as_constant() const { return std::get<constant>(rep_).value; }

    /** Last knot of a table; used to check table fields span [0,R]. */
    double table_extent() const {
        return is_table() ? as_table().knots.back() : -1.0;
    }

    double evaluate(double r) const {
        if (const auto* c = std::get_if<constant>(&rep_)) return c->value;
        if (const auto* p = std::get_if<polynomial>(&rep_)) {
            double acc = 0.0;
            for (auto it = p->coeffs.rbegin(); it != p->coeffs.rend(); ++it)
                acc = acc * r + *it;
            return acc;
        }
        const auto& t = std::get<table>(rep_);
        const std::size_t seg = segment(t, r);
        const double w = (r - t.knots[seg]) / (t.knots[seg + 1] - t.knots[seg]);
        return t.values[seg] + w * (t.values[seg + 1] - t.values[seg]);
    }

    /** Derivative in r. Table derivatives are the segment slopes,
     * right-continuous at interior knots. */
    double derivative(double r) const {
        if (std::holds_alternative<constant>(rep_)) return 0.0;
        if (const auto* p = std::get_if<polynomial>(&rep_)) {
            double acc = 0.0;
            for (std::size_t i = p->coeffs.size(); i-- > 1;)
                acc = acc * r + p->coeffs[i] * static_cast<double>(i);
            return acc;
        }
        const auto& t = std::get<table>(rep_);
        const std::size_t seg = segment(t, r);
        return slope(t, seg);
    }

    /** Conservative slope magnitude: at a knot, the larger of the two adjacent
     * segment slopes. Used by the coercivity margin so interpolation kinks do
     * not smooth the check. */
    double max_adjacent_slope(double r) const {
        if (!is_table()) return std::abs(derivative(r));
        const auto& t = std::get<table>(rep_);
        const std::size_t seg = segment(t, r);
        double s = std::abs(slope(t, seg));
        constexpr double knot_eps = 1e-12;
        if (seg > 0 && std::abs(r - t.knots[seg]) < knot_eps)
            s = std::max(s, std::abs(slope(t, seg - 1)));
        if (seg + 2 < t.knots.size() && std::abs(r - t.knots[seg + 1]) < knot_eps)
            s = std::max(s, std::abs(slope(t, seg + 1)));
        return s;
    }

  private:
    static std::size_t segment(const table& t, double r) {
        // clamp to [knots.front(), knots.back()]
        if (r <= t.knots.front()) return 0;
        if (r >= t.knots.back()) return t.knots.size() - 2;
        auto it = std::upper_bound(t.knots.begin(), t.knots.end(), r);
        return static_cast<std::size_t>(it - t.knots.begin()) - 1;
    }
    static double slope(const table& t, std::size_t seg) {
        return (t.values[seg + 1] - t.values[seg]) / (t.knots[seg + 1] - t.knots[seg]);
    }

    std::variant<constant, polynomial, table> rep_;
};

}  // namespace mcflab

#endif
