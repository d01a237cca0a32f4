#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "smooth.hpp"

namespace fraclap {

/// Exponent vector r in R^d \ {0} with its sign partition.
class FractionalOrder {
public:
    explicit FractionalOrder(std::vector<double> r) : r_(std::move(r)) {
        require(!r_.empty(), "FractionalOrder: dimension must be positive");
        bool nonzero = false;
        for (std::size_t j = 0; j < r_.size(); ++j) {
            require(std::isfinite(r_[j]), "FractionalOrder: exponents must be finite");
            if (r_[j] > 0) pos_.push_back(j);
            else if (r_[j] < 0) neg_.push_back(j);
            else zero_.push_back(j);
            nonzero = nonzero || r_[j] != 0.0;
        }
        require(nonzero, "FractionalOrder: r must be nonzero (at least one component r_j != 0)");
    }
    FractionalOrder(std::initializer_list<double> r) : FractionalOrder(std::vector<double>(r)) {}

    std::size_t dim() const { return r_.size(); }
    double operator[](std::size_t j) const { return r_[j]; }
    const std::vector<double>& values() const { return r_; }

    const std::vector<std::size_t>& positive() const { return pos_; }
    const std::vector<std::size_t>& negative() const { return neg_; }
    const std::vector<std::size_t>& zero() const { return zero_; }

    bool all_positive() const { return pos_.size() == r_.size(); }
    bool has_negative() const { return !neg_.empty(); }

private:
    std::vector<double> r_;
    std::vector<std::size_t> pos_, neg_, zero_;
};

/// Real number or +infinity, with the infinity carried as an explicit flag.
class ExtendedReal {
public:
    ExtendedReal() = default;
    ExtendedReal(double v) : v_(v) {} // NOLINT: implicit from finite values

    static ExtendedReal infinity() {
        ExtendedReal e;
        e.inf_ = true;
        return e;
    }

    bool is_infinite() const { return inf_; }
    bool is_finite() const { return !inf_; }

    /// Finite value; throws when infinite so the flag cannot be bypassed silently.
    double value() const {
        if (inf_) throw ComputeError("ExtendedReal: value requested from +infinity");
        return v_;
    }

    ExtendedReal operator+(const ExtendedReal& o) const {
        if (inf_ || o.inf_) return infinity();
        return ExtendedReal(v_ + o.v_);
    }

    bool operator==(const ExtendedReal& o) const { return inf_ == o.inf_ && (inf_ || v_ == o.v_); }

    std::string str() const;

private:
    double v_ = 0.0;
    bool inf_ = false;
};

inline std::string ExtendedReal::str() const {
    if (inf_) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v_);
    return buf;
}

/// Symbol value and gradient; the gradient is empty on the polar set.
struct SymbolValue {
    ExtendedReal value;
    std::vector<double> gradient;
};

/// 2 - 2cos(theta), evaluated as 4 sin^2(theta/2).
inline double two_minus_two_cos(double theta) {
    const double s = std::sin(0.5 * theta);
    return 4.0 * s * s;
}

inline bool is_corner_angle(double theta) {
    return theta == 0.0 || std::abs(theta) == std::numbers::pi;
}

/// Single-axis symbol (2 - 2cos theta)^r for finite values; r = 0 contributes 1.
inline double axis_symbol(double r, double theta) {
    if (r == 0.0) return 1.0;
    return std::pow(two_minus_two_cos(theta), r);
}

/// Derivative of the single-axis symbol; defined as 0 at theta in {0, +-pi}.
inline double axis_symbol_derivative(double r, double theta) {
    if (r == 0.0 || is_corner_angle(theta)) return 0.0;
    return 2.0 * r * std::sin(theta) * std::pow(two_minus_two_cos(theta), r - 1.0);
}

inline SymbolValue eval_symbol(const FractionalOrder& r, const std::vector<double>& theta) {
    require(theta.size() == r.dim(), "eval_symbol: theta dimension mismatch");
    for (double t : theta)
        require(t >= -std::numbers::pi && t <= std::numbers::pi, "eval_symbol: theta must lie in [-pi, pi]");
    SymbolValue out;
    for (std::size_t j : r.negative())
        if (theta[j] == 0.0) {
            out.value = ExtendedReal::infinity();
            return out;
        }
    double v = 0.0;
    out.gradient.resize(r.dim());
    for (std::size_t j = 0; j < r.dim(); ++j) {
        v += axis_symbol(r[j], theta[j]);
        out.gradient[j] = axis_symbol_derivative(r[j], theta[j]);
    }
    out.value = v;
    return out;
}

/// Interval [lo, hi] with possibly infinite upper end.
struct SpectralInterval {
    double lo = 0.0;
    ExtendedReal hi;
};

struct SpectrumReport {
    std::vector<SpectralInterval> axes;
    SpectralInterval total;
};

inline SpectralInterval axis_spectrum(double r) {
    if (r > 0) return {0.0, std::pow(4.0, r)};
    if (r < 0) return {std::pow(4.0, r), ExtendedReal::infinity()};
    return {1.0, 1.0};
}

inline SpectrumReport spectrum_interval(const FractionalOrder& r) {
    SpectrumReport rep;
    rep.total = {0.0, 0.0};
    for (std::size_t j = 0; j < r.dim(); ++j) {
        const auto a = axis_spectrum(r[j]);
        rep.axes.push_back(a);
        rep.total.lo += a.lo;
        rep.total.hi = rep.total.hi + a.hi;
    }
    return rep;
}

/// Finite threshold set, sorted and deduplicated.
struct ThresholdSet {
    std::vector<double> values;

    /// Distance from the window to the nearest threshold; 0 if a threshold lies in it.
    double window_margin(const Window& I) const {
        double m = std::numeric_limits<double>::infinity();
        for (double t : values) {
            if (I.contains(t)) return 0.0;
            m = std::min(m, t < I.lo ? I.lo - t : t - I.hi);
        }
        return m;
    }
};

inline ThresholdSet threshold_set(const FractionalOrder& r) {
    const auto& P = r.positive();
    require(P.size() < 31, "threshold_set: too many positive axes");
    double base = static_cast<double>(r.zero().size());
    for (std::size_t j : r.negative()) base += std::pow(4.0, r[j]);
    std::vector<double> vals;
    const std::size_t count = std::size_t{1} << P.size();
    for (std::size_t mask = 0; mask < count; ++mask) {
        double v = base;
        for (std::size_t b = 0; b < P.size(); ++b)
            if (mask & (std::size_t{1} << b)) v += std::pow(4.0, r[P[b]]);
        vals.push_back(v);
    }
    std::sort(vals.begin(), vals.end());
    ThresholdSet ts;
    for (double v : vals)
        if (ts.values.empty() || std::abs(v - ts.values.back()) > 1e-12 * std::max(1.0, std::abs(v)))
            ts.values.push_back(v);
    return ts;
}

struct CriticalPoint {
    std::vector<double> theta;
    ExtendedReal value;
    double gradient_norm = 0.0; // 0 at finite corners; unset at poles
};

/// All 2^d corners of {0, pi}^d with their symbol values.
inline std::vector<CriticalPoint> critical_points(const FractionalOrder& r) {
    const std::size_t d = r.dim();
    require(d < 21, "critical_points: dimension too large for corner enumeration");
    std::vector<CriticalPoint> out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        CriticalPoint cp;
        for (std::size_t j = 0; j < d; ++j) cp.theta.push_back(mask & (std::size_t{1} << j) ? std::numbers::pi : 0.0);
        const auto sv = eval_symbol(r, cp.theta);
        cp.value = sv.value;
        for (double g : sv.gradient) cp.gradient_norm = std::max(cp.gradient_norm, std::abs(g));
        out.push_back(std::move(cp));
    }
    return out;
}

/// Pole order alpha_j = -2 r_j for each negative axis (0-based axis index).
inline std::map<std::size_t, double> pole_orders(const FractionalOrder& r) {
    std::map<std::size_t, double> out;
    for (std::size_t j : r.negative()) out[j] = -2.0 * r[j];
    return out;
}

/// max over the grid of |(2-2cos t)^{r_j} / |t|^{2 r_j} - 1| / t^2.
inline double pole_asymptotic_check(const FractionalOrder& r, std::size_t j, const std::vector<double>& grid) {
    require(j < r.dim() && r[j] < 0, "pole_asymptotic_check: axis must have negative order");
    double worst = 0.0;
    for (double t : grid) {
        require(t != 0.0, "pole_asymptotic_check: grid touches the pole theta_j = 0");
        const double ratio = std::pow(two_minus_two_cos(t) / (t * t), r[j]);
        worst = std::max(worst, std::abs(ratio - 1.0) / (t * t));
    }
    return worst;
}

/// Energy-shell root theta* in (0, pi) of the 1-D symbol and |symbol'(theta*)|.
struct ShellRoot {
    double theta = 0.0;
    double slope = 0.0;
};

/// Solves (2 - 2cos theta)^r = lambda for a nonzero scalar order with lambda strictly inside the band.
inline ShellRoot shell_root(double r, double lambda) {
    require(r != 0.0, "shell_root: order must be nonzero");
    const double top = std::pow(4.0, r);
    if (r > 0)
        require(lambda > 0.0 && lambda < top, "shell_root: energy outside the open band (0, 4^r)");
    else
        require(lambda > top, "shell_root: energy outside the open band (4^r, inf)");
    const double x = std::pow(lambda, 1.0 / r);
    double th = 2.0 * std::asin(std::min(1.0, 0.5 * std::sqrt(x)));
    for (int it = 0; it < 8; ++it) {
        const double f = axis_symbol(r, th) - lambda;
        const double df = axis_symbol_derivative(r, th);
        if (df == 0.0) break;
        const double step = f / df;
        th -= step;
        if (std::abs(step) < 1e-16 * th) break;
    }
    return {th, std::abs(axis_symbol_derivative(r, th))};
}

} // namespace fraclap
