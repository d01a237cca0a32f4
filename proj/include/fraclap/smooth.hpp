#pragma once

#include <cmath>
#include <numbers>

namespace fraclap {

/// Compact energy interval [lo, hi].
struct Window {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    double center() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// C-infinity bump exp(1 - 1/(1 - x^2)) on (-1, 1), peak value 1.
inline double bump(double x) {
    if (std::abs(x) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

/// Bump supported on the window, peak 1 at its center.
inline double window_bump(const Window& I, double lambda) {
    return bump((lambda - I.center()) / (0.5 * I.width()));
}

/// C-infinity step rising from 0 at x <= 0 to 1 at x >= 1.
inline double smooth_step(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

/// Plateau window: 1 on the inner part of I, smooth tapers of relative width `taper` at both ends.
inline double window_plateau(const Window& I, double lambda, double taper = 0.25) {
    const double t = taper * I.width();
    return smooth_step((lambda - I.lo) / t) * smooth_step((I.hi - lambda) / t);
}

/// Standard normal distribution function.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Japanese bracket <x> = sqrt(1 + x^2).
inline double bracket(double x) { return std::sqrt(1.0 + x * x); }

} // namespace fraclap
