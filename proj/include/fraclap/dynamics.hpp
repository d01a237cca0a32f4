#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "conjugate.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "smooth.hpp"

namespace fraclap {

struct StateVector {
    Eigen::VectorXcd values;
    double norm = 0.0;

    static StateVector from(Eigen::VectorXcd v) {
        StateVector s;
        s.norm = v.norm();
        s.values = std::move(v);
        return s;
    }
};

inline Eigen::VectorXcd to_eigen(const std::vector<cplx>& v) {
    return Eigen::Map<const Eigen::VectorXcd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<cplx> to_std(const Eigen::VectorXcd& v) { return std::vector<cplx>(v.data(), v.data() + v.size()); }

/// Propagator through a dense eigendecomposition (box models or any real symmetric matrix).
class EigenPropagator {
public:
    EigenPropagator(const BoxModel& H, std::size_t cap = 4096) : geom_(H.geometry), spec_(box_spectrum(H, cap)) {}
    EigenPropagator(Spectrum s, LatticeGeometry g) : geom_(g), spec_(std::move(s)) {
        require(spec_.has_vectors(), "EigenPropagator: eigenvectors required");
    }

    Eigen::Index modes() const { return spec_.size(); }
    double energy(Eigen::Index k) const { return spec_.values(k); }
    double norm() const { return std::max(std::abs(spec_.values(0)), std::abs(spec_.values(spec_.size() - 1))); }
    const Spectrum& spectrum() const { return spec_; }
    const LatticeGeometry& geometry() const { return geom_; }
    Eigen::VectorXd weights(double s) const { return geom_.weights(s); }

    Eigen::VectorXcd coefficients(const Eigen::VectorXcd& f) const { return spec_.vectors.transpose() * f; }
    Eigen::VectorXcd synthesize(const Eigen::VectorXcd& c) const { return spec_.vectors * c; }

    Eigen::VectorXcd evolve(const Eigen::VectorXcd& f, double t) const {
        return spec_.apply_function(f, [t](double l) { return std::polar(1.0, -t * l); });
    }

private:
    LatticeGeometry geom_;
    Spectrum spec_;
};

/// Propagator through the torus Fourier multiplier.
class TorusPropagator {
public:
    explicit TorusPropagator(TorusModel T) : T_(std::move(T)) {
        if (!T_.applicable()) throw InvalidArgument("TorusPropagator: model has a polar zero mode");
    }

    Eigen::Index modes() const { return static_cast<Eigen::Index>(T_.size()); }
    double energy(Eigen::Index k) const { return T_.symbol_values()[static_cast<std::size_t>(k)]; }
    double norm() const {
        double m = 0.0;
        for (std::size_t k = 0; k < T_.size(); ++k)
            if (!T_.polar_mask()[k]) m = std::max(m, std::abs(T_.symbol_values()[k]));
        return m;
    }
    const TorusModel& model() const { return T_; }
    Eigen::VectorXd weights(double s) const { return T_.weights(s); }

    Eigen::VectorXcd coefficients(const Eigen::VectorXcd& f) const { return to_eigen(T_.to_spectral(to_std(f))); }
    Eigen::VectorXcd synthesize(const Eigen::VectorXcd& c) const { return to_eigen(T_.from_spectral(to_std(c))); }

    Eigen::VectorXcd evolve(const Eigen::VectorXcd& f, double t) const {
        return to_eigen(T_.apply_function(to_std(f), [t](double l) { return std::polar(1.0, -t * l); }));
    }

private:
    TorusModel T_;
};

/// e^{-itH} f on the torus.
inline StateVector evolve(const TorusModel& T, const Eigen::VectorXcd& f, double t) { return StateVector::from(TorusPropagator(T).evolve(f, t)); }

/// e^{-itH} f on the box via its eigendecomposition.
inline StateVector evolve(const BoxModel& H, const Eigen::VectorXcd& f, double t, std::size_t cap = 4096) {
    return StateVector::from(EigenPropagator(H, cap).evolve(f, t));
}

/// Gershgorin enclosure of the spectrum of a symmetric matrix.
inline std::pair<double, double> spectral_enclosure(const Eigen::MatrixXd& H) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        const double off = H.row(i).cwiseAbs().sum() - std::abs(H(i, i));
        lo = std::min(lo, H(i, i) - off);
        hi = std::max(hi, H(i, i) + off);
    }
    return {lo, hi};
}

/// e^{-itH} f by a Chebyshev expansion of order M on the Gershgorin enclosure.
inline StateVector chebyshev_evolve(const BoxModel& H, const Eigen::VectorXcd& f, double t, int M) {
    for (double r : H.r.values())
        if (r <= 0) throw InvalidArgument("chebyshev_evolve: negative orders give an unbounded operator; use the eigensolver route");
    require(M >= 0, "chebyshev_evolve: order must be nonnegative");
    require(f.size() == static_cast<Eigen::Index>(H.size()), "chebyshev_evolve: vector size mismatch");
    auto [lo, hi] = spectral_enclosure(H.matrix);
    const double a = std::max(0.5 * (hi - lo), 1e-300), b = 0.5 * (hi + lo);
    const double x = a * t;
    const cplx phase = std::polar(1.0, -b * t);
    auto coeff = [&](int k) {
        const double J = k == 0 ? std::cyl_bessel_j(0.0, std::abs(x)) : std::cyl_bessel_j(static_cast<double>(k), std::abs(x));
        // J_k(-x) = (-1)^k J_k(x)
        const double Js = (x < 0 && (k % 2)) ? -J : J;
        cplx ik(1.0);
        switch (k % 4) {
        case 1: ik = cplx(0, -1); break;
        case 2: ik = cplx(-1, 0); break;
        case 3: ik = cplx(0, 1); break;
        default: break;
        }
        return (k == 0 ? 1.0 : 2.0) * ik * Js * phase;
    };
    auto Hs = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd { return (H.matrix * v - b * v) / a; };
    Eigen::VectorXcd T0 = f, T1 = Hs(f);
    Eigen::VectorXcd out = coeff(0) * T0;
    if (M >= 1) out += coeff(1) * T1;
    for (int k = 2; k <= M; ++k) {
        Eigen::VectorXcd T2 = 2.0 * Hs(T1) - T0;
        out += coeff(k) * T2;
        T0 = std::move(T1);
        T1 = std::move(T2);
    }
    return StateVector::from(std::move(out));
}

namespace detail {

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0 || y[i] <= 0) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double den = static_cast<double>(n) * sxx - sx * sx;
    return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (static_cast<double>(n) * sxy - sx * sy) / den;
}

inline void check_grid(const std::vector<double>& T, const char* what) {
    require(!T.empty(), std::string(what) + ": empty time grid");
    for (std::size_t i = 0; i < T.size(); ++i) {
        require(T[i] > 0.0, std::string(what) + ": times must be positive");
        if (i) require(T[i] > T[i - 1], std::string(what) + ": times must increase");
    }
}

inline Eigen::VectorXcd phases(const Eigen::VectorXcd& c, const std::vector<double>& E, double t) {
    Eigen::VectorXcd out(c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k) out(k) = c(k) * std::polar(1.0, -t * E[static_cast<std::size_t>(k)]);
    return out;
}

} // namespace detail

struct DecayReport {
    double s = 1.0;
    Window I;
    std::vector<double> T;      ///< horizons
    std::vector<double> value;  ///< integral up to each horizon
    double tail_slope = 0.0;    ///< log-log slope of the integrand over the last decade
    double dt = 0.0;

    /// Relative increase between the last two horizons.
    double last_increase() const { return value.size() < 2 ? 0.0 : value.back() / value[value.size() - 2] - 1.0; }
};

/// int_0^T || <Lambda>^{-s} e^{-itH} phi(H) <Lambda>^{-s} f ||^2 dt, composite trapezoid, phi a bump on I.
template <class Prop>
DecayReport local_decay_integral(const Prop& P, const Eigen::VectorXcd& f, const Window& I, double s, const std::vector<double>& T,
                                 double dt = 0.0) {
    detail::check_grid(T, "local_decay_integral");
    require(I.width() > 0.0, "local_decay_integral: empty window");
    const Eigen::VectorXd w = P.weights(s);
    const Eigen::VectorXcd wf = w.cast<cplx>().cwiseProduct(f);
    Eigen::VectorXcd c = P.coefficients(wf);
    std::vector<double> E(static_cast<std::size_t>(P.modes()));
    for (Eigen::Index k = 0; k < P.modes(); ++k) {
        E[static_cast<std::size_t>(k)] = P.energy(k);
        c(k) *= window_bump(I, P.energy(k));
    }
    const double hmax = 0.1 / std::max(P.norm(), 1e-300);
    if (dt <= 0.0 || dt > hmax) dt = hmax;
    auto integrand = [&](double t) {
        const Eigen::VectorXcd psi = P.synthesize(detail::phases(c, E, t));
        return (w.cast<cplx>().cwiseProduct(psi)).squaredNorm();
    };
    DecayReport rep;
    rep.s = s;
    rep.I = I;
    rep.T = T;
    rep.dt = dt;
    double acc = 0.0, t0 = 0.0, f0 = integrand(0.0);
    std::vector<double> ts, ys;
    const double tail_lo = T.back() / 10.0;
    for (double Tk : T) {
        const auto steps = static_cast<long>(std::ceil((Tk - t0) / dt));
        const double h = (Tk - t0) / static_cast<double>(steps);
        for (long i = 1; i <= steps; ++i) {
            const double t = t0 + h * static_cast<double>(i);
            const double f1 = integrand(t);
            acc += 0.5 * h * (f0 + f1);
            f0 = f1;
            if (t >= tail_lo) {
                ts.push_back(t);
                ys.push_back(f1);
            }
        }
        t0 = Tk;
        rep.value.push_back(acc);
    }
    rep.tail_slope = detail::loglog_slope(ts, ys);
    return rep;
}

struct RageReport {
    std::vector<double> t;
    std::vector<double> overlap;  ///< |<g, e^{-itH} phi(H) f>|
    std::vector<double> envelope; ///< max over later times
    double envelope_slope = 0.0;   ///< log-log slope of the envelope over the second half of the grid
    bool non_decaying = false;
};

/// RAGE overlaps with an envelope fit; a non-decaying envelope signals point spectrum in I.
template <class Prop>
RageReport rage_overlap(const Prop& P, const Eigen::VectorXcd& g, const Eigen::VectorXcd& f, const Window& I, const std::vector<double>& t) {
    detail::check_grid(t, "rage_overlap");
    Eigen::VectorXcd cf = P.coefficients(f);
    const Eigen::VectorXcd cg = P.coefficients(g);
    std::vector<double> E(static_cast<std::size_t>(P.modes()));
    for (Eigen::Index k = 0; k < P.modes(); ++k) {
        E[static_cast<std::size_t>(k)] = P.energy(k);
        cf(k) *= window_bump(I, P.energy(k));
    }
    RageReport rep;
    rep.t = t;
    for (double tk : t) rep.overlap.push_back(std::abs(cg.dot(detail::phases(cf, E, tk))));
    rep.envelope = rep.overlap;
    for (std::size_t i = rep.envelope.size() - 1; i-- > 0;) rep.envelope[i] = std::max(rep.envelope[i], rep.envelope[i + 1]);
    const std::size_t h = t.size() / 2;
    rep.envelope_slope = detail::loglog_slope({t.begin() + static_cast<long>(h), t.end()}, {rep.envelope.begin() + static_cast<long>(h), rep.envelope.end()});
    rep.non_decaying = !(rep.envelope_slope < -0.05) || rep.envelope.back() > 0.5 * rep.envelope.front();
    return rep;
}

struct BallisticReport {
    double v = 0.0;
    Window I;
    std::vector<double> T;
    std::vector<double> average;          ///< (1/T) int_0^T ||1_{|A|<=vt} e^{-itH} chi(H) f||^2 dt
    std::vector<double> position_average; ///< same with |Lambda(Q)| <= vt (exploratory; empty unless requested)
    double fitted_C = 0.0;                ///< least squares of average ~ C / log(1+T) over all but the last horizon
    bool non_increasing = false;
    bool below_envelope = false;
    double dt = 0.0;
};

struct BallisticOptions {
    double dt = 0.0;
    bool position_variant = false;
    double coeff_cut = 1e-14; ///< spectral coefficients below this fraction of the largest are dropped
};

/// Time-averaged mass in the region |A| <= v t, with A the box conjugate operator.
inline BallisticReport ballistic_average(const BoxModel& H, const Eigen::VectorXcd& f, const Window& I, double v, const std::vector<double>& T,
                                         const BallisticOptions& opt = {}) {
    detail::check_grid(T, "ballistic_average");
    require(v > 0.0, "ballistic_average: speed must be positive");
    require(f.size() == static_cast<Eigen::Index>(H.size()), "ballistic_average: vector size mismatch");
    const Spectrum S = box_spectrum(H);
    Eigen::VectorXcd c = S.vectors.transpose() * f;
    double cmax = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        c(k) *= window_bump(I, S.values(k));
        cmax = std::max(cmax, std::abs(c(k)));
    }
    std::vector<Eigen::Index> act;
    for (Eigen::Index k = 0; k < c.size(); ++k)
        if (std::abs(c(k)) > opt.coeff_cut * cmax) act.push_back(k);
    const auto na = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd Va(S.vectors.rows(), na);
    Eigen::VectorXcd ca(na);
    std::vector<double> E(act.size());
    for (Eigen::Index j = 0; j < na; ++j) {
        Va.col(j) = S.vectors.col(act[static_cast<std::size_t>(j)]);
        ca(j) = c(act[static_cast<std::size_t>(j)]);
        E[static_cast<std::size_t>(j)] = S.values(act[static_cast<std::size_t>(j)]);
    }
    // eigenbasis of A sorted by |a|, rows beyond v T_max never enter
    const ConjugateOperator A = build_conjugate(H);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ea(A.hermitian());
    if (ea.info() != Eigen::Success) throw ComputeError("ballistic_average: conjugate eigensolver did not converge");
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(ea.eigenvalues().size()));
    std::iota(rows.begin(), rows.end(), 0);
    std::sort(rows.begin(), rows.end(), [&](auto a, auto b) { return std::abs(ea.eigenvalues()(a)) < std::abs(ea.eigenvalues()(b)); });
    std::vector<double> absa;
    for (auto r : rows)
        if (std::abs(ea.eigenvalues()(r)) <= v * T.back()) absa.push_back(std::abs(ea.eigenvalues()(r)));
    const auto nr = static_cast<Eigen::Index>(absa.size());
    Eigen::MatrixXcd Ur(ea.eigenvectors().rows(), nr);
    for (Eigen::Index i = 0; i < nr; ++i) Ur.col(i) = ea.eigenvectors().col(rows[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXcd M = Ur.adjoint() * Va.cast<cplx>();
    std::vector<double> radius(static_cast<std::size_t>(H.size()));
    std::vector<Eigen::Index> prow(radius.size());
    for (std::size_t i = 0; i < radius.size(); ++i) radius[i] = H.geometry.Lambda(i) - static_cast<double>(H.dim());
    std::iota(prow.begin(), prow.end(), 0);
    std::sort(prow.begin(), prow.end(), [&](auto a, auto b) { return radius[static_cast<std::size_t>(a)] < radius[static_cast<std::size_t>(b)]; });

    double nrm = std::max(std::abs(S.values(0)), std::abs(S.values(S.size() - 1)));
    double dt = 0.1 / std::max(nrm, 1e-300);
    if (opt.dt > 0.0 && opt.dt < dt) dt = opt.dt;
    auto mass = [&](double t) {
        const Eigen::VectorXcd ph = detail::phases(ca, E, t);
        const auto cnt = static_cast<Eigen::Index>(std::upper_bound(absa.begin(), absa.end(), v * t) - absa.begin());
        if (cnt == 0) return 0.0;
        return (M.topRows(cnt) * ph).squaredNorm();
    };
    auto pmass = [&](double t) {
        const Eigen::VectorXcd psi = Va.cast<cplx>() * detail::phases(ca, E, t);
        double m = 0.0;
        for (auto i : prow) {
            if (radius[static_cast<std::size_t>(i)] > v * t) break;
            m += std::norm(psi(i));
        }
        return m;
    };
    BallisticReport rep;
    rep.v = v;
    rep.I = I;
    rep.T = T;
    rep.dt = dt;
    double acc = 0.0, pacc = 0.0, t0 = 0.0, m0 = mass(0.0), p0 = opt.position_variant ? pmass(0.0) : 0.0;
    for (double Tk : T) {
        const auto steps = static_cast<long>(std::ceil((Tk - t0) / dt));
        const double h = (Tk - t0) / static_cast<double>(steps);
        for (long i = 1; i <= steps; ++i) {
            const double t = t0 + h * static_cast<double>(i);
            const double m1 = mass(t);
            acc += 0.5 * h * (m0 + m1);
            m0 = m1;
            if (opt.position_variant) {
                const double p1 = pmass(t);
                pacc += 0.5 * h * (p0 + p1);
                p0 = p1;
            }
        }
        t0 = Tk;
        rep.average.push_back(acc / Tk);
        if (opt.position_variant) rep.position_average.push_back(pacc / Tk);
    }
    rep.non_increasing = true;
    for (std::size_t i = 1; i < rep.average.size(); ++i)
        if (rep.average[i] > rep.average[i - 1]) rep.non_increasing = false;
    const std::size_t nfit = rep.average.size() > 1 ? rep.average.size() - 1 : 1;
    double sgy = 0.0, sgg = 0.0;
    for (std::size_t i = 0; i < nfit; ++i) {
        const double g = 1.0 / std::log1p(T[i]);
        sgy += g * rep.average[i];
        sgg += g * g;
    }
    rep.fitted_C = sgy / sgg;
    rep.below_envelope = rep.average.back() <= rep.fitted_C / std::log1p(T.back());
    return rep;
}

struct WaveProbeReport {
    std::vector<double> t;
    std::vector<double> increments; ///< ||Omega(t_{k+1}) f - Omega(t_k) f||
    double range_mass = 0.0;        ///< fraction of the final vector in the H-spectral window I
    double boundary_mass = 0.0;     ///< mass of e^{-itH0} chi(H0) f outside |n| <= 0.9 L at the last time
    bool left_bulk = false;
    bool decreasing = false;
    bool converged = false;
};

/// Cauchy increments of Omega(t) f = e^{itH} chi(H0) e^{-itH0} f on a box.
inline WaveProbeReport wave_operator_probe(const BoxModel& H, const BoxModel& H0, const Window& I, const Eigen::VectorXcd& f,
                                           const std::vector<double>& t, double tol = 1e-4) {
    require(H.size() == H0.size(), "wave_operator_probe: model size mismatch");
    require(t.size() >= 2, "wave_operator_probe: need at least two times");
    for (std::size_t i = 1; i < t.size(); ++i) require(t[i] > t[i - 1], "wave_operator_probe: times must increase");
    const Spectrum S0 = box_spectrum(H0), S = box_spectrum(H);
    Eigen::VectorXcd c0 = S0.vectors.transpose() * f;
    for (Eigen::Index k = 0; k < c0.size(); ++k) c0(k) *= window_bump(I, S0.values(k));
    const Eigen::MatrixXcd C = (S.vectors.transpose() * S0.vectors).cast<cplx>();
    std::vector<double> E0(static_cast<std::size_t>(S0.size()));
    for (Eigen::Index k = 0; k < S0.size(); ++k) E0[static_cast<std::size_t>(k)] = S0.values(k);
    auto omega = [&](double tk) {
        Eigen::VectorXcd d = C * detail::phases(c0, E0, tk);
        for (Eigen::Index k = 0; k < d.size(); ++k) d(k) *= std::polar(1.0, tk * S.values(k));
        return d; // coefficients in the eigenbasis of H
    };
    WaveProbeReport rep;
    rep.t = t;
    Eigen::VectorXcd prev = omega(t[0]);
    for (std::size_t i = 1; i < t.size(); ++i) {
        Eigen::VectorXcd cur = omega(t[i]);
        rep.increments.push_back((cur - prev).norm());
        prev = std::move(cur);
    }
    double in = 0.0;
    for (Eigen::Index k = 0; k < prev.size(); ++k)
        if (I.contains(S.values(k))) in += std::norm(prev(k));
    rep.range_mass = prev.squaredNorm() > 0 ? in / prev.squaredNorm() : 1.0;
    const Eigen::VectorXcd u = S0.vectors.cast<cplx>() * detail::phases(c0, E0, t.back());
    const Eigen::VectorXd ball = H0.geometry.ball(0.9 * static_cast<double>(H0.L));
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (ball(i) == 0.0) rep.boundary_mass += std::norm(u(i));
    rep.left_bulk = rep.boundary_mass > 1e-8;
    rep.decreasing = true;
    for (std::size_t i = 1; i < rep.increments.size(); ++i)
        if (rep.increments[i] > rep.increments[i - 1] && rep.increments[i] > 1e-13) rep.decreasing = false;
    rep.converged = rep.increments.back() < tol;
    return rep;
}

} // namespace fraclap
