#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "model.hpp"
#include "quadrature.hpp"
#include "symbol.hpp"

namespace fraclap {

enum class GreenMethod { Quadrature, Extrapolated, ResidueSplit };

inline const char* to_string(GreenMethod m) {
    switch (m) {
    case GreenMethod::Quadrature: return "quadrature";
    case GreenMethod::Extrapolated: return "extrapolated";
    case GreenMethod::ResidueSplit: return "residue-split";
    }
    return "?";
}

/// Lattice Green function value G(lambda + i eta; lag) = <delta_lag, (H0 - z)^{-1} delta_0>.
struct GreenValue {
    double lambda = 0.0;
    double eta = 0.0;
    bool boundary = false; ///< eta = 0+ (limit from the upper half-plane)
    long lag = 0;
    cplx value{};
    GreenMethod method = GreenMethod::Quadrature;
    double crosscheck_gap = std::numeric_limits<double>::quiet_NaN();
    bool flagged = false;
};

struct GreenOptions {
    int gauss_nodes = 20;
    double grading = 0.5;          ///< panel width <= grading * distance to the nearest singularity
    double phase_per_panel = 4.0;  ///< max of lag * panel width
    double max_panel = 0.25;
    double guard_fraction = 1e-3;  ///< threshold guard as a fraction of the band width
    double crosscheck_tol = 1e-6;
    bool crosscheck = true;
};

namespace detail {

struct Singularity {
    double x;   ///< real position
    double eps; ///< distance off the real axis
};

/// Breakpoints of [a, b] refined until each panel is small relative to its distance to the singularities.
inline std::vector<double> graded_breaks(double a, double b, const std::vector<Singularity>& sing, double hmax, double kappa, double hmin = 1e-14) {
    std::vector<double> out{a};
    std::vector<std::pair<double, double>> stack{{a, b}};
    std::vector<std::pair<double, double>> accepted;
    while (!stack.empty()) {
        auto [x0, x1] = stack.back();
        stack.pop_back();
        const double w = x1 - x0;
        bool ok = w <= hmax;
        if (ok && w > hmin) {
            for (const auto& s : sing) {
                const double dx = s.x < x0 ? x0 - s.x : (s.x > x1 ? s.x - x1 : 0.0);
                const double dist = std::hypot(dx, s.eps);
                if (w > kappa * dist) {
                    ok = false;
                    break;
                }
            }
        }
        if (ok || w <= hmin) accepted.emplace_back(x0, x1);
        else {
            const double m = 0.5 * (x0 + x1);
            stack.emplace_back(m, x1);
            stack.emplace_back(x0, m);
        }
    }
    std::sort(accepted.begin(), accepted.end());
    for (const auto& p : accepted) out.push_back(p.second);
    return out;
}

inline void append_panels(QuadRule& q, const QuadRule& gl, const std::vector<double>& br, double weight_scale = 1.0) {
    for (std::size_t p = 0; p + 1 < br.size(); ++p) {
        const double c = 0.5 * (br[p] + br[p + 1]), h = 0.5 * (br[p + 1] - br[p]);
        for (std::size_t i = 0; i < gl.size(); ++i) {
            q.x.push_back(c + h * gl.x[i]);
            q.w.push_back(weight_scale * h * gl.w[i]);
        }
    }
}

/// (1/pi) sum_i w_i cos(lag x_i) f_i for lag = 0..M, rotation recurrence reseeded every 32 steps.
inline std::vector<cplx> cosine_sums(const std::vector<double>& x, const std::vector<cplx>& wf, long M) {
    std::vector<cplx> g(static_cast<std::size_t>(M) + 1, cplx(0.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = x[i];
        const cplx rot(std::cos(t), std::sin(t));
        cplx e(1.0, 0.0);
        for (long k = 0; k <= M; ++k) {
            if (k % 32 == 0) e = cplx(std::cos(static_cast<double>(k) * t), std::sin(static_cast<double>(k) * t));
            g[static_cast<std::size_t>(k)] += wf[i] * e.real();
            e *= rot;
        }
    }
    for (auto& v : g) v /= std::numbers::pi;
    return g;
}

inline bool smooth_at_zero(double r) { return r > 0 && r == std::round(r); }

inline double band_width(double r) {
    const auto b = axis_spectrum(r);
    return b.hi.is_finite() ? b.hi.value() - b.lo : b.lo;
}

/// Guard: boundary values require lambda strictly inside the band by eps = fraction * width.
inline void check_guard(double r, double lambda, const GreenOptions& opt) {
    const auto b = axis_spectrum(r);
    const double eps = opt.guard_fraction * band_width(r);
    const bool ok = lambda > b.lo + eps && (b.hi.is_infinite() || lambda < b.hi.value() - eps);
    if (!ok) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "green_1d: lambda=%.17g lies within the threshold guard (eps=%.3g) or outside the band", lambda, eps);
        throw ThresholdGuardError(buf);
    }
}

/// G(z; lag), lag = 0..M, for z off the real band (eta != 0 or lambda outside the band).
inline std::vector<cplx> green_table_offaxis(double r, cplx z, long M, const GreenOptions& opt) {
    require(r != 0.0, "green_1d: order must be nonzero");
    const bool lower = z.imag() < 0;
    if (lower) z = std::conj(z);
    std::vector<Singularity> sing;
    if (!smooth_at_zero(r)) sing.push_back({0.0, 0.0});
    const auto band = axis_spectrum(r);
    const double lam = z.real();
    const bool in_band = lam > band.lo && (band.hi.is_infinite() || lam < band.hi.value());
    if (in_band) {
        const auto root = shell_root(r, lam);
        sing.push_back({root.theta, z.imag() / std::max(root.slope, 1e-300)});
    } else if (z.imag() == 0.0) {
        // off-band real energy: integrand is real-analytic on [0, pi]
    } else {
        // nearest band edge governs the effective singularity
        const double edge_theta = (r > 0) == (lam <= band.lo) ? 0.0 : std::numbers::pi;
        sing.push_back({edge_theta, std::sqrt(std::abs(z.imag()))});
    }
    const double hmax = std::min(opt.max_panel, opt.phase_per_panel / static_cast<double>(std::max<long>(M, 1)));
    const auto br = graded_breaks(0.0, std::numbers::pi, sing, hmax, opt.grading);
    QuadRule q;
    append_panels(q, gauss_legendre(opt.gauss_nodes), br);
    std::vector<cplx> wf(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) wf[i] = q.w[i] / (axis_symbol(r, q.x[i]) - z);
    auto g = cosine_sums(q.x, wf, M);
    if (lower)
        for (auto& v : g) v = std::conj(v);
    return g;
}

/// G(lambda + i0; lag), lag = 0..M, by folding the principal value around the shell root.
inline std::vector<cplx> green_table_boundary(double r, double lambda, long M, const GreenOptions& opt) {
    check_guard(r, lambda, opt);
    const auto root = shell_root(r, lambda);
    const double ts = root.theta;
    const double delta = 0.5 * std::min({ts, std::numbers::pi - ts, 1.0});
    const double hmax = std::min(opt.max_panel, opt.phase_per_panel / static_cast<double>(std::max<long>(M, 1)));
    const QuadRule gl = gauss_legendre(opt.gauss_nodes);
    std::vector<Singularity> sing{{ts, 0.0}};
    if (!smooth_at_zero(r)) sing.push_back({0.0, 0.0});
    QuadRule outer;
    append_panels(outer, gl, graded_breaks(0.0, ts - delta, sing, hmax, opt.grading));
    append_panels(outer, gl, graded_breaks(ts + delta, std::numbers::pi, sing, hmax, opt.grading));
    std::vector<cplx> wf(outer.size());
    for (std::size_t i = 0; i < outer.size(); ++i) wf[i] = outer.w[i] / (axis_symbol(r, outer.x[i]) - lambda);
    // folded middle: int_0^delta [F(ts + u) + F(ts - u)] du, both nodes carried separately
    QuadRule mid;
    append_panels(mid, gl, graded_breaks(0.0, delta, {{ts, 0.0}}, hmax, opt.grading));
    std::vector<double> xs = outer.x;
    for (std::size_t i = 0; i < mid.size(); ++i) {
        const double u = mid.x[i];
        const double fp = 1.0 / (axis_symbol(r, ts + u) - lambda), fm = 1.0 / (axis_symbol(r, ts - u) - lambda);
        xs.push_back(ts + u);
        wf.emplace_back(mid.w[i] * fp);
        xs.push_back(ts - u);
        wf.emplace_back(mid.w[i] * fm);
    }
    auto g = cosine_sums(xs, wf, M);
    // residue: i cos(lag ts) / |symbol'(ts)|
    for (long k = 0; k <= M; ++k) g[static_cast<std::size_t>(k)] += cplx(0.0, std::cos(static_cast<double>(k) * ts) / root.slope);
    return g;
}

/// Neville extrapolation to eta = 0 of values at three eta.
inline cplx extrapolate_zero(const double* eta, const cplx* v) {
    cplx p01 = (v[0] * (0.0 - eta[1]) - v[1] * (0.0 - eta[0])) / (eta[0] - eta[1]);
    cplx p12 = (v[1] * (0.0 - eta[2]) - v[2] * (0.0 - eta[1])) / (eta[1] - eta[2]);
    return (p01 * (0.0 - eta[2]) - p12 * (0.0 - eta[0])) / (eta[0] - eta[2]);
}

} // namespace detail

/// Green function table G(lag) for lag = 0..M at a fixed energy.
struct GreenTable {
    double r = 1.0;
    cplx z{};
    bool boundary = false;
    int side = 1; ///< +1: lambda + i0, -1: lambda - i0
    std::vector<cplx> values;

    cplx operator()(long lag) const {
        const long a = lag < 0 ? -lag : lag;
        if (a >= static_cast<long>(values.size())) throw InvalidArgument("GreenTable: lag outside table");
        return values[static_cast<std::size_t>(a)];
    }
    long max_lag() const { return static_cast<long>(values.size()) - 1; }
};

/// Table at z = lambda + i eta (eta != 0) or at the boundary value lambda +- i0 (eta == 0 and side +-1).
inline GreenTable green_table(double r, double lambda, double eta, long M, int side = 1, const GreenOptions& opt = {}) {
    GreenTable t;
    t.r = r;
    t.z = cplx(lambda, eta);
    const auto band = axis_spectrum(r);
    const bool in_band = lambda > band.lo && (band.hi.is_infinite() || lambda < band.hi.value());
    if (eta == 0.0 && in_band) {
        t.boundary = true;
        t.side = side >= 0 ? 1 : -1;
        t.values = detail::green_table_boundary(r, lambda, M, opt);
        if (t.side < 0)
            for (auto& v : t.values) v = std::conj(v);
    } else {
        if (eta == 0.0 && !band.hi.is_infinite() && (lambda == band.lo || lambda == band.hi.value()))
            throw ThresholdGuardError("green_1d: real energy at a band edge");
        if (eta == 0.0 && band.hi.is_infinite() && lambda == band.lo) throw ThresholdGuardError("green_1d: real energy at a band edge");
        t.values = detail::green_table_offaxis(r, cplx(lambda, eta), M, opt);
    }
    return t;
}

/// Single Green function value; eta == 0 requests the boundary value lambda + i0 with an eta-extrapolation cross-check.
inline GreenValue green_1d(double r, double lambda, double eta, long lag, const GreenOptions& opt = {}) {
    GreenValue g;
    g.lambda = lambda;
    g.eta = eta;
    g.lag = lag;
    const long a = lag < 0 ? -lag : lag;
    const auto band = axis_spectrum(r);
    const bool in_band = lambda > band.lo && (band.hi.is_infinite() || lambda < band.hi.value());
    if (eta != 0.0 || !in_band) {
        g.value = green_table(r, lambda, eta, a, 1, opt).values.back();
        g.method = GreenMethod::Quadrature;
        return g;
    }
    g.boundary = true;
    g.value = detail::green_table_boundary(r, lambda, a, opt).back();
    g.method = GreenMethod::ResidueSplit;
    if (opt.crosscheck) {
        const double etas[3] = {1e-2, 1e-3, 1e-4};
        cplx v[3];
        for (int i = 0; i < 3; ++i) v[i] = detail::green_table_offaxis(r, cplx(lambda, etas[i]), a, opt).back();
        const cplx ex = detail::extrapolate_zero(etas, v);
        g.crosscheck_gap = std::abs(ex - g.value);
        g.flagged = g.crosscheck_gap > opt.crosscheck_tol;
    }
    return g;
}

/// Richardson-extrapolated boundary value alone (cross-check route).
inline GreenValue green_1d_extrapolated(double r, double lambda, long lag, const GreenOptions& opt = {}) {
    detail::check_guard(r, lambda, opt);
    const long a = lag < 0 ? -lag : lag;
    const double etas[3] = {1e-2, 1e-3, 1e-4};
    cplx v[3];
    for (int i = 0; i < 3; ++i) v[i] = detail::green_table_offaxis(r, cplx(lambda, etas[i]), a, opt).back();
    GreenValue g;
    g.lambda = lambda;
    g.boundary = true;
    g.lag = lag;
    g.value = detail::extrapolate_zero(etas, v);
    g.method = GreenMethod::Extrapolated;
    return g;
}

/// Solves (H - z) u = f on the box by LU; throws on a near-singular solve.
inline Eigen::VectorXcd resolvent_apply(const BoxModel& box, cplx z, const Eigen::VectorXcd& f, double tol = 1e-10) {
    const auto n = static_cast<Eigen::Index>(box.size());
    require(f.size() == n, "resolvent_apply: vector size mismatch");
    Eigen::MatrixXcd M = box.matrix.cast<cplx>();
    M.diagonal().array() -= z;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-14)) throw ComputeError("resolvent_apply: near-singular solve (rcond " + std::to_string(rcond) + ")");
    Eigen::VectorXcd u = lu.solve(f);
    const double res = (M * u - f).norm();
    if (!std::isfinite(res) || res > tol * std::max(f.norm(), 1e-300))
        throw ComputeError("resolvent_apply: near-singular solve (residual " + std::to_string(res) + ")");
    return u;
}

/// (H0 - z)^{-1} f on the torus by the exact multiplier.
inline std::vector<cplx> resolvent_apply(const TorusModel& torus, cplx z, const std::vector<cplx>& f) {
    for (std::size_t i = 0; i < torus.size(); ++i)
        if (!torus.polar_mask()[i] && std::abs(torus.symbol_values()[i] - z) < 1e-14)
            throw ComputeError("resolvent_apply: z coincides with a torus eigenvalue");
    return torus.apply_function(f, [z](double l) { return 1.0 / (l - z); });
}

/// Largest singular value by block power iteration on M^* M.
inline double operator_norm(const Eigen::MatrixXcd& M, double tol = 1e-8, int block = 4, int max_iter = 1000) {
    const Eigen::Index n = M.cols();
    if (n == 0) return 0.0;
    const int b = static_cast<int>(std::min<Eigen::Index>(block, n));
    // deterministic start: smooth plus oscillating columns
    Eigen::MatrixXcd X(n, b);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < b; ++c) X(i, c) = cplx(std::cos(0.7 * (c + 1) * i + 0.3 * c), std::sin(1.3 * (c + 1) * i)) + cplx(1.0 / (1.0 + c), 0.0);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(X);
    X = qr.householderQ() * Eigen::MatrixXcd::Identity(n, b);
    double prev = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::MatrixXcd Y = M * X;
        const Eigen::MatrixXcd Z = M.adjoint() * Y;
        // Rayleigh-Ritz on span(X)
        const Eigen::MatrixXcd S = Y.adjoint() * Y;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S, Eigen::EigenvaluesOnly);
        const double est = std::sqrt(std::max(0.0, es.eigenvalues()(b - 1)));
        Eigen::HouseholderQR<Eigen::MatrixXcd> q2(Z);
        X = q2.householderQ() * Eigen::MatrixXcd::Identity(n, b);
        if (it > 2 && std::abs(est - prev) <= tol * est) return est;
        prev = est;
    }
    return prev;
}

/// Resolvent provider for the infinite 1-D lattice with a finitely supported potential (Krein formula on a window).
class LatticeResolvent {
public:
    LatticeResolvent(double r, Potential W, long window, GreenOptions opt = {}) : r_(r), W_(std::move(W)), M_(window), opt_(opt) {
        require(W_.dim == 1, "LatticeResolvent: one-dimensional potentials only");
        require(W_.finite_support, "LatticeResolvent: potential must be finitely supported");
        for (const auto& [s, v] : W_.values)
            if (v != 0.0) {
                sites_.push_back(s[0]);
                wv_.push_back(v);
            }
        for (long f : sites_) require(std::abs(f) <= M_, "LatticeResolvent: potential support outside the window");
        // discrete eigenvalues outside the band from a large box
        if (!sites_.empty()) {
            const long L = std::max<long>(200, 4 * W_.support_radius());
            const auto box = hamiltonian(build_box(FractionalOrder{r_}, std::min<long>(L, 1000)), W_);
            const auto s = eig_all(box, false);
            const auto band = axis_spectrum(r_);
            for (Eigen::Index i = 0; i < s.size(); ++i) {
                const double e = s.values(i);
                if (e < band.lo - 1e-9 || (band.hi.is_finite() && e > band.hi.value() + 1e-9)) bound_states_.push_back(e);
            }
        }
    }

    long window() const { return M_; }
    const std::vector<double>& bound_states() const { return bound_states_; }

    double distance_to_spectrum(cplx z) const {
        const auto band = axis_spectrum(r_);
        double dx = 0.0;
        if (z.real() < band.lo) dx = band.lo - z.real();
        else if (band.hi.is_finite() && z.real() > band.hi.value()) dx = z.real() - band.hi.value();
        double d = std::hypot(dx, z.imag());
        for (double e : bound_states_) d = std::min(d, std::abs(z - e));
        return d;
    }

    /// w_n R(z)(n, m) w_m on |n|, |m| <= window.
    Eigen::MatrixXcd weighted_resolvent(cplx z, const Eigen::VectorXd& w) const {
        const long n = 2 * M_ + 1;
        const auto g = green_table(r_, z.real(), z.imag(), 2 * M_, 1, opt_);
        Eigen::MatrixXcd R(n, n);
        for (long a = 0; a < n; ++a)
            for (long b = 0; b < n; ++b) R(a, b) = g(a - b);
        if (!sites_.empty()) {
            const auto F = static_cast<Eigen::Index>(sites_.size());
            Eigen::MatrixXcd GF(F, F), GnF(n, F);
            for (Eigen::Index i = 0; i < F; ++i) {
                for (Eigen::Index j = 0; j < F; ++j) GF(i, j) = g(sites_[static_cast<std::size_t>(i)] - sites_[static_cast<std::size_t>(j)]);
                for (long a = 0; a < n; ++a) GnF(a, i) = g(a - M_ - sites_[static_cast<std::size_t>(i)]);
            }
            Eigen::MatrixXcd Wd = Eigen::MatrixXcd::Zero(F, F);
            for (Eigen::Index i = 0; i < F; ++i) Wd(i, i) = wv_[static_cast<std::size_t>(i)];
            const Eigen::MatrixXcd T = Wd * (Eigen::MatrixXcd::Identity(F, F) + GF * Wd).inverse();
            R -= GnF * T * GnF.transpose();
        }
        return w.asDiagonal() * R * w.asDiagonal();
    }

    /// <Lambda(n)>^{-s} on the window.
    Eigen::VectorXd weights(double s) const {
        const LatticeGeometry g{1, 2 * M_ + 1, -M_};
        return g.weights(s);
    }

private:
    double r_;
    Potential W_;
    long M_;
    GreenOptions opt_;
    std::vector<long> sites_;
    std::vector<double> wv_;
    std::vector<double> bound_states_;
};

/// Resolvent provider for a box Hamiltonian via its eigendecomposition.
class BoxResolvent {
public:
    explicit BoxResolvent(const BoxModel& H) : geom_(H.geometry), spec_(box_spectrum(H)) {}

    double distance_to_spectrum(cplx z) const {
        double d = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < spec_.size(); ++i) d = std::min(d, std::abs(z - spec_.values(i)));
        return d;
    }

    Eigen::MatrixXcd weighted_resolvent(cplx z, const Eigen::VectorXd& w) const {
        const Eigen::MatrixXd WV = w.asDiagonal() * spec_.vectors;
        Eigen::VectorXcd d(spec_.size());
        for (Eigen::Index i = 0; i < spec_.size(); ++i) d(i) = 1.0 / (spec_.values(i) - z);
        return WV.cast<cplx>() * d.asDiagonal() * WV.transpose().cast<cplx>();
    }

    Eigen::VectorXd weights(double s) const { return geom_.weights(s); }

private:
    LatticeGeometry geom_;
    Spectrum spec_;
};

struct LapScan {
    Window I;
    double s = 1.0;
    std::vector<double> etas;
    std::vector<double> lambdas;
    std::vector<double> sup_norm;               ///< per eta
    std::vector<std::vector<double>> norms;     ///< [eta][lambda]
    double change = 0.0;                        ///< sup(eta_last) / sup(reference) - 1
    std::string verdict;                        ///< "saturating" or "growing"
    double threshold_margin = 0.0;
    bool near_threshold = false;
};

/// sup over lambda in I of ||<Lambda>^{-s} (H - lambda - i eta)^{-1} <Lambda>^{-s}|| for each eta.
/// The verdict compares the last eta with the first eta at least two decades larger.
template <class Provider>
LapScan lap_scan(const Provider& P, const FractionalOrder& r, const Window& I, double s, const std::vector<double>& etas, int lambda_points = 11,
                 double tol = 1e-8) {
    require(!etas.empty(), "lap_scan: empty eta grid");
    for (std::size_t i = 1; i < etas.size(); ++i) require(etas[i] < etas[i - 1], "lap_scan: eta grid must be strictly decreasing");
    require(etas.back() > 0.0, "lap_scan: eta must be positive");
    require(s >= 0.0, "lap_scan: weight exponent must be nonnegative");
    require(lambda_points >= 1, "lap_scan: need at least one lambda");
    LapScan scan;
    scan.I = I;
    scan.s = s;
    scan.etas = etas;
    scan.threshold_margin = threshold_set(r).window_margin(I);
    scan.near_threshold = scan.threshold_margin < 1e-3 * I.width();
    for (int i = 0; i < lambda_points; ++i)
        scan.lambdas.push_back(lambda_points == 1 ? I.center() : I.lo + I.width() * i / (lambda_points - 1));
    const Eigen::VectorXd w = P.weights(s);
    for (double eta : etas) {
        std::vector<double> row;
        double sup = 0.0;
        for (double lam : scan.lambdas) {
            const cplx z(lam, eta);
            // unweighted: the resolvent of a self-adjoint operator has norm 1/dist(z, spectrum)
            const double nrm = s == 0.0 ? 1.0 / P.distance_to_spectrum(z) : operator_norm(P.weighted_resolvent(z, w), tol);
            row.push_back(nrm);
            sup = std::max(sup, nrm);
        }
        scan.norms.push_back(row);
        scan.sup_norm.push_back(sup);
    }
    std::size_t ref = 0;
    for (std::size_t i = 0; i < etas.size(); ++i)
        if (etas[i] >= 100.0 * etas.back() * (1.0 - 1e-12)) ref = i;
    scan.change = scan.sup_norm.back() / scan.sup_norm[ref] - 1.0;
    scan.verdict = std::abs(scan.change) < 0.1 ? "saturating" : "growing";
    return scan;
}

struct ContinuityScan {
    std::vector<double> r_grid;
    std::vector<double> increments; ///< ||R(r_{i+1}) - R(r_i)|| for adjacent pairs
    double max_increment = 0.0;
};

/// Norm increments of the free torus resolvent along an r-grid (exact multipliers, d = 1).
inline ContinuityScan r_continuity_scan(const std::vector<double>& r_grid, cplx z, std::size_t N = 1024) {
    require(r_grid.size() >= 2, "r_continuity_scan: need at least two orders");
    require(z.imag() != 0.0, "r_continuity_scan: Im z must be nonzero");
    double rmin = r_grid.front();
    for (double r : r_grid) {
        require(r != 0.0, "r_continuity_scan: orders must be nonzero");
        require(r > -1.0, "r_continuity_scan: orders must exceed -1");
        rmin = std::min(rmin, r);
    }
    const FrequencyGrid grid = rmin < 0 ? FrequencyGrid::HalfInteger : FrequencyGrid::Plain;
    ContinuityScan out;
    out.r_grid = r_grid;
    std::vector<std::vector<cplx>> mult;
    for (double r : r_grid) {
        const TorusModel T(FractionalOrder{r}, N, grid);
        std::vector<cplx> m(T.size());
        for (std::size_t k = 0; k < T.size(); ++k) m[k] = 1.0 / (T.symbol_values()[k] - z);
        mult.push_back(std::move(m));
    }
    for (std::size_t i = 0; i + 1 < mult.size(); ++i) {
        double inc = 0.0;
        for (std::size_t k = 0; k < mult[i].size(); ++k) inc = std::max(inc, std::abs(mult[i + 1][k] - mult[i][k]));
        out.increments.push_back(inc);
        out.max_increment = std::max(out.max_increment, inc);
    }
    return out;
}

} // namespace fraclap
