#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "model.hpp"
#include "resolvent.hpp"
#include "smooth.hpp"
#include "symbol.hpp"

namespace fraclap {

/// Energy-shell data of the 1-D symbol: roots +-theta and the trace weight w = (2 pi |symbol'|)^{-1/2}.
/// Phase convention: Im G(lambda + i0; 0) >= 0.
struct ShellData {
    double r = 1.0;
    double lambda = 0.0;
    double theta = 0.0;
    double slope = 0.0;
    double weight = 0.0;
    double stone_residual = 0.0; ///< |2 w^2 - (1/pi) Im G(lambda + i0; 0)|
};

inline ShellData shell_data(double r, double lambda, const GreenOptions& opt = {}) {
    require(r != 0.0, "shell_data: order must be nonzero");
    detail::check_guard(r, lambda, opt);
    const auto root = shell_root(r, lambda);
    ShellData s;
    s.r = r;
    s.lambda = lambda;
    s.theta = root.theta;
    s.slope = root.slope;
    s.weight = 1.0 / std::sqrt(2.0 * std::numbers::pi * root.slope);
    if (std::abs(axis_symbol(r, s.theta) - lambda) > 1e-13 * std::max(1.0, std::abs(lambda)))
        throw ComputeError("shell_data: shell root inaccurate");
    GreenOptions g = opt;
    g.crosscheck = false;
    const cplx G0 = green_1d(r, lambda, 0.0, 0, g).value;
    s.stone_residual = std::abs(2.0 * s.weight * s.weight - G0.imag() / std::numbers::pi);
    if (s.stone_residual > 1e-6) throw ComputeError("shell_data: Stone normalization check failed");
    return s;
}

/// Restriction of W to its finite support F, sites in ascending order.
struct SupportBlock {
    std::vector<long> sites;
    Eigen::VectorXd values;
};

inline SupportBlock support_block(const Potential& W) {
    require(W.dim == 1, "scattering: one-dimensional potentials only");
    require(W.finite_support, "scattering: potential must be finitely supported");
    SupportBlock b;
    std::vector<double> v;
    for (const auto& [s, x] : W.values)
        if (x != 0.0) {
            b.sites.push_back(s[0]);
            v.push_back(x);
        }
    b.values = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    return b;
}

struct TMatrix {
    SupportBlock F;
    Eigen::MatrixXcd T;   ///< W (1 + R0 W)^{-1}
    Eigen::MatrixXcd T2;  ///< W - W R W with R restricted to F
    double route_gap = 0.0;
    cplx fredholm_det{1.0};
    int side = 1;
};

/// T(lambda +- i0) on supp W by two routes; throws ExceptionalEnergy when 1 + R0 W is singular.
inline TMatrix t_matrix(double r, double lambda, const Potential& W, int side = 1, const GreenOptions& opt = {}, double det_tol = 1e-10) {
    TMatrix out;
    out.side = side >= 0 ? 1 : -1;
    out.F = support_block(W);
    const auto n = static_cast<Eigen::Index>(out.F.sites.size());
    if (n == 0) {
        out.T = out.T2 = Eigen::MatrixXcd::Zero(0, 0);
        return out;
    }
    long diam = 0;
    for (long a : out.F.sites)
        for (long b : out.F.sites) diam = std::max(diam, std::abs(a - b));
    const GreenTable g = green_table(r, lambda, 0.0, diam, out.side, opt);
    Eigen::MatrixXcd G(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) G(i, j) = g(out.F.sites[static_cast<std::size_t>(i)] - out.F.sites[static_cast<std::size_t>(j)]);
    const Eigen::MatrixXcd Wd = out.F.values.cast<cplx>().asDiagonal();
    const Eigen::MatrixXcd K = Eigen::MatrixXcd::Identity(n, n) + G * Wd;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(K);
    out.fredholm_det = lu.determinant();
    if (std::abs(out.fredholm_det) < det_tol) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "t_matrix: exceptional energy lambda=%.17g (|det| = %.3g)", lambda, std::abs(out.fredholm_det));
        throw ExceptionalEnergy(buf);
    }
    out.T = Wd * lu.inverse();
    // second route: R_F = (G^{-1} + W)^{-1}, T = W - W R_F W
    const Eigen::MatrixXcd RF = (G.inverse() + Wd).inverse();
    out.T2 = Wd - Wd * RF * Wd;
    out.route_gap = (out.T - out.T2).cwiseAbs().maxCoeff();
    return out;
}

struct ScatteringRecord {
    double lambda = 0.0;
    ShellData shell;
    Eigen::MatrixXcd T_plus;
    Eigen::Matrix2cd S;       ///< rows/columns indexed by roots (+theta, -theta)
    double unitarity_residual = 0.0;
    double optical_residual = 0.0;
    double route_gap = 0.0;
    double reciprocity_residual = 0.0; ///< ||S_lead - S_lead^T||_max
    cplx detS{1.0};

    cplx transmission() const { return S(0, 0); }
    cplx reflection() const { return S(1, 0); }

    /// Lead basis: outgoing channel rows ordered (left, right), incoming columns ordered (from left, from right).
    Eigen::Matrix2cd lead_basis() const {
        Eigen::Matrix2cd L;
        L.row(0) = S.row(1);
        L.row(1) = S.row(0);
        return L;
    }
};

namespace detail {

/// Plane-wave traces e^{i theta_a n} on F for theta_a in {+theta, -theta}.
inline Eigen::MatrixXcd shell_trace(const std::vector<long>& sites, double theta) {
    Eigen::MatrixXcd E(2, static_cast<Eigen::Index>(sites.size()));
    for (std::size_t i = 0; i < sites.size(); ++i) {
        const double n = static_cast<double>(sites[i]);
        E(0, static_cast<Eigen::Index>(i)) = std::polar(1.0, theta * n);
        E(1, static_cast<Eigen::Index>(i)) = std::polar(1.0, -theta * n);
    }
    return E;
}

inline double max_abs(const Eigen::MatrixXcd& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

} // namespace detail

/// On-shell S(lambda) = 1 - 2 pi i Gamma0 T(lambda + i0) Gamma0^* with unitarity, optical and reciprocity residuals.
inline ScatteringRecord s_matrix(double r, double lambda, const Potential& W, const GreenOptions& opt = {}) {
    ScatteringRecord rec;
    rec.lambda = lambda;
    rec.shell = shell_data(r, lambda, opt);
    const TMatrix Tp = t_matrix(r, lambda, W, 1, opt);
    rec.T_plus = Tp.T;
    rec.route_gap = Tp.route_gap;
    rec.S = Eigen::Matrix2cd::Identity();
    if (Tp.T.size() > 0) {
        const Eigen::MatrixXcd E = detail::shell_trace(Tp.F.sites, rec.shell.theta);
        const double w2 = rec.shell.weight * rec.shell.weight;
        // S_ab = delta_ab - 2 pi i w^2 sum_{n,m} e^{-i theta_a n} T_nm e^{i theta_b m}
        rec.S -= cplx(0.0, 2.0 * std::numbers::pi * w2) * (E.conjugate() * Tp.T * E.transpose());
        // optical theorem: T(-) - T(+) = 2 pi i T(-) Gamma0^* Gamma0 T(+)
        const TMatrix Tm = t_matrix(r, lambda, W, -1, opt);
        const Eigen::MatrixXcd GG = w2 * (E.transpose() * E.conjugate());
        const Eigen::MatrixXcd rhs = cplx(0.0, 2.0 * std::numbers::pi) * Tm.T * GG * Tp.T;
        rec.optical_residual = detail::max_abs(Tm.T - Tp.T - rhs);
        rec.route_gap = std::max(rec.route_gap, Tm.route_gap);
    }
    rec.unitarity_residual = detail::max_abs(rec.S.adjoint() * rec.S - Eigen::Matrix2cd::Identity());
    const Eigen::Matrix2cd L = rec.lead_basis();
    rec.reciprocity_residual = detail::max_abs(L - L.transpose());
    rec.detS = rec.S.determinant();
    return rec;
}

/// Optical-theorem residual alone; `weight_scale` perturbs the shell weights for sensitivity probes.
inline double optical_residual(double r, double lambda, const Potential& W, double weight_scale = 1.0, const GreenOptions& opt = {}) {
    const ShellData sh = shell_data(r, lambda, opt);
    const TMatrix Tp = t_matrix(r, lambda, W, 1, opt), Tm = t_matrix(r, lambda, W, -1, opt);
    if (Tp.T.size() == 0) return 0.0;
    const Eigen::MatrixXcd E = detail::shell_trace(Tp.F.sites, sh.theta);
    const double w2 = std::pow(weight_scale * sh.weight, 2);
    const Eigen::MatrixXcd rhs = cplx(0.0, 2.0 * std::numbers::pi) * Tm.T * (w2 * (E.transpose() * E.conjugate())) * Tp.T;
    return detail::max_abs(Tm.T - Tp.T - rhs);
}

/// Spectral shift by eigenvalue counting on tori of size N with W embedded, xi = N_{H0} - N_H.
struct SsfCount {
    std::size_t N = 0;
    long count = 0;          ///< raw integer count at lambda
    double smoothed = 0.0;   ///< Gaussian-smoothed count, width 1/sqrt(N)
    bool collision = false;  ///< lambda within 1e-9 of an eigenvalue; counts at lambda +- 1e-6 reported
    long count_minus = 0;
    long count_plus = 0;
};

struct SsfReport {
    double lambda = 0.0;
    std::vector<SsfCount> sequence;
    long stabilized = 0; ///< mode of the raw count over the last three sizes
};

/// Eigenvalues of the free and perturbed torus, cached per size.
class TorusSpectra {
public:
    TorusSpectra(double r, Potential W) : r_(r), W_(std::move(W)) {}

    const std::pair<std::vector<double>, std::vector<double>>& get(std::size_t N) {
        auto it = cache_.find(N);
        if (it != cache_.end()) return it->second;
        const FrequencyGrid grid = r_ < 0 ? FrequencyGrid::HalfInteger : FrequencyGrid::Plain;
        const TorusModel T(FractionalOrder{r_}, N, grid);
        std::vector<double> e0 = T.eigenvalues();
        std::vector<double> e1;
        if (W_.is_zero()) e1 = e0;
        else {
            const auto s = eig_all(hamiltonian(T, W_), false, std::max<std::size_t>(N, 4096));
            e1.assign(s.values.data(), s.values.data() + s.values.size());
        }
        return cache_.emplace(N, std::make_pair(std::move(e0), std::move(e1))).first->second;
    }

private:
    double r_;
    Potential W_;
    std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> cache_;
};

namespace detail {

inline long count_le(const std::vector<double>& e, double x) {
    return static_cast<long>(std::upper_bound(e.begin(), e.end(), x) - e.begin());
}

inline double smoothed_count(const std::vector<double>& e, double x, double width) {
    double c = 0.0;
    for (double v : e) c += normal_cdf((x - v) / width);
    return c;
}

} // namespace detail

inline SsfReport ssf_counting(TorusSpectra& spectra, double lambda, const std::vector<std::size_t>& Ns) {
    require(!Ns.empty(), "ssf_counting: empty size grid");
    SsfReport rep;
    rep.lambda = lambda;
    for (std::size_t N : Ns) {
        const auto& [e0, e1] = spectra.get(N);
        SsfCount c;
        c.N = N;
        c.count = detail::count_le(e0, lambda) - detail::count_le(e1, lambda);
        const double width = 1.0 / std::sqrt(static_cast<double>(N));
        c.smoothed = detail::smoothed_count(e0, lambda, width) - detail::smoothed_count(e1, lambda, width);
        auto near = [lambda](const std::vector<double>& e) {
            const auto it = std::lower_bound(e.begin(), e.end(), lambda - 1e-9);
            return it != e.end() && *it <= lambda + 1e-9;
        };
        c.collision = near(e0) || near(e1);
        c.count_minus = detail::count_le(e0, lambda - 1e-6) - detail::count_le(e1, lambda - 1e-6);
        c.count_plus = detail::count_le(e0, lambda + 1e-6) - detail::count_le(e1, lambda + 1e-6);
        rep.sequence.push_back(c);
    }
    std::map<long, int> freq;
    const std::size_t start = rep.sequence.size() > 3 ? rep.sequence.size() - 3 : 0;
    for (std::size_t i = start; i < rep.sequence.size(); ++i) ++freq[rep.sequence[i].count];
    int best = -1;
    for (const auto& [v, k] : freq)
        if (k > best) {
            best = k;
            rep.stabilized = v;
        }
    return rep;
}

inline SsfReport ssf_counting(double r, double lambda, const Potential& W, const std::vector<std::size_t>& Ns) {
    TorusSpectra sp(r, W);
    return ssf_counting(sp, lambda, Ns);
}

/// Distance on the unit circle between det S(lambda) and exp(-2 pi i xi).
inline double birman_krein_residual(cplx detS, double xi) { return std::abs(detS - std::polar(1.0, -2.0 * std::numbers::pi * xi)); }

struct BkPoint {
    double lambda = 0.0;
    cplx detS{1.0};
    std::vector<std::size_t> N;
    std::vector<double> xi;       ///< smoothed counting value per N
    std::vector<double> residual; ///< circle-phase distance per N
};

inline BkPoint birman_krein(TorusSpectra& spectra, double r, double lambda, const Potential& W, const std::vector<std::size_t>& Ns,
                            const GreenOptions& opt = {}) {
    BkPoint p;
    p.lambda = lambda;
    p.detS = s_matrix(r, lambda, W, opt).detS;
    const auto ssf = ssf_counting(spectra, lambda, Ns);
    for (const auto& c : ssf.sequence) {
        p.N.push_back(c.N);
        p.xi.push_back(c.smoothed);
        p.residual.push_back(birman_krein_residual(p.detS, c.smoothed));
    }
    return p;
}

struct KreinTraceCheck {
    double trace = 0.0;    ///< Tr(phi(H) - phi(H0)) on the torus
    double integral = 0.0; ///< int phi'(lambda) xi(lambda) d lambda with xi from the unwrapped phase of det S
    double residual = 0.0;
    std::size_t exceptional = 0; ///< skipped grid energies
};

/// Krein trace formula with phi a bump on I: the integer ambiguity of xi drops out since int phi' = 0.
inline KreinTraceCheck krein_trace_check(double r, const Potential& W, const Window& I, std::size_t N, int points = 401, const GreenOptions& opt = {}) {
    require(points >= 3, "krein_trace_check: need at least three energies");
    require(threshold_set(FractionalOrder{r}).window_margin(I) > 0.0, "krein_trace_check: window must avoid thresholds");
    KreinTraceCheck k;
    TorusSpectra sp(r, W);
    const auto& [e0, e1] = sp.get(N);
    for (double e : e1) k.trace += window_bump(I, e);
    for (double e : e0) k.trace -= window_bump(I, e);
    // xi = -arg det S / (2 pi), unwrapped along the grid
    std::vector<double> lam, xi;
    double prev = 0.0, shift = 0.0;
    bool first = true;
    for (int i = 1; i < points - 1; ++i) {
        const double l = I.lo + I.width() * i / (points - 1);
        double ph;
        try {
            ph = std::arg(s_matrix(r, l, W, opt).detS);
        } catch (const ExceptionalEnergy&) {
            ++k.exceptional;
            continue;
        }
        if (!first) {
            while (ph + shift - prev > std::numbers::pi) shift -= 2.0 * std::numbers::pi;
            while (ph + shift - prev < -std::numbers::pi) shift += 2.0 * std::numbers::pi;
        }
        first = false;
        prev = ph + shift;
        lam.push_back(l);
        xi.push_back(-prev / (2.0 * std::numbers::pi));
    }
    // trapezoid of phi'(lambda) xi(lambda); phi' by central differences of the bump
    const double h = 1e-6 * I.width();
    for (std::size_t i = 0; i + 1 < lam.size(); ++i) {
        auto dphi = [&](double x) { return (window_bump(I, x + h) - window_bump(I, x - h)) / (2.0 * h); };
        k.integral += 0.5 * (lam[i + 1] - lam[i]) * (dphi(lam[i]) * xi[i] + dphi(lam[i + 1]) * xi[i + 1]);
    }
    k.residual = std::abs(k.trace - k.integral);
    return k;
}

} // namespace fraclap
