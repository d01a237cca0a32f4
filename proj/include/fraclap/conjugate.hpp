#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "model.hpp"
#include "smooth.hpp"
#include "symbol.hpp"

namespace fraclap {

/// Discrete dilation generator A on a box, stored as the real antisymmetric G = iA.
/// Per axis G_j = sign(r_j) ((Q_j + 1/2) U_j^* - U_j (Q_j + 1/2)) / 2, with (U f)(n) = f(n - 1),
/// which gives [Delta, G] = Delta (4 - Delta) / 2 for a positive order.
struct ConjugateOperator {
    std::vector<int> signs;
    LatticeGeometry geometry;
    Eigen::MatrixXd generator;

    /// The Hermitian matrix A = -i G.
    Eigen::MatrixXcd hermitian() const { return std::complex<double>(0.0, -1.0) * generator.cast<std::complex<double>>(); }

    Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const { return std::complex<double>(0.0, -1.0) * (generator * x); }
};

inline ConjugateOperator build_conjugate(const FractionalOrder& r, const LatticeGeometry& g) {
    require(r.dim() == g.d, "build_conjugate: dimension mismatch");
    ConjugateOperator A;
    A.geometry = g;
    const auto n = static_cast<Eigen::Index>(g.size());
    A.generator = Eigen::MatrixXd::Zero(n, n);
    std::size_t stride = 1;
    for (std::size_t j = g.d; j-- > 0;) {
        const int s = r[j] > 0 ? 1 : (r[j] < 0 ? -1 : 0);
        A.signs.insert(A.signs.begin(), s);
        if (s != 0) {
            for (std::size_t a = 0; a < g.size(); ++a) {
                const long nj = static_cast<long>((a / stride) % static_cast<std::size_t>(g.n)) + g.offset;
                if (nj + 1 < g.offset + g.n) {
                    const auto i = static_cast<Eigen::Index>(a), k = static_cast<Eigen::Index>(a + stride);
                    const double v = 0.5 * s * (static_cast<double>(nj) + 0.5);
                    A.generator(i, k) += v;
                    A.generator(k, i) -= v;
                }
            }
        }
        stride *= static_cast<std::size_t>(g.n);
    }
    return A;
}

inline ConjugateOperator build_conjugate(const BoxModel& box) { return build_conjugate(box.r, box.geometry); }

/// <f, [B, iA] g> = <B f, G g> + <G f, B g> for Hermitian B.
inline std::complex<double> commutator_form(const Eigen::MatrixXd& B, const ConjugateOperator& A, const Eigen::VectorXcd& f,
                                            const Eigen::VectorXcd& g) {
    const Eigen::VectorXcd Bf = B * f, Bg = B * g, Gf = A.generator * f, Gg = A.generator * g;
    return Bf.dot(Gg) + Gf.dot(Bg);
}

/// [B, G] as an explicit matrix product.
inline Eigen::MatrixXd commutator(const Eigen::MatrixXd& B, const Eigen::MatrixXd& G) {
    Eigen::MatrixXd C = B * G;
    C -= G * B;
    return C;
}

/// Base commutator p(x) = x (4 - x) / 2 of the 1-D Laplacian energy x = lambda^{1/r}.
inline double base_commutator(double x) { return 0.5 * x * (4.0 - x); }

/// Predicted first commutator |r| (4 - x) x^r / 2 at H-energy mu = x^r.
inline double tau1(double r, double mu) {
    const double x = std::pow(mu, 1.0 / r);
    return 0.5 * std::abs(r) * (4.0 - x) * mu;
}

/// Predicted double commutator r(r-1) x^r (4-x)^2 / 4 + r x^r (4-x)(2-x) / 2 at mu = x^r.
inline double tau2(double r, double mu) {
    const double x = std::pow(mu, 1.0 / r);
    return r * (r - 1.0) * mu * (4.0 - x) * (4.0 - x) / 4.0 + r * mu * (4.0 - x) * (2.0 - x) / 2.0;
}

/// min of tau1 over the window intersected with the band.
inline double predicted_mourre_constant(double r, const Window& I, int samples = 2001) {
    const auto band = axis_spectrum(r);
    const double lo = std::max(I.lo, band.lo);
    const double hi = band.hi.is_finite() ? std::min(I.hi, band.hi.value()) : I.hi;
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double mu = lo + (hi - lo) * i / (samples - 1);
        if (mu <= 0.0) {
            m = std::min(m, 0.0);
            continue;
        }
        m = std::min(m, tau1(r, mu));
    }
    return m;
}

struct LocalizationOptions {
    double taper = 0.25;         ///< relative taper width of the smooth window
    double seed_fraction = 0.25; ///< seed sites |n_j| <= seed_fraction * L
    long seed_radius = -1;       ///< absolute seed radius; overrides seed_fraction when >= 0
    double bulk_fraction = 0.5;  ///< bulk region |n_j| <= bulk_fraction * L
    double min_singular = 0.5;
    double bulk_tol = 1e-6;
};

/// Orthonormal vectors spectrally supported in I and concentrated in the bulk.
struct LocalizedBasis {
    Eigen::MatrixXd U;
    std::size_t candidates = 0;
    std::size_t discarded = 0;
    double boundary_mass = 0.0; ///< max mass outside the bulk over kept vectors
    bool filter_bypassed = false; ///< no candidate met the bulk tolerance; all candidates kept
};

/// Left singular vectors (sigma >= min_singular) of phi_I(H) chi_seed, filtered by bulk mass.
inline LocalizedBasis localized_basis(const Spectrum& s, const LatticeGeometry& g, long L, const Window& I, const LocalizationOptions& opt = {}) {
    require(s.has_vectors(), "localized_basis: eigenvectors required");
    const double seed_limit = opt.seed_radius >= 0 ? static_cast<double>(opt.seed_radius) : opt.seed_fraction * static_cast<double>(L);
    std::vector<Eigen::Index> seed;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (static_cast<double>(g.radius(i)) <= seed_limit) seed.push_back(static_cast<Eigen::Index>(i));
    std::vector<Eigen::Index> active;
    Eigen::VectorXd phi(s.size());
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        phi(k) = window_plateau(I, s.values(k), opt.taper);
        if (phi(k) > 0.0) active.push_back(k);
    }
    LocalizedBasis out;
    const auto n = static_cast<Eigen::Index>(g.size());
    if (active.empty()) {
        out.U.resize(n, 0);
        return out;
    }
    Eigen::MatrixXd Va(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t c = 0; c < active.size(); ++c) Va.col(static_cast<Eigen::Index>(c)) = s.vectors.col(active[c]) * phi(active[c]);
    Eigen::MatrixXd Vs(static_cast<Eigen::Index>(seed.size()), static_cast<Eigen::Index>(active.size()));
    for (std::size_t rr = 0; rr < seed.size(); ++rr)
        for (std::size_t c = 0; c < active.size(); ++c) Vs(static_cast<Eigen::Index>(rr), static_cast<Eigen::Index>(c)) = s.vectors(seed[rr], active[c]);
    const Eigen::MatrixXd Phi = Va * Vs.transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Phi, Eigen::ComputeThinU);
    const Eigen::VectorXd ball = g.ball(opt.bulk_fraction * static_cast<double>(L));
    std::vector<Eigen::Index> keep, all;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
        if (svd.singularValues()(k) < opt.min_singular) continue;
        ++out.candidates;
        all.push_back(k);
        const double outside = std::max(0.0, 1.0 - (svd.matrixU().col(k).array().square() * ball.array()).sum());
        worst = std::max(worst, outside);
        if (outside > opt.bulk_tol) {
            ++out.discarded;
            continue;
        }
        out.boundary_mass = std::max(out.boundary_mass, outside);
        keep.push_back(k);
    }
    if (keep.empty() && !all.empty()) {
        // edge-contaminated compression: report it rather than fail
        keep = all;
        out.filter_bypassed = true;
        out.boundary_mass = worst;
    }
    out.U.resize(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) out.U.col(static_cast<Eigen::Index>(c)) = svd.matrixU().col(keep[c]);
    return out;
}

struct CommutatorReport {
    Window I;
    long L = 0;
    double identity_residual = 0.0;
    double mourre_constant = std::numeric_limits<double>::quiet_NaN();
    double predicted_constant = std::numeric_limits<double>::quiet_NaN();
    double boundary_mass = 0.0;
    double roundoff_floor = 0.0; ///< residuals below this are at machine precision
    double tolerance = 0.0;
    double threshold_margin = 0.0;
    std::size_t kept = 0;
    std::size_t discarded = 0;
    std::size_t defect_rank = 0;
    double defect_norm = 0.0;
    bool edge_contaminated = false;

    bool converged() const { return identity_residual <= roundoff_floor; }
};

struct CommutatorOptions {
    LocalizationOptions localization{};
    double tol_constant = 10.0; ///< tol(L) = C (tail_bound + bulk cutoff)
    double floor_constant = 10.0; ///< multiplier on the rounding estimate
};

namespace detail {

inline double sym_norm(const Eigen::MatrixXd& M) {
    if (M.rows() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(M.rows() - 1)));
}

inline void check_scalar_window(const BoxModel& box, const Window& I) {
    require(box.dim() == 1, "commutator residuals are defined for d = 1 boxes");
    const double margin = threshold_set(box.r).window_margin(I);
    const auto band = axis_spectrum(box.r[0]);
    const bool inside = I.lo > band.lo && (band.hi.is_infinite() || I.hi < band.hi.value());
    if (!(margin > 0.0) || !inside) throw ThresholdGuardError("commutator residual: window must lie strictly inside the band, away from thresholds");
}

/// Compressed k-fold commutator U^T [..[H, G], .., G] U by full matrix products.
inline Eigen::MatrixXd compressed_commutator_full(const Eigen::MatrixXd& H, const Eigen::MatrixXd& G, const Eigen::MatrixXd& U, int order) {
    Eigen::MatrixXd C = H;
    for (int i = 0; i < order; ++i) C = commutator(C, G);
    return U.transpose() * (C * U);
}

/// Same quantity by block products on U only (different rounding).
inline Eigen::MatrixXd compressed_commutator_blocks(const Eigen::MatrixXd& H, const Eigen::MatrixXd& G, const Eigen::MatrixXd& U, int order) {
    // expand [..[H,G],..,G] = sum_k (-1)^k C(order,k) G^k H G^{order-k}
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(U.cols(), U.cols());
    std::vector<Eigen::MatrixXd> GU{U}, GtU{U};
    for (int i = 0; i < order; ++i) {
        GU.push_back(G * GU.back());
        GtU.push_back(-(G * GtU.back()));
    }
    double binom = 1.0;
    for (int k = 0; k <= order; ++k) {
        const double sgn = (k % 2) ? -1.0 : 1.0;
        // U^T G^k H G^{order-k} U = ((G^T)^k U)^T H (G^{order-k} U)
        out += sgn * binom * (GtU[k].transpose() * (H * GU[order - k]));
        binom = binom * (order - k) / (k + 1);
    }
    return out;
}

template <class Target>
CommutatorReport residual_report(const BoxModel& box, const Window& I, int order, Target&& target, const CommutatorOptions& opt) {
    CommutatorReport rep;
    rep.I = I;
    rep.L = box.L;
    rep.threshold_margin = threshold_set(box.r).window_margin(I);
    const auto A = build_conjugate(box);
    const auto s = box_spectrum(box);
    const auto basis = localized_basis(s, box.geometry, box.L, I, opt.localization);
    if (basis.U.cols() == 0) throw ComputeError("commutator residual: no spectral vectors in the window");
    rep.kept = static_cast<std::size_t>(basis.U.cols());
    rep.discarded = basis.discarded;
    rep.boundary_mass = basis.boundary_mass;
    rep.edge_contaminated = basis.filter_bypassed || basis.boundary_mass > opt.localization.bulk_tol;
    const Eigen::MatrixXd coeff = s.vectors.transpose() * basis.U;
    Eigen::VectorXd tv(s.size());
    for (Eigen::Index k = 0; k < s.size(); ++k) tv(k) = target(s.values(k));
    const Eigen::MatrixXd T = coeff.transpose() * (tv.asDiagonal() * coeff);
    const Eigen::MatrixXd Ca = compressed_commutator_full(box.matrix, A.generator, basis.U, order);
    const Eigen::MatrixXd Cb = compressed_commutator_blocks(box.matrix, A.generator, basis.U, order);
    rep.identity_residual = sym_norm(Ca - T);
    // rounding estimate from two product orderings, plus the target's own rounding
    rep.roundoff_floor = opt.floor_constant * (sym_norm(Ca - Cb) + 64.0 * std::numeric_limits<double>::epsilon() * sym_norm(T));
    rep.tolerance = opt.tol_constant * (box.max_tail_bound() + opt.localization.bulk_tol);
    return rep;
}

} // namespace detail

/// Operator-norm residual of the compressed [H, iA] against tau1(H) on localized vectors in I (d = 1, W = 0).
inline CommutatorReport first_commutator_residual(const BoxModel& box, const Window& I, const CommutatorOptions& opt = {}) {
    detail::check_scalar_window(box, I);
    const double r = box.r[0];
    return detail::residual_report(box, I, 1, [r](double mu) { return tau1(r, mu); }, opt);
}

/// Operator-norm residual of the compressed [[H, iA], iA] against tau2(H) (d = 1, W = 0).
inline CommutatorReport second_commutator_residual(const BoxModel& box, const Window& I, const CommutatorOptions& opt = {}) {
    detail::check_scalar_window(box, I);
    const double r = box.r[0];
    return detail::residual_report(box, I, 2, [r](double mu) { return tau2(r, mu); }, opt);
}

/// Smallest eigenvalue of the compression of i[H, A] to localized spectral vectors of H in I.
inline CommutatorReport mourre_constant(const BoxModel& H, const Window& I, const CommutatorOptions& opt = {}) {
    CommutatorReport rep;
    rep.I = I;
    rep.L = H.L;
    rep.threshold_margin = threshold_set(H.r).window_margin(I);
    const auto A = build_conjugate(H);
    const Eigen::MatrixXd C = commutator(H.matrix, A.generator);
    const auto s = box_spectrum(H);
    const auto basis = localized_basis(s, H.geometry, H.L, I, opt.localization);
    if (basis.U.cols() == 0) throw ComputeError("mourre_constant: no spectral vectors in the window");
    rep.kept = static_cast<std::size_t>(basis.U.cols());
    rep.discarded = basis.discarded;
    rep.boundary_mass = basis.boundary_mass;
    rep.edge_contaminated = basis.filter_bypassed || basis.boundary_mass > opt.localization.bulk_tol;
    const Eigen::MatrixXd M = basis.U.transpose() * C * basis.U;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    rep.mourre_constant = es.eigenvalues()(0);
    rep.tolerance = opt.tol_constant * (H.max_tail_bound() + opt.localization.bulk_tol);
    if (H.dim() == 1) {
        rep.predicted_constant = predicted_mourre_constant(H.r[0], I);
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
            if (es.eigenvalues()(k) < rep.predicted_constant - rep.tolerance) ++rep.defect_rank;
        rep.defect_norm = std::max(0.0, rep.predicted_constant - rep.tolerance - rep.mourre_constant);
    }
    return rep;
}

} // namespace fraclap
