#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "fft.hpp"
#include "kernel.hpp"
#include "smooth.hpp"
#include "symbol.hpp"

namespace fraclap {

using Site = std::vector<long>;

/// Cartesian lattice window with n_j in [offset, offset + n - 1] per axis; axis 0 slowest.
struct LatticeGeometry {
    std::size_t d = 1;
    long n = 1;
    long offset = 0;

    std::size_t size() const {
        std::size_t s = 1;
        for (std::size_t j = 0; j < d; ++j) s *= static_cast<std::size_t>(n);
        return s;
    }

    Site site(std::size_t i) const {
        Site s(d);
        for (std::size_t j = d; j-- > 0;) {
            s[j] = static_cast<long>(i % static_cast<std::size_t>(n)) + offset;
            i /= static_cast<std::size_t>(n);
        }
        return s;
    }

    bool contains(const Site& s) const {
        if (s.size() != d) return false;
        for (long v : s)
            if (v < offset || v >= offset + n) return false;
        return true;
    }

    std::size_t index(const Site& s) const {
        std::size_t i = 0;
        for (std::size_t j = 0; j < d; ++j) i = i * static_cast<std::size_t>(n) + static_cast<std::size_t>(s[j] - offset);
        return i;
    }

    /// Lambda(n) = sum_j <n_j>.
    double Lambda(std::size_t i) const {
        double v = 0.0;
        for (long c : site(i)) v += bracket(static_cast<double>(c));
        return v;
    }

    /// max_j |n_j|.
    long radius(std::size_t i) const {
        long m = 0;
        for (long c : site(i)) m = std::max(m, c < 0 ? -c : c);
        return m;
    }

    /// <Lambda(n)>^{-s} for every site.
    Eigen::VectorXd weights(double s) const {
        Eigen::VectorXd w(static_cast<Eigen::Index>(size()));
        for (std::size_t i = 0; i < size(); ++i) w(static_cast<Eigen::Index>(i)) = std::pow(bracket(Lambda(i)), -s);
        return w;
    }

    /// Indicator of max_j |n_j| <= R.
    Eigen::VectorXd ball(double R) const {
        Eigen::VectorXd w(static_cast<Eigen::Index>(size()));
        for (std::size_t i = 0; i < size(); ++i) w(static_cast<Eigen::Index>(i)) = static_cast<double>(radius(i)) <= R ? 1.0 : 0.0;
        return w;
    }
};

/// Real on-site potential W(n).
struct Potential {
    std::size_t dim = 1;
    std::map<Site, double> values;
    double decl_C = 1.0;
    double decl_delta = 1.0;
    bool finite_support = true; ///< if false, values are samples on |n_j| <= window
    long window = 0;

    static Potential point(std::size_t d, double strength) {
        Potential W;
        W.dim = d;
        W.values[Site(d, 0)] = strength;
        return W;
    }

    /// Samples of f on the cube |n_j| <= window.
    static Potential sampled(std::size_t d, long window, const std::function<double(const Site&)>& f, double C, double delta) {
        Potential W;
        W.dim = d;
        W.finite_support = false;
        W.window = window;
        W.decl_C = C;
        W.decl_delta = delta;
        const LatticeGeometry g{d, 2 * window + 1, -window};
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Site s = g.site(i);
            const double v = f(s);
            if (v != 0.0) W.values[s] = v;
        }
        return W;
    }

    double at(const Site& s) const {
        const auto it = values.find(s);
        return it == values.end() ? 0.0 : it->second;
    }

    bool is_zero() const {
        for (const auto& [s, v] : values)
            if (v != 0.0) return false;
        return true;
    }

    long support_radius() const {
        long m = 0;
        for (const auto& [s, v] : values)
            if (v != 0.0)
                for (long c : s) m = std::max(m, c < 0 ? -c : c);
        return m;
    }
};

inline double Lambda_of(const Site& s) {
    double v = 0.0;
    for (long c : s) v += bracket(static_cast<double>(c));
    return v;
}

struct PotentialCertificate {
    bool H0 = false;
    bool H1 = false;
    Site worst_site;
    std::size_t worst_axis = 0;
    double worst_ratio = 0.0; ///< max |W(n+e_j)-W(n)| / (C Lambda^{-delta} <n_j>^{-1})
    double required_C = 0.0;  ///< smallest C that satisfies the difference bound on the checked pairs
};

/// Checks the difference bound at every checked site and axis, and decay of shell maxima.
inline PotentialCertificate validate_potential(const Potential& W) {
    PotentialCertificate cert;
    require(W.decl_delta > 0.0, "validate_potential: declared delta must be positive");
    auto check_pair = [&](const Site& n, std::size_t j) {
        Site m = n;
        ++m[j];
        const double diff = std::abs(W.at(m) - W.at(n));
        const double unit = std::pow(Lambda_of(n), -W.decl_delta) / bracket(static_cast<double>(n[j]));
        const double c_needed = diff / unit;
        cert.required_C = std::max(cert.required_C, c_needed);
        const double ratio = c_needed / W.decl_C;
        if (ratio > cert.worst_ratio) {
            cert.worst_ratio = ratio;
            cert.worst_site = n;
            cert.worst_axis = j;
        }
    };
    if (W.finite_support) {
        // every pair touching the support; finite support satisfies the bound for C = required_C
        const long R = W.support_radius() + 1;
        const LatticeGeometry g{W.dim, 2 * R + 1, -R};
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < W.dim; ++j) check_pair(g.site(i), j);
        cert.H0 = true;
        cert.H1 = true;
        return cert;
    }
    const LatticeGeometry g{W.dim, 2 * W.window + 1, -W.window};
    std::vector<double> shell(static_cast<std::size_t>(W.window) + 1, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Site n = g.site(i);
        shell[static_cast<std::size_t>(g.radius(i))] = std::max(shell[static_cast<std::size_t>(g.radius(i))], std::abs(W.at(n)));
        for (std::size_t j = 0; j < W.dim; ++j)
            if (n[j] < W.window) check_pair(n, j);
    }
    cert.H1 = cert.worst_ratio <= 1.0;
    const double gmax = *std::max_element(shell.begin(), shell.end());
    bool decreasing = true;
    for (std::size_t rho = static_cast<std::size_t>(W.window) / 2; rho + 1 < shell.size(); ++rho)
        decreasing = decreasing && shell[rho + 1] <= shell[rho] * (1.0 + 1e-14);
    cert.H0 = decreasing && shell.back() <= 0.05 * gmax;
    return cert;
}

enum class FrequencyGrid { Plain, HalfInteger };
enum class ZeroMode { Refuse, Project };

/// Fourier-diagonal realization of the operator on the torus (Z/NZ)^d.
class TorusModel {
public:
    TorusModel(FractionalOrder r, std::size_t N, FrequencyGrid grid = FrequencyGrid::Plain, ZeroMode zero = ZeroMode::Refuse)
        : r_(std::move(r)), N_(N), grid_(grid), zero_(zero), geom_{r_.dim(), static_cast<long>(N), -static_cast<long>(N / 2)} {
        require(N >= 4 && N % 2 == 0, "TorusModel: N must be even and at least 4");
        require(std::pow(static_cast<double>(N), static_cast<double>(r_.dim())) <= 1e8, "TorusModel: grid exceeds 1e8 points");
        const std::size_t n = geom_.size();
        eigs_.resize(n);
        polar_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t idx = i;
            double v = 0.0;
            bool pole = false;
            for (std::size_t j = r_.dim(); j-- > 0;) {
                const std::size_t k = idx % N;
                idx /= N;
                const double th = theta(k);
                if (r_[j] < 0 && grid_ == FrequencyGrid::Plain && k == 0) pole = true;
                else v += axis_symbol(r_[j], th);
            }
            polar_[i] = pole;
            eigs_[i] = pole ? 0.0 : v;
            has_polar_ = has_polar_ || pole;
        }
    }

    const FractionalOrder& order() const { return r_; }
    std::size_t N() const { return N_; }
    std::size_t dim() const { return r_.dim(); }
    std::size_t size() const { return eigs_.size(); }
    FrequencyGrid grid() const { return grid_; }
    const LatticeGeometry& geometry() const { return geom_; }

    double theta(std::size_t k) const {
        const double shift = grid_ == FrequencyGrid::HalfInteger ? 0.5 : 0.0;
        double t = 2.0 * std::numbers::pi * (static_cast<double>(k) + shift) / static_cast<double>(N_);
        if (t > std::numbers::pi) t -= 2.0 * std::numbers::pi;
        return t;
    }

    /// Symbol on the frequency grid, flat index with axis 0 slowest; polar modes hold 0 and are flagged.
    const std::vector<double>& symbol_values() const { return eigs_; }
    const std::vector<char>& polar_mask() const { return polar_; }
    bool has_polar_modes() const { return has_polar_; }

    bool applicable() const { return !has_polar_ || zero_ == ZeroMode::Project; }

    /// Finite eigenvalues in ascending order (polar modes excluded).
    std::vector<double> eigenvalues() const {
        std::vector<double> v;
        v.reserve(eigs_.size());
        for (std::size_t i = 0; i < eigs_.size(); ++i)
            if (!polar_[i]) v.push_back(eigs_[i]);
        std::sort(v.begin(), v.end());
        return v;
    }

    /// func(H) f by forward transform, multiplier, inverse transform.
    template <class F>
    std::vector<cplx> apply_function(const std::vector<cplx>& f, F&& func) const {
        ensure_applicable();
        require(f.size() == size(), "TorusModel: vector size mismatch");
        std::vector<cplx> x(f);
        twist(x, -1.0);
        fft_nd(x, N_, dim(), false);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = polar_[i] ? cplx(0.0) : x[i] * cplx(func(eigs_[i]));
        fft_nd(x, N_, dim(), true);
        twist(x, 1.0);
        return x;
    }

    std::vector<cplx> apply(const std::vector<cplx>& f) const {
        return apply_function(f, [](double l) { return l; });
    }

    /// Unitary transform to the eigenbasis (coefficients ordered like symbol_values()).
    std::vector<cplx> to_spectral(const std::vector<cplx>& f) const {
        ensure_applicable();
        std::vector<cplx> x(f);
        twist(x, -1.0);
        fft_nd(x, N_, dim(), false);
        const double s = 1.0 / std::sqrt(static_cast<double>(size()));
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = polar_[i] ? cplx(0.0) : x[i] * s;
        return x;
    }

    std::vector<cplx> from_spectral(const std::vector<cplx>& c) const {
        std::vector<cplx> x(c);
        fft_nd(x, N_, dim(), true);
        const double s = std::sqrt(static_cast<double>(size()));
        for (auto& v : x) v *= s;
        twist(x, 1.0);
        return x;
    }

    /// Position-space storage index of a lattice site (coordinates taken mod N).
    std::size_t site_index(const Site& s) const {
        require(s.size() == dim(), "TorusModel: site dimension mismatch");
        std::size_t i = 0;
        for (std::size_t j = 0; j < dim(); ++j) {
            long v = s[j] % static_cast<long>(N_);
            if (v < 0) v += static_cast<long>(N_);
            i = i * N_ + static_cast<std::size_t>(v);
        }
        return i;
    }

    /// Centered coordinates in [-N/2, N/2) of a storage index.
    Site site_of(std::size_t i) const {
        Site s(dim());
        for (std::size_t j = dim(); j-- > 0;) {
            long v = static_cast<long>(i % N_);
            i /= N_;
            if (v >= static_cast<long>(N_ / 2)) v -= static_cast<long>(N_);
            s[j] = v;
        }
        return s;
    }

    /// <Lambda(n)>^{-s} in storage order.
    Eigen::VectorXd weights(double s) const {
        Eigen::VectorXd w(static_cast<Eigen::Index>(size()));
        for (std::size_t i = 0; i < size(); ++i) w(static_cast<Eigen::Index>(i)) = std::pow(bracket(Lambda_of(site_of(i))), -s);
        return w;
    }

    /// Dense real symmetric matrix of the operator in position space.
    Eigen::MatrixXd dense(std::size_t cap = 4096) const {
        ensure_applicable();
        require(size() <= cap, "TorusModel: dense size exceeds cap");
        const std::size_t n = size();
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < dim(); ++j) {
            const Eigen::MatrixXd K = axis_matrix(j);
            std::size_t stride = 1;
            for (std::size_t q = j + 1; q < dim(); ++q) stride *= N_;
            for (std::size_t a = 0; a < n; ++a) {
                const std::size_t aj = (a / stride) % N_;
                for (std::size_t t = 0; t < N_; ++t) {
                    const std::size_t b = a + t * stride - aj * stride;
                    M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += K(static_cast<Eigen::Index>(aj), static_cast<Eigen::Index>(t));
                }
            }
        }
        return M;
    }

private:
    void ensure_applicable() const {
        if (!applicable())
            throw InvalidArgument("TorusModel: negative order on the plain grid has a polar zero mode; select the half-integer grid or zero-mode projection");
    }

    // multiplying by e^{-i pi n / N} per axis maps the half-integer grid onto the plain FFT grid
    void twist(std::vector<cplx>& x, double sign) const {
        if (grid_ != FrequencyGrid::HalfInteger) return;
        std::vector<cplx> ph(N_);
        for (std::size_t k = 0; k < N_; ++k) ph[k] = std::polar(1.0, sign * std::numbers::pi * static_cast<double>(k) / static_cast<double>(N_));
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::size_t idx = i;
            cplx f(1.0);
            for (std::size_t j = 0; j < dim(); ++j) {
                f *= ph[idx % N_];
                idx /= N_;
            }
            x[i] *= f;
        }
    }

    // 1-D matrix of axis j: H(n,m) = (1/N) sum_k sym(theta_k) e^{i theta_k (n-m)}
    Eigen::MatrixXd axis_matrix(std::size_t j) const {
        const long N = static_cast<long>(N_);
        std::vector<double> c(static_cast<std::size_t>(2 * N - 1), 0.0);
        for (long lag = -(N - 1); lag <= N - 1; ++lag) {
            double acc = 0.0;
            for (std::size_t k = 0; k < N_; ++k) {
                if (r_[j] < 0 && grid_ == FrequencyGrid::Plain && k == 0) continue;
                const double th = theta(k);
                acc += axis_symbol(r_[j], th) * std::cos(th * static_cast<double>(lag));
            }
            c[static_cast<std::size_t>(lag + N - 1)] = acc / static_cast<double>(N);
        }
        Eigen::MatrixXd K(N, N);
        for (long a = 0; a < N; ++a)
            for (long b = 0; b < N; ++b) K(a, b) = c[static_cast<std::size_t>(a - b + N - 1)];
        return K;
    }

    FractionalOrder r_;
    std::size_t N_;
    FrequencyGrid grid_;
    ZeroMode zero_;
    LatticeGeometry geom_;
    std::vector<double> eigs_;
    std::vector<char> polar_;
    bool has_polar_ = false;
};

inline TorusModel build_torus(const FractionalOrder& r, std::size_t N, FrequencyGrid grid = FrequencyGrid::Plain,
                              ZeroMode zero = ZeroMode::Refuse) {
    return TorusModel(r, N, grid, zero);
}

/// Torus operator plus an on-site potential (potential sites taken mod N).
struct SpectralFill {
    double hausdorff = 0.0;    ///< Hausdorff distance between the torus eigenvalues and the spectral interval
    double grid_modulus = 0.0; ///< largest symbol jump between grid neighbours
};

/// How densely the torus eigenvalues fill the (finite) spectral interval.
inline SpectralFill spectral_fill(const TorusModel& T) {
    const auto rep = spectrum_interval(T.order());
    require(rep.total.hi.is_finite(), "spectral_fill: spectrum must be bounded");
    const auto e = T.eigenvalues();
    SpectralFill f;
    f.hausdorff = std::max(e.front() - rep.total.lo, rep.total.hi.value() - e.back());
    for (std::size_t i = 1; i < e.size(); ++i) f.hausdorff = std::max(f.hausdorff, 0.5 * (e[i] - e[i - 1]));
    const std::size_t N = T.N(), d = T.dim();
    const auto& v = T.symbol_values();
    std::size_t stride = 1;
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::size_t k = (i / stride) % N;
            const std::size_t nb = k + 1 < N ? i + stride : i - (N - 1) * stride;
            f.grid_modulus = std::max(f.grid_modulus, std::abs(v[nb] - v[i]));
        }
        stride *= N;
    }
    return f;
}

class PerturbedTorus {
public:
    PerturbedTorus(TorusModel base, const Potential& W) : base_(std::move(base)), W_(W), diag_(base_.size(), 0.0) {
        require(W.dim == base_.dim(), "hamiltonian: potential dimension mismatch");
        require(2 * W.support_radius() < static_cast<long>(base_.N()), "hamiltonian: potential support overflows the torus");
        for (const auto& [s, v] : W.values) diag_[base_.site_index(s)] += v;
    }

    const TorusModel& base() const { return base_; }
    const Potential& potential() const { return W_; }
    std::size_t size() const { return base_.size(); }
    const std::vector<double>& diagonal() const { return diag_; }

    std::vector<cplx> apply(const std::vector<cplx>& f) const {
        auto y = base_.apply(f);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += diag_[i] * f[i];
        return y;
    }

    Eigen::MatrixXd dense(std::size_t cap = 4096) const {
        Eigen::MatrixXd M = base_.dense(cap);
        for (std::size_t i = 0; i < diag_.size(); ++i) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += diag_[i];
        return M;
    }

private:
    TorusModel base_;
    Potential W_;
    std::vector<double> diag_;
};

inline PerturbedTorus hamiltonian(const TorusModel& model, const Potential& W) { return PerturbedTorus(model, W); }

enum class BoxConstruction {
    Kernel,    ///< compression of the convolution kernel to the box
    Dirichlet, ///< functional calculus of the Dirichlet Laplacian on the box
};

/// Dense realization on the box |n_j| <= L.
struct BoxModel {
    FractionalOrder r{1.0};
    long L = 0;
    LatticeGeometry geometry;
    Eigen::MatrixXd matrix;
    std::vector<double> tail_bound; ///< per axis, sum_{|k|>2L} |a_r(k)| (0 for Dirichlet axes)
    std::vector<BoxConstruction> construction;
    Potential potential;

    std::size_t size() const { return geometry.size(); }
    std::size_t dim() const { return geometry.d; }

    double max_tail_bound() const {
        double m = 0.0;
        for (double t : tail_bound) m = std::max(m, t);
        return m;
    }
};

struct BoxOptions {
    std::size_t cap = 4096;
    QuadSpec quad{};
    bool dirichlet_all = false; ///< use the Dirichlet construction on every axis
};

namespace detail {

/// (2L+1)x(2L+1) Dirichlet-calculus matrix (P Delta P)^r.
inline Eigen::MatrixXd dirichlet_axis(double r, long L) {
    const long n = 2 * L + 1;
    Eigen::MatrixXd V(n, n);
    Eigen::VectorXd lam(n);
    const double h = std::numbers::pi / static_cast<double>(n + 1);
    const double nrm = std::sqrt(2.0 / static_cast<double>(n + 1));
    for (long k = 1; k <= n; ++k) {
        lam(k - 1) = axis_symbol(r, h * static_cast<double>(k));
        for (long i = 1; i <= n; ++i) V(i - 1, k - 1) = nrm * std::sin(h * static_cast<double>(k * i));
    }
    return V * lam.asDiagonal() * V.transpose();
}

inline Eigen::MatrixXd kernel_axis(const KernelTable& t, long L) {
    const long n = 2 * L + 1;
    Eigen::MatrixXd K(n, n);
    for (long a = 0; a < n; ++a)
        for (long b = 0; b < n; ++b) K(a, b) = t(a - b);
    return K;
}

/// Kronecker sum of per-axis matrices (axis 0 slowest).
inline Eigen::MatrixXd kronecker_sum(const std::vector<Eigen::MatrixXd>& axes, std::size_t n) {
    const std::size_t d = axes.size();
    std::size_t size = 1;
    for (std::size_t j = 0; j < d; ++j) size *= n;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
    for (std::size_t j = 0; j < d; ++j) {
        std::size_t stride = 1;
        for (std::size_t q = j + 1; q < d; ++q) stride *= n;
        for (std::size_t a = 0; a < size; ++a) {
            const std::size_t aj = (a / stride) % n;
            for (std::size_t t = 0; t < n; ++t) {
                const std::size_t b = a + t * stride - aj * stride;
                M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += axes[j](static_cast<Eigen::Index>(aj), static_cast<Eigen::Index>(t));
            }
        }
    }
    return M;
}

inline void symmetrize(Eigen::MatrixXd& M) {
    const Eigen::MatrixXd T = 0.5 * (M + M.transpose());
    M = T;
}

} // namespace detail

/// Box model by kernel compression from per-axis tables (one per axis, K >= 2L).
inline BoxModel build_box(const FractionalOrder& r, long L, const std::vector<KernelTable>& tables, std::size_t cap = 4096) {
    require(L >= 1, "build_box: L must be positive");
    require(tables.size() == r.dim(), "build_box: need one kernel table per axis");
    BoxModel box;
    box.r = r;
    box.L = L;
    box.geometry = {r.dim(), 2 * L + 1, -L};
    require(box.size() <= cap, "build_box: box size exceeds the dense cap");
    std::vector<Eigen::MatrixXd> axes;
    for (std::size_t j = 0; j < r.dim(); ++j) {
        const auto& t = tables[j];
        require(t.r == r[j], "build_box: kernel table order does not match r");
        if (t.K < 2 * L) throw InvalidArgument("build_box: kernel table range K=" + std::to_string(t.K) + " is below 2L=" + std::to_string(2 * L));
        axes.push_back(detail::kernel_axis(t, L));
        KernelTable at2L = t;
        at2L.K = 2 * L;
        at2L.coeffs.resize(static_cast<std::size_t>(2 * L) + 1);
        at2L.error.resize(static_cast<std::size_t>(2 * L) + 1);
        const auto tb = tail_abs_sum(at2L);
        box.tail_bound.push_back(tb.is_finite() ? tb.value() : std::numeric_limits<double>::infinity());
        box.construction.push_back(BoxConstruction::Kernel);
    }
    box.matrix = detail::kronecker_sum(axes, static_cast<std::size_t>(2 * L + 1));
    detail::symmetrize(box.matrix);
    box.potential.dim = r.dim();
    return box;
}

/// Box model with tables built on demand; axes with r_j <= -1/2 use the Dirichlet construction.
inline BoxModel build_box(const FractionalOrder& r, long L, const BoxOptions& opt = {}) {
    require(L >= 1, "build_box: L must be positive");
    BoxModel box;
    box.r = r;
    box.L = L;
    box.geometry = {r.dim(), 2 * L + 1, -L};
    require(box.size() <= opt.cap, "build_box: box size exceeds the dense cap");
    std::vector<Eigen::MatrixXd> axes;
    for (std::size_t j = 0; j < r.dim(); ++j) {
        if (opt.dirichlet_all || r[j] <= -0.5) {
            axes.push_back(detail::dirichlet_axis(r[j], L));
            box.tail_bound.push_back(0.0);
            box.construction.push_back(BoxConstruction::Dirichlet);
        } else {
            const auto t = kernel_table(r[j], 2 * L, opt.quad);
            axes.push_back(detail::kernel_axis(t, L));
            const auto tb = tail_abs_sum(t);
            box.tail_bound.push_back(tb.is_finite() ? tb.value() : std::numeric_limits<double>::infinity());
            box.construction.push_back(BoxConstruction::Kernel);
        }
    }
    box.matrix = detail::kronecker_sum(axes, static_cast<std::size_t>(2 * L + 1));
    detail::symmetrize(box.matrix);
    box.potential.dim = r.dim();
    return box;
}

/// H = H0 + W on the box.
inline BoxModel hamiltonian(const BoxModel& box, const Potential& W) {
    require(W.dim == box.dim(), "hamiltonian: potential dimension mismatch");
    BoxModel H = box;
    for (const auto& [s, v] : W.values) {
        if (v == 0.0) continue;
        if (!box.geometry.contains(s)) throw InvalidArgument("hamiltonian: potential support overflows the box");
        const auto i = static_cast<Eigen::Index>(box.geometry.index(s));
        H.matrix(i, i) += v;
    }
    H.potential = W;
    return H;
}

/// Eigenvalues (ascending) and optionally eigenvectors of a symmetric matrix.
struct Spectrum {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    double max_residual = 0.0; ///< max ||H v - lambda v|| / ||H|| when vectors were computed

    bool has_vectors() const { return vectors.size() > 0; }
    Eigen::Index size() const { return values.size(); }

    /// f(H) x via the eigendecomposition.
    template <class F>
    Eigen::VectorXcd apply_function(const Eigen::VectorXcd& x, F&& f) const {
        require(has_vectors(), "Spectrum: eigenvectors not available");
        Eigen::VectorXcd c = vectors.transpose() * x;
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= f(values(i));
        return vectors * c;
    }
};

inline Spectrum eig_all(const Eigen::MatrixXd& M, bool vectors = true, std::size_t cap = 4096, bool check_residual = true) {
    if (static_cast<std::size_t>(M.rows()) > cap)
        throw ComputeError("eig_all: matrix size " + std::to_string(M.rows()) + " exceeds the cap " + std::to_string(cap));
    Spectrum s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ComputeError("eig_all: eigensolver did not converge");
    s.values = es.eigenvalues();
    if (vectors) {
        s.vectors = es.eigenvectors();
        if (check_residual) {
            const double nrm = std::max(std::abs(s.values(0)), std::abs(s.values(s.values.size() - 1)));
            const Eigen::MatrixXd R = M * s.vectors - s.vectors * s.values.asDiagonal();
            s.max_residual = R.colwise().norm().maxCoeff() / std::max(nrm, 1e-300);
            if (s.max_residual > 1e-10) throw ComputeError("eig_all: eigenpair residual above 1e-10 ||H||");
        }
    }
    return s;
}

inline Spectrum eig_all(const BoxModel& box, bool vectors = true, std::size_t cap = 4096, bool check_residual = true) {
    return eig_all(box.matrix, vectors, cap, check_residual);
}

inline Spectrum eig_all(const TorusModel& torus) {
    Spectrum s;
    const auto v = torus.eigenvalues();
    s.values = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    return s;
}

inline Spectrum eig_all(const PerturbedTorus& H, bool vectors = false, std::size_t cap = 4096) {
    return eig_all(H.dense(cap), vectors, cap, vectors);
}

/// Spectrum of a box; 1-D boxes equal to (P Delta P)^r use the exact sine eigenpairs.
inline Spectrum box_spectrum(const BoxModel& box, std::size_t cap = 4096) {
    const bool dirichlet = box.dim() == 1 && box.potential.is_zero() &&
                           (box.construction[0] == BoxConstruction::Dirichlet || box.r[0] == 1.0);
    if (!dirichlet) return eig_all(box, true, cap, false);
    const long n = 2 * box.L + 1;
    const double h = std::numbers::pi / static_cast<double>(n + 1);
    const double nrm = std::sqrt(2.0 / static_cast<double>(n + 1));
    std::vector<std::pair<double, long>> order;
    for (long k = 1; k <= n; ++k) order.emplace_back(axis_symbol(box.r[0], h * static_cast<double>(k)), k);
    std::sort(order.begin(), order.end());
    Spectrum s;
    s.values.resize(n);
    s.vectors.resize(n, n);
    for (long c = 0; c < n; ++c) {
        s.values(c) = order[static_cast<std::size_t>(c)].first;
        const long k = order[static_cast<std::size_t>(c)].second;
        for (long i = 1; i <= n; ++i) s.vectors(i - 1, c) = nrm * std::sin(h * static_cast<double>(k * i));
    }
    return s;
}

/// Mass of each eigenvector inside max_j |n_j| <= R.
inline Eigen::VectorXd bulk_mass(const Spectrum& s, const LatticeGeometry& g, double R) {
    const Eigen::VectorXd ball = g.ball(R);
    return (s.vectors.array().square().colwise() * ball.array()).colwise().sum().transpose();
}

struct EmbeddedCount {
    long L = 0;
    std::size_t in_window = 0; ///< all box eigenvalues in I
    std::size_t persistent = 0; ///< eigenvalues in I with localized eigenvectors
};

/// Eigenvalues of the box H in I whose eigenvectors keep mass >= 1 - tol inside |n| <= L/2, per L.
inline std::vector<EmbeddedCount> embedded_eigenvalue_count(const FractionalOrder& r, const Potential& W, const std::vector<long>& Ls,
                                                            const Window& I, double tol = 1e-6, const BoxOptions& opt = {}) {
    require(threshold_set(r).window_margin(I) > 0.0, "embedded_eigenvalue_count: window must have positive threshold margin");
    std::vector<EmbeddedCount> out;
    for (long L : Ls) {
        const auto H = hamiltonian(build_box(r, L, opt), W);
        const auto s = eig_all(H, true, opt.cap, false);
        const auto mass = bulk_mass(s, H.geometry, 0.5 * static_cast<double>(L));
        EmbeddedCount c;
        c.L = L;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (!I.contains(s.values(i))) continue;
            ++c.in_window;
            if (mass(i) >= 1.0 - tol) ++c.persistent;
        }
        out.push_back(c);
    }
    return out;
}

} // namespace fraclap
