#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "quadrature.hpp"
#include "symbol.hpp"

namespace fraclap {

/// Quadrature settings for kernel coefficients.
struct QuadSpec {
    int gauss_nodes = 20;    ///< Gauss-Legendre nodes per regular panel
    int jacobi_nodes = 30;   ///< nodes of the power-weighted rule on the singular cell
    double max_phase = 6.0;  ///< max of K * panel width
    int min_panels = 8;
    int coarse_drop = 6;     ///< the error estimate uses rules with this many fewer nodes

    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t v) {
            for (int i = 0; i < 8; ++i) {
                h ^= (v >> (8 * i)) & 0xff;
                h *= 1099511628211ull;
            }
        };
        mix(static_cast<std::uint64_t>(gauss_nodes));
        mix(static_cast<std::uint64_t>(jacobi_nodes));
        mix(std::bit_cast<std::uint64_t>(max_phase));
        mix(static_cast<std::uint64_t>(min_panels));
        mix(static_cast<std::uint64_t>(coarse_drop));
        return h;
    }
};

/// Truncated kernel a_r(k), |k| <= K, stored once per |k|.
struct KernelTable {
    double r = 0.0;
    long K = 0;
    std::vector<double> coeffs; ///< a_r(|k|) for |k| = 0..K
    std::vector<double> error;  ///< quadrature error estimate per |k|

    double operator()(long k) const {
        const long a = k < 0 ? -k : k;
        if (a > K) throw InvalidArgument("KernelTable: lag " + std::to_string(k) + " outside table range");
        return coeffs[static_cast<std::size_t>(a)];
    }

    bool finite_support() const { return r == 0.0 || (r > 0 && r == std::round(r)); }
};

/// Generalized binomial coefficient C(r, h) by the product recurrence.
inline double binomial_coeff(double r, long h) {
    require(h >= 0, "binomial_coeff: h must be nonnegative");
    double c = 1.0;
    for (long i = 1; i <= h; ++i) c *= (r - static_cast<double>(i) + 1.0) / static_cast<double>(i);
    return c;
}

namespace detail {

inline bool is_integer(double r) { return r == std::round(r); }

/// Exact kernel for integer r >= 0: (-1)^k C(2r, r+k).
inline std::vector<double> integer_kernel(long r, long K) {
    std::vector<double> a(static_cast<std::size_t>(K) + 1, 0.0);
    for (long k = 0; k <= std::min(K, r); ++k) {
        const double c = binomial_coeff(static_cast<double>(2 * r), r + k);
        a[static_cast<std::size_t>(k)] = (k % 2 ? -1.0 : 1.0) * std::round(c);
    }
    return a;
}

/// Node set for (1/pi) int_0^pi (2-2cos t)^r g(t) dt with the weight folded into w.
inline QuadRule kernel_nodes(double r, long K, int gauss_nodes, int jacobi_nodes, const QuadSpec& spec) {
    const long P = std::max<long>(spec.min_panels,
                                  static_cast<long>(std::ceil(std::numbers::pi * static_cast<double>(std::max<long>(K, 1)) / spec.max_phase)));
    const double h = std::numbers::pi / static_cast<double>(P);
    QuadRule out;
    // singular cell [0, h]: (2-2cos t)^r = t^{2r} * (sinc-type smooth factor)^r
    const QuadRule jac = gauss_jacobi_unit(jacobi_nodes, 2.0 * r);
    const double hscale = std::pow(h, 2.0 * r + 1.0);
    for (std::size_t i = 0; i < jac.size(); ++i) {
        const double t = h * jac.x[i];
        const double smooth = two_minus_two_cos(t) / (t * t);
        out.x.push_back(t);
        out.w.push_back(hscale * jac.w[i] * std::pow(smooth, r) / std::numbers::pi);
    }
    const QuadRule gl = gauss_legendre(gauss_nodes);
    for (long p = 1; p < P; ++p) {
        const double a = h * static_cast<double>(p), c = a + 0.5 * h;
        for (std::size_t i = 0; i < gl.size(); ++i) {
            const double t = c + 0.5 * h * gl.x[i];
            out.x.push_back(t);
            out.w.push_back(0.5 * h * gl.w[i] * std::pow(two_minus_two_cos(t), r) / std::numbers::pi);
        }
    }
    return out;
}

/// sum_i w_i cos(k x_i) for k = 0..K, by a rotation recurrence reseeded every 32 steps.
inline std::vector<double> cosine_moments(const QuadRule& q, long K) {
    std::vector<double> a(static_cast<std::size_t>(K) + 1, 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double t = q.x[i], w = q.w[i];
        const std::complex<double> rot(std::cos(t), std::sin(t));
        std::complex<double> e(1.0, 0.0);
        for (long k = 0; k <= K; ++k) {
            if (k % 32 == 0) e = std::complex<double>(std::cos(static_cast<double>(k) * t), std::sin(static_cast<double>(k) * t));
            a[static_cast<std::size_t>(k)] += w * e.real();
            e *= rot;
        }
    }
    return a;
}

} // namespace detail

/// Kernel a_r(k) for |k| <= K by quadrature of the cosine form (exact for integer r >= 0).
inline KernelTable kernel_table(double r, long K, const QuadSpec& quad = {}) {
    require(K >= 0, "kernel_table: K must be nonnegative");
    if (!(r > -0.5))
        throw InvalidArgument("kernel_table: r <= -1/2 lies in the distributional-kernel regime; use a torus model or the Dirichlet box construction");
    KernelTable t;
    t.r = r;
    t.K = K;
    if (r >= 0 && detail::is_integer(r)) {
        t.coeffs = detail::integer_kernel(static_cast<long>(r), K);
        t.error.assign(t.coeffs.size(), 0.0);
        return t;
    }
    require(quad.gauss_nodes > quad.coarse_drop && quad.jacobi_nodes > quad.coarse_drop, "kernel_table: quadrature too coarse");
    const auto fine = detail::kernel_nodes(r, K, quad.gauss_nodes, quad.jacobi_nodes, quad);
    const auto coarse = detail::kernel_nodes(r, K, quad.gauss_nodes - quad.coarse_drop, quad.jacobi_nodes - quad.coarse_drop, quad);
    t.coeffs = detail::cosine_moments(fine, K);
    const auto c = detail::cosine_moments(coarse, K);
    t.error.resize(t.coeffs.size());
    // round-off floor: sum of |weights| times machine epsilon
    double wsum = 0.0;
    for (double w : fine.w) wsum += std::abs(w);
    for (std::size_t k = 0; k < t.coeffs.size(); ++k)
        t.error[k] = std::abs(t.coeffs[k] - c[k]) + 4.0 * std::numeric_limits<double>::epsilon() * wsum;
    return t;
}

struct KernelValue {
    double value = 0.0;
    double error = 0.0;
};

inline KernelValue kernel_coeff(double r, long k, const QuadSpec& quad = {}) {
    const long a = k < 0 ? -k : k;
    const auto t = kernel_table(r, a, quad);
    return {t.coeffs.back(), t.error.back()};
}

/// Closed form a_r(m) = (-1)^m Gamma(2r+1) / (Gamma(r+m+1) Gamma(r-m+1)), the limit of the binomial series.
inline double series_limit(double r, long m) {
    require(r > -0.5, "series_limit: r must exceed -1/2");
    const long a = m < 0 ? -m : m;
    double v = std::exp(std::lgamma(2.0 * r + 1.0) - 2.0 * std::lgamma(r + 1.0));
    for (long j = 0; j < a; ++j) v *= (static_cast<double>(j) - r) / (static_cast<double>(j) + r + 1.0);
    return v;
}

/// Partial sums of the binomial series for (2 - U - U*)^r, aggregated by net shift.
struct SeriesCoeffs {
    double r = 0.0;
    long H = 0;
    std::map<long, double> shift_coeffs;

    double operator()(long m) const {
        const auto it = shift_coeffs.find(m);
        return it == shift_coeffs.end() ? 0.0 : it->second;
    }
};

inline SeriesCoeffs series_coeffs(double r, long H) {
    require(H >= 0, "series_coeffs: H must be nonnegative");
    SeriesCoeffs s;
    s.r = r;
    s.H = H;
    // b[k] = C(h,k) / 2^h, updated row by row (Pascal)
    std::vector<double> b{1.0}, acc(static_cast<std::size_t>(2 * H + 1), 0.0);
    const double two_r = std::pow(2.0, r);
    double crh = 1.0;
    for (long h = 0; h <= H; ++h) {
        if (h > 0) {
            crh *= (r - static_cast<double>(h) + 1.0) / static_cast<double>(h);
            std::vector<double> nb(static_cast<std::size_t>(h) + 1, 0.0);
            for (long k = 0; k <= h; ++k) {
                double v = 0.0;
                if (k > 0) v += b[static_cast<std::size_t>(k - 1)];
                if (k < h) v += b[static_cast<std::size_t>(k)];
                nb[static_cast<std::size_t>(k)] = 0.5 * v;
            }
            b.swap(nb);
        }
        const double pref = (h % 2 ? -1.0 : 1.0) * two_r * crh;
        for (long k = 0; k <= h; ++k) acc[static_cast<std::size_t>(h - 2 * k + H)] += pref * b[static_cast<std::size_t>(k)];
    }
    for (long m = -H; m <= H; ++m) {
        const double v = acc[static_cast<std::size_t>(m + H)];
        if (v != 0.0 || (m + H) % 2 == 0) s.shift_coeffs[m] = v;
    }
    return s;
}

/// Estimate of |series partial sum at shift m - limit| from the large-h asymptotics of the terms.
inline double series_tail_estimate(double r, long H, long m) {
    if (r >= 0 && detail::is_integer(r)) return H >= static_cast<long>(r) ? 0.0 : std::numeric_limits<double>::infinity();
    // |C(r,h)| ~ |sin(pi r)| Gamma(r+1) / pi * h^{-1-r};  C(h,k)/2^h ~ sqrt(2/(pi h)) exp(-m^2/(2h))
    const double amp = std::pow(2.0, r) * std::abs(std::sin(std::numbers::pi * r)) * std::tgamma(r + 1.0) / std::numbers::pi *
                       std::sqrt(2.0 / std::numbers::pi);
    const double p = 1.5 + r;
    // every other h contributes
    const double x0 = static_cast<double>(H) + 1.0;
    return 0.5 * amp * std::exp(-static_cast<double>(m * m) / (2.0 * x0)) * std::pow(x0, 1.0 - p) / (p - 1.0);
}

/// Power-law fit a(k) ~ c k^slope over a lag range.
struct DecayFit {
    double slope = 0.0;
    double c = 0.0;      ///< signed prefactor
    double rms = 0.0;    ///< rms residual in log space
    long lo = 0, hi = 0;
};

inline DecayFit decay_fit(const KernelTable& t, long lo, long hi) {
    if (t.finite_support()) throw InvalidArgument("decay_fit: integer order has finite support; no power-law tail");
    require(lo >= 1 && hi <= t.K && hi > lo + 1, "decay_fit: invalid fit range");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (long k = lo; k <= hi; ++k) {
        const double a = t.coeffs[static_cast<std::size_t>(k)];
        if (a == 0.0) continue;
        const double x = std::log(static_cast<double>(k)), y = std::log(std::abs(a));
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    if (n < 3) throw ComputeError("decay_fit: degenerate fit (too few nonzero coefficients)");
    DecayFit f;
    f.lo = lo;
    f.hi = hi;
    const double dn = static_cast<double>(n);
    f.slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
    const double icpt = (sy - f.slope * sx) / dn;
    f.c = std::exp(icpt) * (t.coeffs[static_cast<std::size_t>(hi)] < 0 ? -1.0 : 1.0);
    double ss = 0.0;
    for (long k = lo; k <= hi; ++k) {
        const double a = t.coeffs[static_cast<std::size_t>(k)];
        if (a == 0.0) continue;
        const double e = std::log(std::abs(a)) - (icpt + f.slope * std::log(static_cast<double>(k)));
        ss += e * e;
    }
    f.rms = std::sqrt(ss / dn);
    return f;
}

inline DecayFit decay_fit(const KernelTable& t) { return decay_fit(t, std::max<long>(1, t.K / 2), t.K); }

/// sum_{k > K} c k^p by the midpoint Euler-Maclaurin integral; infinite if p >= -1.
inline ExtendedReal power_tail_sum(double c, double p, long K) {
    if (p >= -1.0) return ExtendedReal::infinity();
    const double x = static_cast<double>(K) + 0.5;
    const double main = std::pow(x, p + 1.0) / (-p - 1.0);
    const double corr = -p * std::pow(x, p - 1.0) / 24.0;
    return c * (main + corr);
}

/// Estimated sum_{|k| > K} |a_r(k)|; zero for finite support.
inline ExtendedReal tail_abs_sum(const KernelTable& t) {
    if (t.finite_support()) return t.K >= static_cast<long>(t.r) ? 0.0 : ExtendedReal::infinity();
    if (t.K < 8) return ExtendedReal::infinity();
    const auto f = decay_fit(t);
    return power_tail_sum(2.0 * std::abs(f.c), f.slope, t.K);
}

/// Estimated signed sum_{|k| > K} a_r(k).
inline double tail_signed_sum(const KernelTable& t) {
    if (t.finite_support()) return 0.0;
    const auto f = decay_fit(t);
    const auto s = power_tail_sum(2.0 * std::abs(f.c), f.slope, t.K);
    if (s.is_infinite()) throw ComputeError("tail_signed_sum: kernel tail not summable");
    return (f.c < 0 ? -1.0 : 1.0) * s.value();
}

/// Finitely supported sequence starting at lattice site `offset`.
struct Sequence {
    long offset = 0;
    std::vector<double> values;

    double at(long n) const {
        const long i = n - offset;
        return (i < 0 || i >= static_cast<long>(values.size())) ? 0.0 : values[static_cast<std::size_t>(i)];
    }
    long first() const { return offset; }
    long last() const { return offset + static_cast<long>(values.size()) - 1; }
};

struct Convolution {
    Sequence result;
    ExtendedReal tail_bound; ///< sum_{|k|>K} |a_r(k)|, per unit sup norm of f
};

/// Truncated convolution a_r * f.
inline Convolution convolve(const KernelTable& t, const Sequence& f) {
    Convolution out;
    out.result.offset = f.offset - t.K;
    out.result.values.assign(f.values.size() + 2 * static_cast<std::size_t>(t.K), 0.0);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const double fi = f.values[i];
        if (fi == 0.0) continue;
        for (long k = -t.K; k <= t.K; ++k) out.result.values[i + static_cast<std::size_t>(k + t.K)] += t(k) * fi;
    }
    out.tail_bound = tail_abs_sum(t);
    return out;
}

/// max |(D^r D^s - D^{r+s}) f| on a 1-D torus of N sites with exact Fourier multipliers.
/// Nonpositive orders use the half-integer frequency grid so that no mode is polar.
inline double semigroup_residual_torus(double r, double s, std::size_t N, const std::vector<double>& f) {
    require(f.size() == N && N >= 4, "semigroup_residual_torus: probe size must equal N >= 4");
    const bool half = r < 0 || s < 0 || r + s < 0;
    std::vector<cplx> x(f.begin(), f.end());
    // shift to the half-integer grid by modulating with e^{-i pi n / N}
    if (half)
        for (std::size_t n = 0; n < N; ++n) x[n] *= std::polar(1.0, -std::numbers::pi * static_cast<double>(n) / static_cast<double>(N));
    fft_nd(x, N, 1, false);
    std::vector<cplx> a(x), b(x);
    for (std::size_t k = 0; k < N; ++k) {
        const double th = 2.0 * std::numbers::pi * (static_cast<double>(k) + (half ? 0.5 : 0.0)) / static_cast<double>(N);
        const double base = two_minus_two_cos(th);
        const double mr = r == 0 ? 1.0 : std::pow(base, r), ms = s == 0 ? 1.0 : std::pow(base, s);
        const double mrs = (r + s) == 0 ? 1.0 : std::pow(base, r + s);
        a[k] *= mr * ms;
        b[k] *= mrs;
    }
    fft_nd(a, N, 1, true);
    fft_nd(b, N, 1, true);
    double res = 0.0;
    for (std::size_t n = 0; n < N; ++n) res = std::max(res, std::abs(a[n] - b[n]));
    return res;
}

/// max |(S_r * S_s - S_{r+s}) * f| with binomial-series truncations at order H.
inline double semigroup_residual_series(double r, double s, long H, const Sequence& f) {
    const auto cr = series_coeffs(r, H), cs = series_coeffs(s, H), crs = series_coeffs(r + s, H);
    auto apply = [](const SeriesCoeffs& c, const Sequence& g) {
        Sequence out;
        out.offset = g.offset - c.H;
        out.values.assign(g.values.size() + 2 * static_cast<std::size_t>(c.H), 0.0);
        for (std::size_t i = 0; i < g.values.size(); ++i)
            for (const auto& [m, v] : c.shift_coeffs) out.values[i + static_cast<std::size_t>(m + c.H)] += v * g.values[i];
        return out;
    };
    const auto lhs = apply(cr, apply(cs, f));
    const auto rhs = apply(crs, f);
    double res = 0.0;
    for (long n = lhs.first(); n <= lhs.last(); ++n) res = std::max(res, std::abs(lhs.at(n) - rhs.at(n)));
    return res;
}

/// CSV rows (k, a_r(k), error) for k = 0..K.
inline void write_kernel_csv(std::ostream& os, const KernelTable& t) {
    os << "k [lattice units],a_r(k) [dimensionless],error [dimensionless]\n";
    char buf[96];
    for (long k = 0; k <= t.K; ++k) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g\n", k, t.coeffs[static_cast<std::size_t>(k)], t.error[static_cast<std::size_t>(k)]);
        os << buf;
    }
}

/// Cache file name keyed by (r, K, quadrature hash).
inline std::string kernel_cache_name(double r, long K, const QuadSpec& quad) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "kernel_%016llx_%ld_%016llx.bin", static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(r)), K,
                  static_cast<unsigned long long>(quad.hash()));
    return buf;
}

inline void save_kernel_cache(const std::filesystem::path& dir, const KernelTable& t, const QuadSpec& quad) {
    std::filesystem::create_directories(dir);
    const auto path = dir / kernel_cache_name(t.r, t.K, quad);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw ComputeError("save_kernel_cache: cannot write " + tmp);
        const char magic[4] = {'F', 'L', 'K', 'T'};
        const std::uint32_t version = 1;
        const std::uint64_t h = quad.hash();
        const std::int64_t K = t.K;
        os.write(magic, 4);
        os.write(reinterpret_cast<const char*>(&version), sizeof version);
        os.write(reinterpret_cast<const char*>(&t.r), sizeof t.r);
        os.write(reinterpret_cast<const char*>(&K), sizeof K);
        os.write(reinterpret_cast<const char*>(&h), sizeof h);
        os.write(reinterpret_cast<const char*>(t.coeffs.data()), static_cast<std::streamsize>(t.coeffs.size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(t.error.data()), static_cast<std::streamsize>(t.error.size() * sizeof(double)));
    }
    std::filesystem::rename(tmp, path);
}

inline std::optional<KernelTable> load_kernel_cache(const std::filesystem::path& dir, double r, long K, const QuadSpec& quad) {
    std::ifstream is(dir / kernel_cache_name(r, K, quad), std::ios::binary);
    if (!is) return std::nullopt;
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t h = 0;
    std::int64_t k = 0;
    KernelTable t;
    is.read(magic, 4);
    is.read(reinterpret_cast<char*>(&version), sizeof version);
    is.read(reinterpret_cast<char*>(&t.r), sizeof t.r);
    is.read(reinterpret_cast<char*>(&k), sizeof k);
    is.read(reinterpret_cast<char*>(&h), sizeof h);
    if (!is || std::string(magic, 4) != "FLKT" || version != 1 || t.r != r || k != K || h != quad.hash()) return std::nullopt;
    t.K = K;
    t.coeffs.resize(static_cast<std::size_t>(K) + 1);
    t.error.resize(static_cast<std::size_t>(K) + 1);
    is.read(reinterpret_cast<char*>(t.coeffs.data()), static_cast<std::streamsize>(t.coeffs.size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(t.error.data()), static_cast<std::streamsize>(t.error.size() * sizeof(double)));
    if (!is) return std::nullopt;
    return t;
}

/// Table from the cache directory if present, else computed and stored.
inline KernelTable cached_kernel_table(const std::filesystem::path& dir, double r, long K, const QuadSpec& quad = {}) {
    if (auto t = load_kernel_cache(dir, r, K, quad)) return *t;
    auto t = kernel_table(r, K, quad);
    save_kernel_cache(dir, t, quad);
    return t;
}

} // namespace fraclap
