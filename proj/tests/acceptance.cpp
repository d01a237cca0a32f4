// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fraclap/fraclap.hpp>

using namespace fraclap;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmtd(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_seconds, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = o.pass && dt < budget_seconds;
    if (!ok) ++failures;
    std::printf("%s [%2d] %s: %s (%.2f s, budget %.0f s)\n", ok ? "PASS" : "FAIL", id, name, o.detail.c_str(), dt, budget_seconds);
    std::fflush(stdout);
}

// Tolerances
constexpr double kSeriesTol = 1e-10;
constexpr double kSeriesTailFactor = 2.0;
constexpr double kDecayRelTol = 0.02;
constexpr double kSemigroupTol = 1e-12;
constexpr double kHalvingFactor = 1.5;
constexpr double kMourreLower = 1.0 - 0.1;
constexpr double kMourreEdgeUpper = 0.2;
constexpr double kLapChange = 0.10;
constexpr double kLapGrowth = 10.0;
constexpr double kDecayIncrease = 0.05;
constexpr double kLinearGrowthMin = 1.8;
constexpr double kWaveTol = 1e-4;
constexpr double kScatterTol = 1e-8;
constexpr double kBkTol = 0.05;
constexpr double kContinuityFactor = 1.6;

Outcome kernel_exactness() {
    const auto t1 = kernel_table(1.0, 6), t2 = kernel_table(2.0, 6), t0 = kernel_table(0.0, 6);
    const std::vector<double> s1{2, -1, 0, 0, 0, 0, 0}, s2{6, -4, 1, 0, 0, 0, 0}, s0{1, 0, 0, 0, 0, 0, 0};
    const bool ok = t1.coeffs == s1 && t2.coeffs == s2 && t0.coeffs == s0;
    return {ok, ok ? "r=1, r=2 stencils and r=0 delta exact" : "stencil mismatch"};
}

Outcome series_agreement() {
    double worst = 0.0, worst_tail = 0.0;
    for (double r : {0.25, 0.5, 0.75, 1.5}) {
        const auto t = kernel_table(r, 20);
        const auto s = series_coeffs(r, 400);
        for (long k = 0; k <= 20; ++k) {
            worst = std::max(worst, std::abs(t.coeffs[static_cast<std::size_t>(k)] - series_limit(r, k)));
            // the H=400 partial sum sits within its tail estimate of the limit
            worst_tail = std::max(worst_tail, std::abs(s(k) - series_limit(r, k)) / series_tail_estimate(r, 400, k));
        }
    }
    return {worst < kSeriesTol && worst_tail < kSeriesTailFactor,
            fmtd("max |quadrature - series limit| = %.2e, partial-sum error / tail estimate <= %.3f", worst, worst_tail)};
}

Outcome decay_law() {
    std::string d;
    bool ok = true;
    for (double r : {0.25, 0.5}) {
        const auto f = decay_fit(kernel_table(r, 4000));
        const double target = -1.0 - 2.0 * r;
        const double rel = std::abs(f.slope / target - 1.0);
        ok = ok && rel < kDecayRelTol;
        d += fmtd("r=%g slope %.5f (target %.2f, rel %.2e) ", r, f.slope, target, rel);
    }
    return {ok, d};
}

Outcome semigroup() {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> ord(-0.9, 2.0), val(-1.0, 1.0);
    const std::size_t N = 256;
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
        const double r = ord(rng), s = ord(rng);
        std::vector<double> f(N);
        for (auto& x : f) x = val(rng);
        worst = std::max(worst, semigroup_residual_torus(r, s, N, f));
    }
    return {worst < kSemigroupTol, fmtd("max residual over 5 random pairs = %.2e", worst)};
}

Outcome spectrum_thresholds() {
    bool ok = true;
    std::string d;
    struct Case {
        FractionalOrder r;
        std::size_t N;
    };
    for (const auto& c : {Case{FractionalOrder{1.0}, 256}, Case{FractionalOrder{0.5}, 256}, Case{FractionalOrder{1.0, 1.0}, 64}}) {
        const auto f = spectral_fill(TorusModel(c.r, c.N));
        ok = ok && f.hausdorff <= f.grid_modulus;
        d += fmtd("gap %.3g <= modulus %.3g; ", f.hausdorff, f.grid_modulus);
    }
    const auto a = threshold_set(FractionalOrder{1.0, 1.0}).values;
    const auto b = threshold_set(FractionalOrder{1.0, -1.0}).values;
    const bool ta = a == std::vector<double>{0.0, 4.0, 8.0};
    const bool tb = b.size() == 2 && std::abs(b[0] - 0.25) < 1e-15 && std::abs(b[1] - 4.25) < 1e-15;
    d += fmtd("thresholds (1,1) %s, (1,-1) %s", ta ? "{0,4,8}" : "wrong", tb ? "{0.25,4.25}" : "wrong");
    return {ok && ta && tb, d};
}

Outcome commutator_identities() {
    struct Case {
        double r;
        Window I;
    };
    CommutatorOptions opt;
    opt.localization.seed_radius = 12;
    bool ok = true;
    double worst = std::numeric_limits<double>::infinity();
    std::string d;
    for (const auto& c : {Case{0.5, {0.5, 1.5}}, Case{1.0, {1.0, 3.0}}, Case{2.0, {2.0, 8.0}}, Case{-1.0, {0.3, 1.0}}}) {
        std::vector<CommutatorReport> first, second;
        for (long L : {50L, 100L, 200L}) {
            const auto box = build_box(FractionalOrder{c.r}, L);
            first.push_back(first_commutator_residual(box, c.I, opt));
            second.push_back(second_commutator_residual(box, c.I, opt));
        }
        for (const auto* seq : {&first, &second})
            for (std::size_t i = 0; i + 1 < seq->size(); ++i) {
                const auto &a = (*seq)[i], &b = (*seq)[i + 1];
                // a residual already at the rounding floor cannot halve further
                if (b.converged()) continue;
                const double ratio = a.identity_residual / b.identity_residual;
                worst = std::min(worst, ratio);
                ok = ok && ratio >= kHalvingFactor;
            }
        d += fmtd("r=%g res1(L=200) %.2e res2(L=200) %.2e; ", c.r, first.back().identity_residual, second.back().identity_residual);
    }
    return {ok, fmtd("min doubling ratio %.3f; ", worst) + d};
}

Outcome mourre_positivity() {
    const auto box = build_box(FractionalOrder{1.0}, 100);
    CommutatorOptions opt;
    opt.localization.seed_radius = 12;
    const double inner = mourre_constant(box, Window{1.0, 3.0}, opt).mourre_constant;
    const double edge = mourre_constant(box, Window{3.9, 4.0}, opt).mourre_constant;
    return {inner >= kMourreLower && edge < kMourreEdgeUpper, fmtd("c[1,3] = %.4f, c[3.9,4] = %.4f", inner, edge)};
}

Outcome lap_saturation() {
    const std::vector<double> etas{1e-2, 1e-3, 1e-4};
    const Window I{1.0, 3.0};
    const FractionalOrder r{1.0};
    Potential W = Potential::point(1, 0.5);
    const bool valid = validate_potential(W).H1;
    bool ok = valid;
    std::string d = valid ? "W validated; " : "W failed validation; ";
    for (const Potential& P : {Potential::point(1, 0.0), W}) {
        const LatticeResolvent R(1.0, P, 100);
        const auto s1 = lap_scan(R, r, I, 1.0, etas, 11);
        const auto s0 = lap_scan(R, r, I, 0.0, etas, 11);
        const double growth = s0.sup_norm.back() / s0.sup_norm.front();
        ok = ok && std::abs(s1.change) < kLapChange && growth >= kLapGrowth;
        d += fmtd("%s: s=1 change %.2e, s=0 growth %.1fx; ", P.is_zero() ? "W=0" : "W=0.5 delta", s1.change, growth);
    }
    return {ok, d};
}

Outcome local_decay() {
    const TorusModel T(FractionalOrder{1.0}, 4096);
    const TorusPropagator P(T);
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(T.size()));
    f(static_cast<Eigen::Index>(T.site_index({0}))) = 1.0;
    const auto d1 = local_decay_integral(P, f, Window{1.0, 3.0}, 1.0, {200, 400});
    const auto d0 = local_decay_integral(P, f, Window{1.0, 3.0}, 0.0, {200, 400});
    const double lin = d0.value[1] / d0.value[0];
    return {d1.last_increase() < kDecayIncrease && lin >= kLinearGrowthMin,
            fmtd("s=1 increase %.3e; s=0 ratio %.4f (linear is 2)", d1.last_increase(), lin)};
}

Outcome wave_probe() {
    const auto H0 = build_box(FractionalOrder{1.0}, 400);
    const auto H = hamiltonian(H0, Potential::point(1, 0.5));
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(H0.size()));
    f(400) = 1.0;
    const auto w = wave_operator_probe(H, H0, Window{1.0, 3.0}, f, {0, 25, 50, 75, 100, 125, 150, 175, 200}, kWaveTol);
    return {w.increments.back() < kWaveTol, fmtd("last increment %.2e at t=200", w.increments.back())};
}

Outcome scattering() {
    const auto W = Potential::point(1, 0.5);
    double u = 0, o = 0, g = 0, rc = 0;
    for (int i = 0; i <= 40; ++i) {
        const auto s = s_matrix(1.0, 1.0 + 0.05 * i, W);
        u = std::max(u, s.unitarity_residual);
        o = std::max(o, s.optical_residual);
        g = std::max(g, s.route_gap);
        rc = std::max(rc, s.reciprocity_residual);
    }
    const bool ok = u < kScatterTol && o < kScatterTol && g < kScatterTol && rc < kScatterTol;
    return {ok, fmtd("unitarity %.2e, optical %.2e, two-route %.2e, reciprocity %.2e", u, o, g, rc)};
}

Outcome birman_krein_check() {
    const auto W = Potential::point(1, 0.5);
    TorusSpectra sp(1.0, W);
    bool ok = true;
    std::string d;
    for (double l : {1.5, 2.0, 2.5}) {
        const auto p = birman_krein(sp, 1.0, l, W, {1024, 2048, 4096});
        ok = ok && p.residual.back() < kBkTol && p.residual[1] < p.residual[0] && p.residual[2] < p.residual[1];
        d += fmtd("l=%g: %.2e %.2e %.2e; ", l, p.residual[0], p.residual[1], p.residual[2]);
    }
    return {ok, d};
}

Outcome ballistic() {
    const auto H = build_box(FractionalOrder{1.0}, 800);
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(H.size()));
    f(800) = 1.0;
    const auto b = ballistic_average(H, f, Window{1.0, 3.0}, 0.95, {50, 100, 200, 400});
    return {b.non_increasing && b.below_envelope,
            fmtd("averages %.4f %.4f %.4f %.4f, C=%.4f", b.average[0], b.average[1], b.average[2], b.average[3], b.fitted_C)};
}

Outcome continuity() {
    const cplx z(2.0, 1.0);
    const auto coarse = r_continuity_scan({0.5, 0.6, 0.7, 0.8}, z);
    const auto fine = r_continuity_scan({0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8}, z);
    const double ratio = coarse.max_increment / fine.max_increment;
    return {ratio >= kContinuityFactor, fmtd("max increment %.3e -> %.3e, ratio %.3f", coarse.max_increment, fine.max_increment, ratio)};
}

} // namespace

int main() {
    criterion(1, "kernel exactness", 1, kernel_exactness);
    criterion(2, "quadrature-series agreement", 30, series_agreement);
    criterion(3, "kernel decay law", 120, decay_law);
    criterion(4, "semigroup on the torus", 10, semigroup);
    criterion(5, "spectrum fill and thresholds", 10, spectrum_thresholds);
    criterion(6, "commutator identities under L-doubling", 600, commutator_identities);
    criterion(7, "Mourre positivity and threshold degeneration", 300, mourre_positivity);
    criterion(8, "limiting absorption saturation", 600, lap_saturation);
    criterion(9, "local decay", 600, local_decay);
    criterion(10, "wave-operator probe", 600, wave_probe);
    criterion(11, "scattering identities", 120, scattering);
    criterion(12, "Birman-Krein", 600, birman_krein_check);
    criterion(13, "ballistic envelope", 900, ballistic);
    criterion(14, "continuity in r", 120, continuity);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
