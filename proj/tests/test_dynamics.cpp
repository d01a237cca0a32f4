#include <cmath>

#include <gtest/gtest.h>

#include <fraclap/dynamics.hpp>

using namespace fraclap;

namespace {

Eigen::VectorXcd delta(Eigen::Index n, Eigen::Index at) {
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(n);
    f(at) = 1.0;
    return f;
}

Eigen::VectorXcd bumpy(Eigen::Index n) {
    Eigen::VectorXcd f(n);
    for (Eigen::Index i = 0; i < n; ++i) f(i) = cplx(std::exp(-0.02 * double((i - n / 2) * (i - n / 2))), 0.1 * std::sin(0.3 * double(i)));
    return f;
}

} // namespace

TEST(Evolve, IdentityAtTimeZero) {
    const auto H = hamiltonian(build_box(FractionalOrder{0.5}, 20), Potential::point(1, 0.4));
    const Eigen::VectorXcd f = bumpy(41);
    EXPECT_LT((evolve(H, f, 0.0).values - f).norm(), 1e-13);
    const TorusModel T(FractionalOrder{1.0}, 64);
    const Eigen::VectorXcd g = bumpy(64);
    EXPECT_LT((evolve(T, g, 0.0).values - g).norm(), 1e-13);
}

TEST(Evolve, UnitarityCompositionEnergy) {
    const auto H = hamiltonian(build_box(FractionalOrder{0.75}, 30), Potential::point(1, -0.6));
    const EigenPropagator P(H);
    const Eigen::VectorXcd f = bumpy(61);
    const Eigen::VectorXcd a = P.evolve(f, 3.7);
    EXPECT_NEAR(a.norm(), f.norm(), 1e-12);
    EXPECT_LT((P.evolve(P.evolve(f, 1.2), 2.5) - a).norm(), 1e-11);
    const cplx e0 = f.dot(H.matrix.cast<cplx>() * f), e1 = a.dot(H.matrix.cast<cplx>() * a);
    EXPECT_LT(std::abs(e0 - e1), 1e-10);
    EXPECT_NEAR(evolve(H, f, 3.7).norm, f.norm(), 1e-12);
}

TEST(Evolve, TorusUnitarity) {
    const TorusModel T(FractionalOrder{0.5, 1.0}, 16);
    const TorusPropagator P(T);
    const Eigen::VectorXcd f = bumpy(256);
    const Eigen::VectorXcd a = P.evolve(f, 10.0);
    EXPECT_NEAR(a.norm(), f.norm(), 1e-12);
    EXPECT_LT((P.evolve(a, -10.0) - f).norm(), 1e-11);
}

TEST(Evolve, BoxAgreesWithTorusBeforeTheEdge) {
    const long L = 100;
    const auto box = build_box(FractionalOrder{1.0}, L);
    const TorusModel T(FractionalOrder{1.0}, 256);
    const Eigen::VectorXcd fb = delta(2 * L + 1, L);
    Eigen::VectorXcd ft = Eigen::VectorXcd::Zero(256);
    ft(static_cast<Eigen::Index>(T.site_index({0}))) = 1.0;
    const auto a = evolve(box, fb, 10.0).values;
    const auto b = evolve(T, ft, 10.0).values;
    double err = 0.0;
    for (long n = -L; n <= L; ++n) err = std::max(err, std::abs(a(n + L) - b(static_cast<Eigen::Index>(T.site_index({n})))));
    EXPECT_LT(err, 1e-6);
}

TEST(Chebyshev, MatchesEigensolver) {
    const auto box = hamiltonian(build_box(FractionalOrder{0.5}, 50), Potential::point(1, 0.5));
    const Eigen::VectorXcd f = delta(101, 50);
    const auto exact = evolve(box, f, 10.0).values;
    EXPECT_LT((chebyshev_evolve(box, f, 10.0, 80).values - exact).norm(), 1e-10);
}

TEST(Chebyshev, RejectsNonpositiveOrders) {
    BoxOptions o;
    o.dirichlet_all = true;
    const auto box = build_box(FractionalOrder{-1.0}, 5, o);
    EXPECT_THROW(chebyshev_evolve(box, delta(11, 5), 1.0, 20), InvalidArgument);
}

TEST(SpectralEnclosure, ContainsEigenvalues) {
    const auto box = build_box(FractionalOrder{0.5}, 10);
    const auto [lo, hi] = spectral_enclosure(box.matrix);
    const auto s = eig_all(box, false);
    EXPECT_LE(lo, s.values(0));
    EXPECT_GE(hi, s.values(s.size() - 1));
}

TEST(LocalDecay, WeightedBoundedUnweightedLinear) {
    const TorusModel T(FractionalOrder{1.0}, 1024);
    const TorusPropagator P(T);
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(1024);
    f(static_cast<Eigen::Index>(T.site_index({0}))) = 1.0;
    const auto a = local_decay_integral(P, f, Window{1.0, 3.0}, 1.0, {50, 100});
    const auto b = local_decay_integral(P, f, Window{1.0, 3.0}, 0.0, {50, 100});
    EXPECT_LT(a.last_increase(), 0.05);
    EXPECT_NEAR(b.value[1] / b.value[0], 2.0, 1e-6);
    EXPECT_LE(a.dt, 0.1 / P.norm() + 1e-15);
}

TEST(Rage, BoundStateDoesNotDecay) {
    const auto H = hamiltonian(build_box(FractionalOrder{1.0}, 60), Potential::point(1, -2.0));
    const EigenPropagator P(H);
    const Eigen::VectorXcd f = delta(121, 60);
    const auto rep = rage_overlap(P, f, f, Window{-1.5, -0.2}, {1, 2, 4, 8, 16, 32, 64});
    EXPECT_TRUE(rep.non_decaying);
    ASSERT_EQ(rep.envelope.size(), 7u);
    for (std::size_t i = 1; i < rep.envelope.size(); ++i) EXPECT_LE(rep.envelope[i], rep.envelope[i - 1]);
}

TEST(Rage, ContinuousSpectrumDecays) {
    const TorusModel T(FractionalOrder{1.0}, 2048);
    const TorusPropagator P(T);
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(2048);
    f(static_cast<Eigen::Index>(T.site_index({0}))) = 1.0;
    const auto rep = rage_overlap(P, f, f, Window{1.0, 3.0}, {1, 2, 4, 8, 16, 32, 64, 128});
    EXPECT_FALSE(rep.non_decaying);
    EXPECT_LT(rep.envelope_slope, -0.3);
}

TEST(WaveProbe, IncrementsDecrease) {
    const auto H0 = build_box(FractionalOrder{1.0}, 200);
    const auto H = hamiltonian(H0, Potential::point(1, 0.5));
    const auto rep = wave_operator_probe(H, H0, Window{1.0, 3.0}, delta(401, 200), {0, 20, 40, 60, 80}, 1e-4);
    ASSERT_EQ(rep.increments.size(), 4u);
    EXPECT_LT(rep.increments.back(), rep.increments.front());
    EXPECT_LT(rep.increments.back(), 1e-4);
    EXPECT_GT(rep.range_mass, 0.0);
}

TEST(Ballistic, AverageIsAProbability) {
    const auto H = build_box(FractionalOrder{1.0}, 200);
    const auto rep = ballistic_average(H, delta(401, 200), Window{1.0, 3.0}, 0.95, {10, 20, 40});
    ASSERT_EQ(rep.average.size(), 3u);
    for (double a : rep.average) {
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0 + 1e-12);
    }
    EXPECT_TRUE(rep.non_increasing);
    EXPECT_GT(rep.fitted_C, 0.0);
}
