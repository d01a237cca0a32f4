#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <fraclap/scattering.hpp>

using namespace fraclap;
using std::numbers::pi;

TEST(Shell, FirstOrderCentre) {
    const auto s = shell_data(1.0, 2.0);
    EXPECT_NEAR(s.theta, pi / 2, 1e-14);
    EXPECT_NEAR(s.slope, 2.0, 1e-14);
    EXPECT_NEAR(s.weight, 1.0 / std::sqrt(4.0 * pi), 1e-14);
    EXPECT_LT(s.stone_residual, 1e-10);
}

TEST(Shell, HalfOrder) {
    EXPECT_NEAR(shell_data(0.5, 1.0).theta, pi / 3, 1e-14);
    EXPECT_THROW(shell_data(1.0, 4.0), ThresholdGuardError);
}

TEST(SMatrix, ZeroPotentialIsIdentity) {
    const auto s = s_matrix(1.0, 2.0, Potential::point(1, 0.0));
    EXPECT_EQ(s.S, Eigen::Matrix2cd::Identity());
    EXPECT_EQ(s.unitarity_residual, 0.0);
}

TEST(TMatrix, RankOneClosedForm) {
    for (double lam : {1.0, 2.0, 3.0}) {
        const double v = 0.5;
        const cplx G = green_1d(1.0, lam, 0.0, 0).value;
        const auto T = t_matrix(1.0, lam, Potential::point(1, v));
        EXPECT_LT(std::abs(T.T(0, 0) - v / (1.0 + v * G)), 1e-14);
        EXPECT_LT(T.route_gap, 1e-12);
    }
}

TEST(TMatrix, LowerBoundaryIsAdjoint) {
    Potential W;
    W.values[{0}] = 0.7;
    W.values[{2}] = -0.4;
    W.values[{3}] = 0.2;
    const auto p = t_matrix(0.5, 1.3, W, 1), m = t_matrix(0.5, 1.3, W, -1);
    EXPECT_LT((m.T - p.T.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TMatrix, ExceptionalEnergyIsReported) {
    EXPECT_THROW(t_matrix(1.0, 2.0, Potential::point(1, 0.5), 1, {}, 10.0), ExceptionalEnergy);
}

TEST(SMatrix, FirstOrderTransmission) {
    // 1-D tight binding: t = 1 / (1 + i V / (2 sin theta))
    const double v = 0.5;
    for (double lam : {0.5, 2.0, 3.5}) {
        const auto s = s_matrix(1.0, lam, Potential::point(1, v));
        const double th = 2.0 * std::asin(std::sqrt(lam) / 2.0);
        const cplx t = 1.0 / (1.0 + cplx(0.0, v / (2.0 * std::sin(th))));
        EXPECT_LT(std::abs(s.transmission() - t), 1e-10);
        EXPECT_NEAR(std::norm(s.transmission()) + std::norm(s.reflection()), 1.0, 1e-12);
    }
}

TEST(SMatrix, IdentitiesForExtendedPotential) {
    Potential W;
    W.values[{0}] = 0.7;
    W.values[{3}] = -0.4;
    for (double r : {0.5, 1.0, 1.5})
        for (double f : {0.2, 0.5, 0.8}) {
            const auto s = s_matrix(r, f * std::pow(4.0, r), W);
            EXPECT_LT(s.unitarity_residual, 1e-10);
            EXPECT_LT(s.optical_residual, 1e-10);
            EXPECT_LT(s.route_gap, 1e-10);
            EXPECT_LT(s.reciprocity_residual, 1e-10);
            EXPECT_NEAR(std::abs(s.detS), 1.0, 1e-10);
        }
}

TEST(SMatrix, OpticalResidualDetectsWrongWeights) {
    const auto W = Potential::point(1, 0.8);
    EXPECT_LT(optical_residual(1.0, 2.0, W), 1e-12);
    EXPECT_GT(optical_residual(1.0, 2.0, W, 1.1), 1e-3);
}

TEST(Ssf, FreeCaseVanishes) {
    const auto rep = ssf_counting(1.0, 2.0, Potential::point(1, 0.0), {64, 128});
    for (const auto& c : rep.sequence) {
        EXPECT_EQ(c.count, 0);
        EXPECT_EQ(c.smoothed, 0.0);
    }
}

TEST(Ssf, BoundStateShiftsTheCount) {
    // below the band the attractive potential has one eigenvalue and the free operator none
    const auto rep = ssf_counting(1.0, -0.5, Potential::point(1, -2.0), {128, 256, 512});
    EXPECT_EQ(rep.stabilized, -1);
}

TEST(BirmanKrein, ResidualIsSmallAndIntegerBlind) {
    EXPECT_LT(birman_krein_residual(cplx(1.0, 0.0), 1.0), 1e-14);
    const auto W = Potential::point(1, 0.5);
    TorusSpectra sp(1.0, W);
    const auto p = birman_krein(sp, 1.0, 2.0, W, {512, 1024});
    EXPECT_LT(p.residual.back(), 0.1);
}

TEST(KreinTrace, AsymmetricWindow) {
    const auto k = krein_trace_check(1.0, Potential::point(1, 0.5), Window{0.5, 2.5}, 1024, 201);
    EXPECT_EQ(k.exceptional, 0u);
    EXPECT_GT(std::abs(k.trace), 1e-3);
    EXPECT_LT(k.residual, 1e-2 * std::abs(k.trace) + 1e-6);
}
