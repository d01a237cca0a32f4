#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <fraclap/model.hpp>

using namespace fraclap;
using std::numbers::pi;

TEST(Geometry, IndexRoundTrip) {
    const LatticeGeometry g{2, 5, -2};
    EXPECT_EQ(g.size(), 25u);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.index(g.site(i)), i);
    EXPECT_TRUE(g.contains({-2, 2}));
    EXPECT_FALSE(g.contains({3, 0}));
}

TEST(Torus, FirstOrderEigenvalues) {
    const TorusModel T(FractionalOrder{1.0}, 8);
    std::vector<double> expect;
    for (int k = 0; k < 8; ++k) expect.push_back(2.0 - 2.0 * std::cos(2 * pi * k / 8));
    std::sort(expect.begin(), expect.end());
    const auto e = T.eigenvalues();
    ASSERT_EQ(e.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(e[i], expect[i], 1e-14);
}

TEST(Torus, NegativeOrderNeedsHalfGrid) {
    const TorusModel plain(FractionalOrder{-1.0}, 8);
    EXPECT_TRUE(plain.has_polar_modes());
    EXPECT_FALSE(plain.applicable());
    EXPECT_THROW(plain.apply(std::vector<cplx>(8, 1.0)), InvalidArgument);
    const TorusModel half(FractionalOrder{-1.0}, 8, FrequencyGrid::HalfInteger);
    const auto e = half.eigenvalues();
    EXPECT_NEAR(e.front(), 1.0 / (2.0 + 2.0 * std::cos(pi / 8)), 1e-14);
    EXPECT_NEAR(e.back(), 1.0 / (2.0 - 2.0 * std::cos(pi / 8)), 1e-13);
    const TorusModel proj(FractionalOrder{-1.0}, 8, FrequencyGrid::Plain, ZeroMode::Project);
    EXPECT_TRUE(proj.applicable());
    EXPECT_EQ(proj.eigenvalues().size(), 7u);
}

TEST(Torus, ApplyMatchesDenseMatrix) {
    for (const FractionalOrder& r : {FractionalOrder{0.5}, FractionalOrder{1.0, -0.5}}) {
        const TorusModel T(r, 8, r.has_negative() ? FrequencyGrid::HalfInteger : FrequencyGrid::Plain);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1, 1);
        std::vector<cplx> f(T.size());
        for (auto& x : f) x = cplx(u(rng), u(rng));
        const auto y = T.apply(f);
        const Eigen::MatrixXd D = T.dense();
        EXPECT_LT((D - D.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        Eigen::VectorXcd fe = Eigen::Map<const Eigen::VectorXcd>(f.data(), static_cast<Eigen::Index>(f.size()));
        const Eigen::VectorXcd ye = D * fe;
        for (std::size_t i = 0; i < f.size(); ++i) EXPECT_LT(std::abs(ye(static_cast<Eigen::Index>(i)) - y[i]), 1e-12);
    }
}

TEST(Torus, FirstOrderIsTheLaplacianStencil) {
    const TorusModel T(FractionalOrder{1.0}, 8);
    const Eigen::MatrixXd D = T.dense();
    for (long i = 0; i < 8; ++i)
        for (long j = 0; j < 8; ++j) {
            const long d = std::min((i - j + 8) % 8, (j - i + 8) % 8);
            EXPECT_NEAR(D(i, j), d == 0 ? 2.0 : (d == 1 ? -1.0 : 0.0), 1e-14);
        }
}

TEST(Torus, SpectralTransformIsUnitary) {
    const TorusModel T(FractionalOrder{0.7, 1.0}, 8);
    std::vector<cplx> f(T.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = cplx(std::sin(1.0 + i), std::cos(0.3 * i));
    const auto c = T.to_spectral(f);
    double nf = 0, nc = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        nf += std::norm(f[i]);
        nc += std::norm(c[i]);
    }
    EXPECT_NEAR(nf, nc, 1e-12);
    const auto g = T.from_spectral(c);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_LT(std::abs(g[i] - f[i]), 1e-13);
}

TEST(Torus, SpectralFillWithinGridModulus) {
    for (const FractionalOrder& r : {FractionalOrder{1.0}, FractionalOrder{0.5}, FractionalOrder{1.0, 2.0}}) {
        const auto f = spectral_fill(TorusModel(r, 32));
        EXPECT_LE(f.hausdorff, f.grid_modulus);
    }
}

TEST(Box, FirstOrderIsTridiagonal) {
    const auto box = build_box(FractionalOrder{1.0}, 2);
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(5, 5);
    for (int i = 0; i < 5; ++i) {
        expect(i, i) = 2;
        if (i + 1 < 5) expect(i, i + 1) = expect(i + 1, i) = -1;
    }
    EXPECT_EQ(box.matrix, expect);
    EXPECT_EQ(box.max_tail_bound(), 0.0);
}

TEST(Box, PotentialOnTheDiagonal) {
    const auto H = hamiltonian(build_box(FractionalOrder{1.0}, 2), Potential::point(1, 3.0));
    const Eigen::VectorXd d = H.matrix.diagonal();
    EXPECT_EQ(d, (Eigen::VectorXd(5) << 2, 2, 5, 2, 2).finished());
}

TEST(Box, AttractivePointPotentialHasOneBoundState) {
    const auto H = hamiltonian(build_box(FractionalOrder{1.0}, 40), Potential::point(1, -2.0));
    const auto s = eig_all(H, false);
    EXPECT_EQ((s.values.array() < 0.0).count(), 1);
    // exact lattice bound state: lambda = 2 - sqrt(4 + W^2) for W = -2
    EXPECT_NEAR(s.values(0), 2.0 - std::sqrt(8.0), 1e-10);
}

TEST(Box, FractionalKernelIsSymmetricToeplitz) {
    const auto box = build_box(FractionalOrder{0.5}, 10);
    const auto t = kernel_table(0.5, 20);
    for (long i = 0; i < 21; ++i)
        for (long j = 0; j < 21; ++j) EXPECT_NEAR(box.matrix(i, j), t(i - j), 1e-14);
    EXPECT_GT(box.max_tail_bound(), 0.0);
}

TEST(Box, DirichletConstructionMatchesSineSpectrum) {
    BoxOptions o;
    o.dirichlet_all = true;
    const auto box = build_box(FractionalOrder{0.5}, 10, o);
    const auto s = eig_all(box, false);
    const auto exact = box_spectrum(box);
    for (Eigen::Index i = 0; i < s.size(); ++i) EXPECT_NEAR(s.values(i), exact.values(i), 1e-12);
}

TEST(Box, EigenpairResidual) {
    const auto box = hamiltonian(build_box(FractionalOrder{1.0, 0.5}, 4), Potential::point(2, 0.7));
    const auto s = eig_all(box);
    EXPECT_LT(s.max_residual, 1e-12);
    EXPECT_THROW(eig_all(box, true, 10), ComputeError);
}

TEST(Potential, DecayingPotentialIsValid) {
    const auto W = Potential::sampled(1, 200, [](const Site& n) { return 1.0 / (1.0 + double(n[0]) * double(n[0])); }, 8.0, 1.0);
    const auto c = validate_potential(W);
    EXPECT_TRUE(c.H0);
    EXPECT_TRUE(c.H1);
    EXPECT_LE(c.worst_ratio, 1.0);
}

TEST(Potential, ConstantPotentialFailsDecay) {
    const auto W = Potential::sampled(1, 50, [](const Site&) { return 1.0; }, 1.0, 1.0);
    EXPECT_FALSE(validate_potential(W).H0);
}

TEST(Potential, RoughPotentialFailsDifferenceBound) {
    const auto W = Potential::sampled(1, 50, [](const Site& n) { return (n[0] % 2 ? 1.0 : -1.0) / (1.0 + std::abs(double(n[0]))); }, 0.1, 1.0);
    const auto c = validate_potential(W);
    EXPECT_FALSE(c.H1);
    EXPECT_GT(c.required_C, 0.1);
}

TEST(Potential, FiniteSupportCertifies) {
    const auto c = validate_potential(Potential::point(1, 0.5));
    EXPECT_TRUE(c.H0);
    EXPECT_TRUE(c.H1);
}

TEST(PerturbedTorus, DenseAddsDiagonal) {
    const TorusModel T(FractionalOrder{1.0}, 8);
    const auto H = hamiltonian(T, Potential::point(1, 0.5));
    const Eigen::MatrixXd D = H.dense() - T.dense();
    EXPECT_EQ(D(T.site_index({0}), T.site_index({0})), 0.5);
    EXPECT_EQ(D.cwiseAbs().sum(), 0.5);
}

TEST(Embedded, NoPersistentEigenvaluesForPointPotential) {
    const auto c = embedded_eigenvalue_count(FractionalOrder{1.0}, Potential::point(1, 0.5), {40, 80}, Window{1.0, 3.0});
    ASSERT_EQ(c.size(), 2u);
    for (const auto& x : c) {
        EXPECT_GT(x.in_window, 0u);
        EXPECT_EQ(x.persistent, 0u);
    }
}
