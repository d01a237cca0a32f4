#include <cmath>

#include <gtest/gtest.h>

#include <fraclap/conjugate.hpp>

using namespace fraclap;

TEST(Conjugate, GeneratorIsAntisymmetricAndAIsHermitian) {
    const auto A = build_conjugate(build_box(FractionalOrder{0.5, 1.0}, 3));
    EXPECT_EQ((A.generator + A.generator.transpose()).cwiseAbs().maxCoeff(), 0.0);
    const Eigen::MatrixXcd H = A.hermitian();
    EXPECT_EQ((H - H.adjoint()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Conjugate, ActionOnDeltaIsNearestNeighbour) {
    const auto box = build_box(FractionalOrder{1.0}, 5);
    const auto A = build_conjugate(box);
    Eigen::VectorXcd d = Eigen::VectorXcd::Zero(11);
    d(5) = 1.0;
    const Eigen::VectorXcd y = A.apply(d);
    for (Eigen::Index i = 0; i < 11; ++i) {
        if (i == 4 || i == 6) EXPECT_GT(std::abs(y(i)), 0.0);
        else EXPECT_EQ(std::abs(y(i)), 0.0);
    }
}

TEST(Conjugate, NegativeOrderFlipsSign) {
    const LatticeGeometry g{1, 9, -4};
    const auto p = build_conjugate(FractionalOrder{1.0}, g), m = build_conjugate(FractionalOrder{-1.0}, g);
    EXPECT_EQ((p.generator + m.generator).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(m.signs, std::vector<int>{-1});
    const auto z = build_conjugate(FractionalOrder{1.0, 0.0}, LatticeGeometry{2, 5, -2});
    EXPECT_EQ(z.signs, (std::vector<int>{1, 0}));
}

TEST(Conjugate, LaplacianCommutatorInTheInterior) {
    // [Delta, G] = Delta (4 - Delta) / 2 away from the box edge
    const long L = 20;
    const auto box = build_box(FractionalOrder{1.0}, L);
    const auto A = build_conjugate(box);
    const Eigen::MatrixXd& D = box.matrix;
    const Eigen::MatrixXd C = commutator(D, A.generator);
    const Eigen::MatrixXd P = 0.5 * (4.0 * D - D * D);
    for (long i = 3; i < 2 * L - 2; ++i)
        for (long j = 0; j <= 2 * L; ++j) EXPECT_NEAR(C(i, j), P(i, j), 1e-12) << i << "," << j;
}

TEST(Conjugate, CommutatorFormMatchesMatrix) {
    const auto box = build_box(FractionalOrder{0.5}, 6);
    const auto A = build_conjugate(box);
    Eigen::VectorXcd f(13), g(13);
    for (int i = 0; i < 13; ++i) {
        f(i) = cplx(std::sin(i + 0.5), std::cos(2.0 * i));
        g(i) = cplx(std::cos(i * 0.7), -std::sin(i + 1.0));
    }
    const cplx direct = f.dot(commutator(box.matrix, A.generator).cast<cplx>() * g);
    EXPECT_LT(std::abs(commutator_form(box.matrix, A, f, g) - direct), 1e-12);
    // [H, iA] is Hermitian, so the diagonal form is real
    EXPECT_LT(std::abs(commutator_form(box.matrix, A, f, f).imag()), 1e-12);
}

TEST(Conjugate, PredictedFunctions) {
    EXPECT_DOUBLE_EQ(tau1(1.0, 2.0), 2.0);
    EXPECT_NEAR(tau2(1.0, 1.0), 1.0 * 3.0 * 1.0 / 2.0, 1e-15);
    EXPECT_NEAR(predicted_mourre_constant(1.0, Window{1.0, 3.0}), 1.5, 1e-12);
    EXPECT_EQ(predicted_mourre_constant(1.0, Window{0.0, 1.0}), 0.0);
}

TEST(Conjugate, FirstCommutatorResidualShrinksWithL) {
    CommutatorOptions o;
    o.localization.seed_radius = 12;
    const Window I{0.5, 1.5};
    const auto a = first_commutator_residual(build_box(FractionalOrder{0.5}, 50), I, o);
    const auto b = first_commutator_residual(build_box(FractionalOrder{0.5}, 100), I, o);
    EXPECT_GT(a.kept, 0u);
    EXPECT_LT(b.identity_residual, a.identity_residual / 1.5);
}

TEST(Conjugate, SecondCommutatorResidualShrinksWithL) {
    CommutatorOptions o;
    o.localization.seed_radius = 12;
    const Window I{1.0, 3.0};
    const auto a = second_commutator_residual(build_box(FractionalOrder{1.0}, 50), I, o);
    const auto b = second_commutator_residual(build_box(FractionalOrder{1.0}, 100), I, o);
    EXPECT_LT(b.identity_residual, a.identity_residual / 1.5);
}

TEST(Conjugate, WindowsTouchingThresholdsAreRefused) {
    const auto box = build_box(FractionalOrder{1.0}, 20);
    EXPECT_THROW(first_commutator_residual(box, Window{3.0, 4.5}), ThresholdGuardError);
    EXPECT_THROW(second_commutator_residual(box, Window{0.0, 1.0}), ThresholdGuardError);
}

TEST(Conjugate, MourrePositiveInsideDegenerateAtEdge) {
    CommutatorOptions o;
    o.localization.seed_radius = 12;
    const auto box = build_box(FractionalOrder{1.0}, 60);
    const auto in = mourre_constant(box, Window{1.0, 3.0}, o);
    EXPECT_GT(in.mourre_constant, 0.9);
    EXPECT_NEAR(in.predicted_constant, 1.5, 1e-12);
    const auto edge = mourre_constant(box, Window{3.9, 4.0}, o);
    EXPECT_LT(edge.mourre_constant, 0.2);
}
