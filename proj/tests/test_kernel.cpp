#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <fraclap/kernel.hpp>

using namespace fraclap;

TEST(BinomialCoeff, KnownValues) {
    EXPECT_DOUBLE_EQ(binomial_coeff(3, 2), 3.0);
    EXPECT_DOUBLE_EQ(binomial_coeff(0.5, 2), -0.125);
    EXPECT_DOUBLE_EQ(binomial_coeff(-1, 3), -1.0);
    EXPECT_DOUBLE_EQ(binomial_coeff(2.5, 0), 1.0);
    EXPECT_THROW(binomial_coeff(1.0, -1), InvalidArgument);
}

TEST(KernelTable, IntegerOrdersAreExactStencils) {
    EXPECT_EQ(kernel_table(1.0, 4).coeffs, (std::vector<double>{2, -1, 0, 0, 0}));
    EXPECT_EQ(kernel_table(2.0, 4).coeffs, (std::vector<double>{6, -4, 1, 0, 0}));
    EXPECT_EQ(kernel_table(0.0, 4).coeffs, (std::vector<double>{1, 0, 0, 0, 0}));
    EXPECT_TRUE(kernel_table(3.0, 2).finite_support());
}

TEST(KernelTable, SymmetricLookupAndRange) {
    const auto t = kernel_table(0.5, 10);
    EXPECT_EQ(t(-3), t(3));
    EXPECT_THROW(t(11), InvalidArgument);
}

TEST(KernelTable, HalfOrderSignPattern) {
    const auto t = kernel_table(0.5, 30);
    EXPECT_NEAR(t(0), 4.0 / std::numbers::pi, 1e-12);
    for (long k = 1; k <= 30; ++k) EXPECT_LT(t(k), 0.0) << "k=" << k;
}

TEST(KernelTable, MatchesClosedFormForNonIntegerOrders) {
    for (double r : {0.25, 0.75, 1.5, -0.25, -0.4}) {
        const auto t = kernel_table(r, 20);
        for (long k = 0; k <= 20; ++k) EXPECT_NEAR(t(k), series_limit(r, k), 1e-10) << "r=" << r << " k=" << k;
    }
}

TEST(KernelTable, ErrorEstimateIsSmall) {
    const auto t = kernel_table(0.3, 50);
    for (double e : t.error) EXPECT_LT(e, 1e-10);
}

TEST(KernelTable, CoefficientsReproduceSymbolWithTail) {
    // sum_k a_r(k) e^{ik theta} at theta = 0 is the symbol value 0
    const auto t = kernel_table(0.75, 2000);
    double s = t(0);
    for (long k = 1; k <= t.K; ++k) s += 2.0 * t(k);
    EXPECT_NEAR(s + tail_signed_sum(t), 0.0, 1e-6);
    EXPECT_TRUE(tail_abs_sum(t).is_finite());
    EXPECT_EQ(tail_abs_sum(kernel_table(2.0, 3)).value(), 0.0);
}

TEST(SeriesCoeffs, IntegerOrdersTerminate) {
    const auto a = series_coeffs(1.0, 1);
    EXPECT_DOUBLE_EQ(a(0), 2.0);
    EXPECT_DOUBLE_EQ(a(1), -1.0);
    EXPECT_DOUBLE_EQ(a(-1), -1.0);
    const auto b = series_coeffs(2.0, 2);
    EXPECT_NEAR(b(0), 6.0, 1e-14);
    EXPECT_NEAR(b(1), -4.0, 1e-14);
    EXPECT_NEAR(b(2), 1.0, 1e-14);
    EXPECT_NEAR(b(-2), 1.0, 1e-14);
}

TEST(SeriesCoeffs, PartialSumWithinTailEstimate) {
    for (double r : {0.25, 0.5, 1.5}) {
        const auto s = series_coeffs(r, 400);
        for (long k = 0; k <= 10; ++k) {
            const double err = std::abs(s(k) - series_limit(r, k));
            EXPECT_LT(err, 2.0 * series_tail_estimate(r, 400, k)) << "r=" << r << " k=" << k;
        }
    }
}

TEST(DecayFit, ExponentForHalfOrder) {
    const auto f = decay_fit(kernel_table(0.5, 1000));
    EXPECT_NEAR(f.slope, -2.0, 0.02);
    EXPECT_LT(f.c, 0.0);
    EXPECT_THROW(decay_fit(kernel_table(1.0, 100)), InvalidArgument);
}

TEST(Semigroup, TorusResidualAtRoundoff) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<double> f(128);
    for (auto& x : f) x = u(rng);
    EXPECT_LT(semigroup_residual_torus(0.5, 0.5, 128, f), 1e-12);
    EXPECT_LT(semigroup_residual_torus(-0.3, 1.2, 128, f), 1e-12);
    EXPECT_LT(semigroup_residual_torus(0.7, -0.7, 128, f), 1e-12);
}

TEST(Semigroup, SeriesResidualSmallForIntegers) {
    Sequence f{-2, {1.0, -0.5, 0.25, 2.0, 0.0}};
    EXPECT_LT(semigroup_residual_series(1.0, 1.0, 4, f), 1e-12);
}

TEST(Convolve, StencilOnDelta) {
    Sequence d{0, {1.0}};
    const auto c = convolve(kernel_table(1.0, 2), d);
    EXPECT_EQ(c.result.at(0), 2.0);
    EXPECT_EQ(c.result.at(1), -1.0);
    EXPECT_EQ(c.result.at(-1), -1.0);
    EXPECT_EQ(c.result.at(2), 0.0);
    EXPECT_EQ(c.tail_bound.value(), 0.0);
}

TEST(Convolve, LinearInInput) {
    const auto t = kernel_table(0.5, 8);
    Sequence f{3, {1.0, 2.0}};
    const auto c = convolve(t, f);
    for (long n = -6; n <= 14; ++n) EXPECT_NEAR(c.result.at(n), (std::abs(n - 3) <= 8 ? t(n - 3) : 0.0) + (std::abs(n - 4) <= 8 ? 2.0 * t(n - 4) : 0.0), 1e-15);
}

TEST(KernelCsv, HeaderAndRows) {
    std::ostringstream os;
    write_kernel_csv(os, kernel_table(1.0, 2));
    EXPECT_EQ(os.str(), "k [lattice units],a_r(k) [dimensionless],error [dimensionless]\n0,2,0\n1,-1,0\n2,0,0\n");
}

TEST(KernelCache, RoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "fraclap_kernel_cache_test";
    std::filesystem::remove_all(dir);
    const auto a = cached_kernel_table(dir, 0.4, 12);
    const auto b = load_kernel_cache(dir, 0.4, 12, {});
    ASSERT_TRUE(b.has_value());
    EXPECT_EQ(a.coeffs, b->coeffs);
    EXPECT_FALSE(load_kernel_cache(dir, 0.4, 13, {}).has_value());
    QuadSpec other;
    other.gauss_nodes = 24;
    EXPECT_FALSE(load_kernel_cache(dir, 0.4, 12, other).has_value());
    std::filesystem::remove_all(dir);
}
