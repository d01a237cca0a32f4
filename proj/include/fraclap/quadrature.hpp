#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace fraclap {

/// Nodes and weights of a quadrature rule on a fixed interval.
struct QuadRule {
    std::vector<double> x;
    std::vector<double> w;

    std::size_t size() const { return x.size(); }
};

/// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline QuadRule gauss_legendre(int n) {
    require(n >= 1, "gauss_legendre: n must be positive");
    QuadRule q;
    q.x.resize(n);
    q.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // one more evaluation at the converged node for the weight
        double p1 = 1.0, p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        q.x[i] = -z;
        q.x[n - 1 - i] = z;
        q.w[i] = q.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return q;
}

/// Gauss rule for the weight u^alpha on [0, 1], alpha > -1, by Golub-Welsch.
inline QuadRule gauss_jacobi_unit(int n, double alpha) {
    require(n >= 1, "gauss_jacobi_unit: n must be positive");
    require(alpha > -1.0, "gauss_jacobi_unit: alpha must exceed -1");
    // Jacobi weight (1-x)^a (1+x)^b on [-1,1] with a = 0, b = alpha
    const double a = 0.0, b = alpha, ab = a + b;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const double s = 2.0 * k + ab;
        J(k, k) = (k == 0) ? (b - a) / (ab + 2.0) : (b * b - a * a) / (s * (s + 2.0));
        if (k + 1 < n) {
            const int j = k + 1;
            const double t = 2.0 * j + ab;
            double beta;
            if (j == 1)
                beta = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
            else
                beta = 4.0 * j * (j + a) * (j + b) * (j + ab) / (t * t * (t + 1.0) * (t - 1.0));
            J(k, j) = J(j, k) = std::sqrt(beta);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    const double mu0 = std::pow(2.0, ab + 1.0) * std::exp(std::lgamma(a + 1.0) + std::lgamma(b + 1.0) - std::lgamma(ab + 2.0));
    QuadRule q;
    q.x.resize(n);
    q.w.resize(n);
    // map x in [-1,1] to u = (1+x)/2; (1+x)^b dx = 2^{b+1} u^b du
    const double scale = std::pow(2.0, -(b + 1.0));
    for (int i = 0; i < n; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        q.x[i] = 0.5 * (1.0 + es.eigenvalues()(i));
        q.w[i] = mu0 * v0 * v0 * scale;
    }
    return q;
}

/// Integrate f over [a, b] with a rule on [-1, 1].
template <class F>
auto integrate(const QuadRule& rule, double a, double b, F&& f) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    using R = decltype(f(c));
    R acc{};
    for (std::size_t i = 0; i < rule.size(); ++i) acc += rule.w[i] * f(c + h * rule.x[i]);
    return acc * h;
}

/// Composite rule over the panels given by consecutive breakpoints.
template <class F>
auto integrate_panels(const QuadRule& rule, const std::vector<double>& breaks, F&& f) {
    using R = decltype(f(breaks.front()));
    R acc{};
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) acc += integrate(rule, breaks[p], breaks[p + 1], f);
    return acc;
}

} // namespace fraclap
