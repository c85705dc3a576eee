#include "dplab/constants.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace dplab;

namespace {

// Rayleigh quotient of U(r) = (1 + r^m')^(-(N-m)/m), trapezoid in x = log r.
double rayleigh_oracle(double m, int N) {
    const double mp = m / (m - 1.0);
    const double ms = N * m / (N - m);
    const double omega = 2.0 * std::pow(std::numbers::pi, N / 2.0) / std::tgamma(N / 2.0);
    double grad = 0.0;
    double mass = 0.0;
    const double h = 1e-3;
    for (double x = -60.0; x <= 60.0; x += h) {
        const double r = std::exp(x);
        const double base = 1.0 + std::pow(r, mp);
        const double U = std::pow(base, -(N - m) / m);
        const double dU = (N - m) / m * mp * std::pow(r, mp - 1.0) * std::pow(base, -N / m);
        grad += std::pow(r, N) * std::pow(dU, m) * h;
        mass += std::pow(r, N) * std::pow(U, ms) * h;
    }
    return omega * grad / std::pow(omega * mass, m / ms);
}

double bessel_first_zero(double nu) {
    double lo = 1e-3;
    double hi = lo;
    while (std::cyl_bessel_j(nu, hi) > 0.0) hi += 0.05;
    lo = hi - 0.05;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::cyl_bessel_j(nu, mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST(SobolevConstant, ThreeDimensionalLaplacian) {
    const double expected = 3.0 * std::pow(std::numbers::pi / 2.0, 4.0 / 3.0);
    EXPECT_NEAR(talenti_constant(2.0, 3), expected, 1e-12);
    EXPECT_NEAR(best_sobolev_constant(2.0, 3), 5.4779, 1e-4);
}

TEST(SobolevConstant, ClosedFormMatchesIndependentQuadrature) {
    for (auto [m, N] : {std::pair{2.0, 3}, {2.0, 5}, {1.5, 4}, {3.0, 5}, {3.5, 5}, {2.2, 4}}) {
        const double oracle = rayleigh_oracle(m, N);
        EXPECT_NEAR(talenti_constant(m, N) / oracle, 1.0, 1e-8) << m << " " << N;
        const auto rep = sobolev_constant_report(m, N);
        EXPECT_LT(rep.rel_diff, 1e-8);
        EXPECT_NEAR(rep.value / oracle, 1.0, 1e-8);
    }
}

TEST(SobolevConstant, DilationInvariant) {
    for (double eps : {0.01, 0.3, 1.0, 7.0}) {
        EXPECT_NEAR(sobolev_rayleigh_quotient(2.5, 4, eps) / talenti_constant(2.5, 4), 1.0, 1e-9) << eps;
    }
}

TEST(SobolevConstant, RejectsOutOfRange) {
    EXPECT_THROW(talenti_constant(3.0, 3), DomainError);
    EXPECT_THROW(talenti_constant(1.0, 3), DomainError);
}

TEST(FirstEigenvalue, LinearCaseMatchesBesselZero) {
    EXPECT_NEAR(first_eigenvalue_p(2.0, 3, 1.0), std::numbers::pi * std::numbers::pi, 1e-6);
    for (int N : {2, 4, 5}) {
        const double j = bessel_first_zero(N / 2.0 - 1.0);
        EXPECT_NEAR(first_eigenvalue_p(2.0, N, 1.0) / (j * j), 1.0, 1e-7) << N;
    }
}

TEST(FirstEigenvalue, RadiusScaling) {
    for (double p : {1.5, 2.0, 3.0}) {
        const double l1 = first_eigenvalue_p(p, 4, 1.0);
        const double l2 = first_eigenvalue_p(p, 4, 2.0);
        EXPECT_NEAR(l2 * std::pow(2.0, p) / l1, 1.0, 1e-8) << p;
    }
}

TEST(InvertFlux, Examples) {
    EXPECT_DOUBLE_EQ(invert_flux(0.0, 1.0, 2.0, 3.0), 0.0);
    // s + s^2 = 2 at s = 1
    EXPECT_NEAR(invert_flux(2.0, 1.0, 2.0, 3.0), 1.0, 1e-14);
    EXPECT_NEAR(invert_flux(-2.0, 1.0, 2.0, 3.0), -1.0, 1e-14);
    EXPECT_NEAR(invert_flux(8.0, 0.0, 4.0, 5.0), 2.0, 1e-14);
    EXPECT_THROW(invert_flux(1.0, -1.0, 2.0, 3.0), DomainError);
}

TEST(InvertFlux, RandomRoundTripAndOddness) {
    std::mt19937 rng(20261016);
    std::uniform_real_distribution<double> up(1.1, 4.0);
    std::uniform_real_distribution<double> la(-8.0, 8.0);
    std::uniform_real_distribution<double> ua(0.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
        const double p = up(rng);
        const double q = p + 0.5 * up(rng);
        const double a = ua(rng);
        const double s = std::copysign(std::pow(10.0, la(rng)), la(rng));
        const double w = flux_map(s, a, p, q);
        const double back = invert_flux(w, a, p, q);
        EXPECT_NEAR(back / s, 1.0, 1e-10) << p << " " << q << " " << a << " " << s;
        EXPECT_EQ(invert_flux(-w, a, p, q), -back);
    }
}

TEST(ConstantsCache, RoundTrip) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "dplab_constants_cache_test";
    fs::remove_all(dir);
    ProblemParams P;
    P.N = 4;
    P.p = 2.0;
    P.q = 2.4;
    const auto first = cached_constants_table(P, dir);
    EXPECT_TRUE(fs::exists(dir / constants_cache_key(2.0, 2.4, 4, 1.0)));
    const auto second = cached_constants_table(P, dir);
    EXPECT_EQ(first.S_p, second.S_p);
    EXPECT_EQ(first.S_q, second.S_q);
    EXPECT_EQ(first.lambda1_p, second.lambda1_p);
    EXPECT_NEAR(first.S_p / talenti_constant(2.0, 4), 1.0, 1e-9);
    fs::remove_all(dir);
}
