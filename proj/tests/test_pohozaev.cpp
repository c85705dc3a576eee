#include "dplab/pohozaev.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace dplab;

namespace {

ProblemParams make(int N, double p, double q) {
    ProblemParams P;
    P.N = N;
    P.p = p;
    P.q = q;
    return P;
}

bool lists(const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

} // namespace

TEST(PohozaevIdentity, LinearTorsionBothSides) {
    // u = (1 - r^2)/6 on the unit ball of R^3: both sides equal 56 pi / 675
    const auto P = make(3, 2.0, 2.5);
    const auto f = SourceTerm::torsion();
    const auto a = CoefficientField::zero();
    const double exact = 56.0 * std::numbers::pi / 675.0;
    double prev = 0.0;
    for (std::size_t n : {1024u, 2048u}) {
        const auto sol = solve_radial_bvp(P, a, f, n).solution;
        const auto rep = evaluate_identity(sol, P, a, f);
        EXPECT_NEAR(rep.rhs / exact, 1.0, 1e-5);
        EXPECT_NEAR(rep.lhs_total / exact, 1.0, 1e-5);
        EXPECT_NEAR(rep.term_boundary, 4.0 * std::numbers::pi / 54.0, 1e-10);
        EXPECT_EQ(rep.term_grad_a, 0.0);
        if (prev > 0.0) EXPECT_GT(prev / rep.residual_abs, 3.5);
        prev = rep.residual_abs;
    }
}

TEST(PohozaevIdentity, ZeroSolution) {
    const auto P = make(3, 2.0, 2.5);
    const SourceTerm f{};
    const auto a = CoefficientField::constant(1.0);
    const auto sol = solve_radial_bvp(P, a, f, 256).solution;
    const auto rep = evaluate_identity(sol, P, a, f);
    EXPECT_EQ(rep.lhs_total, 0.0);
    EXPECT_EQ(rep.rhs, 0.0);
    EXPECT_EQ(rep.residual_abs, 0.0);
}

TEST(PohozaevIdentity, DoublePhaseVariableCoefficient) {
    const auto P = make(3, 2.0, 2.5);
    const auto f = SourceTerm::torsion();
    const CoefficientField a{1.0, 1.0, 2.0};
    const auto sol = solve_radial_bvp(P, a, f, 4096).solution;
    const auto rep = evaluate_identity(sol, P, a, f);
    EXPECT_LE(rep.residual_rel, 1e-6);
    EXPECT_GT(rep.term_grad_a, 0.0);
    EXPECT_GT(rep.term_grad_p, 0.0);
    EXPECT_GT(rep.term_boundary, 0.0);

    const auto c = CoefficientField::constant(2.0);
    const auto sol_c = solve_radial_bvp(P, c, f, 1024).solution;
    EXPECT_EQ(evaluate_identity(sol_c, P, c, f).term_grad_a, 0.0);
}

TEST(PohozaevIdentity, RefusesNonSolutions) {
    const auto P = make(3, 2.0, 2.5);
    const auto f = SourceTerm::torsion();
    const auto a = CoefficientField::zero();
    auto sol = solve_radial_bvp(P, a, f, 512).solution;
    auto broken = sol;
    for (std::size_t i = 0; i < broken.flux.size(); i += 7) broken.flux[i] *= 1.01;
    EXPECT_THROW(evaluate_identity(broken, P, a, f), PreconditionError);
    EXPECT_THROW(evaluate_identity(sol, make(4, 2.0, 2.5), a, f), PreconditionError);
    EXPECT_THROW(evaluate_identity(sol, P, a, SourceTerm::torsion(2.0)), PreconditionError);
}

TEST(NonexistenceVerdict, Cases) {
    auto P = make(5, 2.0, 2.2);
    P.r = 2.0;
    const auto C = make_constants_table(P);
    const double thr = C.lambda1_p * 1.0 / 5.4;
    EXPECT_NEAR(nonexistence_threshold(P, C.lambda1_p), thr, 1e-12);

    P.c_inf = -1.0;
    auto v = nonexistence_verdict(P, C, false);
    EXPECT_TRUE(v.applicable);
    EXPECT_EQ(v.which, NonexistenceCase::nonex_i);

    P.c_inf = 0.5 * thr;
    v = nonexistence_verdict(P, C, false);
    EXPECT_EQ(v.which, NonexistenceCase::nonex_ii);
    EXPECT_NEAR(v.margin, 0.5 * thr, 1e-12);

    P.c_inf = thr;
    EXPECT_EQ(nonexistence_verdict(P, C, true).which, NonexistenceCase::nonex_iii);
    v = nonexistence_verdict(P, C, false);
    EXPECT_FALSE(v.applicable);
    EXPECT_TRUE(lists(v.failed_hypotheses, "strictly_starshaped"));

    P.c_inf = 2.0 * thr;
    v = nonexistence_verdict(P, C, true);
    EXPECT_FALSE(v.applicable);
    EXPECT_TRUE(lists(v.failed_hypotheses, "c_inf<=threshold"));

    P.r = 3.0;
    P.c_inf = 1.0;
    v = nonexistence_verdict(P, C, true);
    EXPECT_TRUE(lists(v.failed_hypotheses, "c<=0"));
    EXPECT_TRUE(lists(v.failed_hypotheses, "r=p"));

    P.mu = 1.0;
    P.c_inf = -1.0;
    EXPECT_TRUE(lists(nonexistence_verdict(P, C, true).failed_hypotheses, "mu<=0"));

    auto Q = make(3, 2.0, 2.7);
    EXPECT_TRUE(lists(nonexistence_verdict(Q, C, true).failed_hypotheses, "q/p<1+1/N"));
}

TEST(SmallNorm, SingleTermClosedForm) {
    auto P = make(5, 2.0, 2.2);
    P.r = 2.5;
    P.c_inf = 3.0;
    const auto C = make_constants_table(P);
    const auto cert = small_norm_certificate(P, C);
    EXPECT_EQ(cert.which, NonexistenceCase::small_i);

    const double qs = 5 * 2.2 / 2.8, g = 2.0 * qs, ps = 10.0 / 3.0;
    const double vol = std::pow(std::numbers::pi, 2.5) / std::tgamma(3.5);
    const double CS = std::pow(vol, 1.0 - 2.5 / ps) * std::pow(talenti_constant(2.0, 5), -1.25);
    const double L = 1.0 / qs - 1.0 / g;
    const double c = (1.0 / 2.5 - 1.0 / g) * 3.0 * CS;
    const double rho = std::pow(L / c, 1.0 / 0.25);
    EXPECT_NEAR(cert.rho_bar / rho, 1.0, 1e-12);
    EXPECT_NEAR(cert.kappa, rho <= 1.0 ? std::sqrt(rho) : std::pow(rho, 1.0 / 2.2), 1e-12 * cert.kappa);
}

TEST(SmallNorm, MonotoneInCoefficientBound) {
    auto P = make(5, 2.0, 2.2);
    P.r = 2.5;
    P.mu = 1.0;
    P.b_inf = 1.0;
    P.a0 = 1.0;
    const auto C = make_constants_table(P);
    double prev = HUGE_VAL;
    for (double c : {1e-6, 1e-3, 1.0, 10.0, 1e3}) {
        P.c_inf = c;
        const double k = small_norm_radius(P, C);
        EXPECT_LE(k, prev) << c;
        prev = k;
    }
}

TEST(SmallNorm, CapAndErrors) {
    auto P = make(5, 2.0, 2.2);
    P.r = 2.5;
    P.c_inf = 1e-60;
    const auto C = make_constants_table(P);
    const auto cert = small_norm_certificate(P, C);
    EXPECT_TRUE(cert.capped);
    EXPECT_EQ(cert.rho_bar, kSmallNormCap);

    P.r = 2.0;
    P.c_inf = 1.0;
    EXPECT_THROW(small_norm_certificate(P, C), PreconditionError);
    P.r = 2.5;
    P.c_inf = 0.0;
    EXPECT_THROW(small_norm_certificate(P, C), PreconditionError);
    P.c_inf = 1.0;
    EXPECT_THROW(small_norm_certificate(P, C, 1.0), PreconditionError);
}

TEST(SmallNorm, ModularCaseBoundedByOne) {
    auto P = make(5, 3.0, 3.5);
    P.r = 12.0; // p* = 7.5 < r < q* = 11.67
    P.c_inf = 1.0;
    P.b_inf = 1.0;
    P.a0 = 1.0;
    P.C_hp = 1.0;
    P.sigma = 5.0;
    const auto C = make_constants_table(P);
    EXPECT_THROW(small_norm_certificate(P, C, std::nullopt, {}, SmallCase::ii), PreconditionError);
    P.r = 10.0;
    const auto cert = small_norm_certificate(P, C, std::nullopt, {{"C_S_prime", 2.0}}, SmallCase::ii);
    EXPECT_EQ(cert.which, NonexistenceCase::small_ii);
    EXPECT_LE(cert.kappa, 1.0);
    EXPECT_GT(cert.kappa, 0.0);
    const double pq = 3.0 * q_star(P) / 3.5;
    EXPECT_NEAR(cert.terms[2].second, pq, 1e-14);
    EXPECT_GT(pq, 3.5);
    EXPECT_EQ(small_norm_certificate(P, C).which, NonexistenceCase::small_iii);
}
