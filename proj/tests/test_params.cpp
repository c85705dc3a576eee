#include "dplab/params.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dplab;

namespace {

ProblemParams triple(int N, double p, double q) {
    ProblemParams P;
    P.N = N;
    P.p = p;
    P.q = q;
    return P;
}

bool has_violation(const std::vector<Condition>& v, const std::string& id) {
    for (const auto& c : v) {
        if (c.id == id) return true;
    }
    return false;
}

} // namespace

TEST(SobolevConjugate, Examples) {
    EXPECT_DOUBLE_EQ(sobolev_conjugate(2.0, 4), 4.0);
    EXPECT_DOUBLE_EQ(sobolev_conjugate(2.0, 3), 6.0);
    EXPECT_NEAR(sobolev_conjugate(3.5, 5), 35.0 / 3.0, 1e-14);
}

TEST(SobolevConjugate, RejectsOutOfRange) {
    EXPECT_THROW(sobolev_conjugate(3.0, 3), DomainError);
    EXPECT_THROW(sobolev_conjugate(1.0, 3), DomainError);
    EXPECT_THROW(sobolev_conjugate(4.0, 3), DomainError);
}

TEST(ValidateStructure, Examples) {
    EXPECT_TRUE(validate_structure(triple(3, 2.0, 2.5)).empty());
    const auto v = validate_structure(triple(3, 2.0, 2.7));
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].id, "q/p<1+1/N");
    EXPECT_NEAR(v[0].slack, 4.0 / 3.0 - 1.35, 1e-14);
    EXPECT_TRUE(has_violation(validate_structure(triple(3, 2.0, 2.0)), "p<q"));
}

TEST(ValidateStructure, AZeroNeededWithBInf) {
    auto P = triple(3, 2.0, 2.5);
    P.b_inf = 1.0;
    EXPECT_TRUE(has_violation(validate_structure(P), "a0>0_when_b_inf>0"));
    P.a0 = 0.5;
    EXPECT_TRUE(validate_structure(P).empty());
}

TEST(ValidateStructure, ValidImpliesPStarAboveQ) {
    for (int N = 2; N <= 10; ++N) {
        for (double p = 1.05; p < N; p += 0.15) {
            for (double q = p + 0.01; q < N; q += 0.07) {
                const auto P = triple(N, p, q);
                if (!validate_structure(P).empty()) continue;
                EXPECT_GT(p_star(P), q) << N << " " << p << " " << q;
            }
        }
    }
}

TEST(SuperlinearityThreshold, Examples) {
    EXPECT_DOUBLE_EQ(superlinearity_threshold(3, 2.0), 4.0);
    EXPECT_DOUBLE_EQ(superlinearity_threshold(4, 2.0), 2.0);
    EXPECT_NEAR(superlinearity_threshold(9, 2.0), 4.0 / 7.0, 1e-14);
}

TEST(SuperlinearityThreshold, AbovePExactlyWhenNBelowPSquared) {
    for (int N = 2; N <= 12; ++N) {
        for (double p = 1.03; p < N; p += 0.11) {
            if (std::abs(N - p * p) < 1e-9) continue;
            EXPECT_EQ(superlinearity_threshold(N, p) > p, N < p * p) << N << " " << p;
        }
    }
}

TEST(ArCondition, PowerTermWithRAtPHolds) {
    auto P = triple(5, 2.0, 2.2);
    P.r = 2.0;
    P.lambda = 3.0;
    P.mu = 1.0;
    P.sigma = 2.5;
    std::vector<double> grid;
    for (int i = -50; i <= 50; ++i) grid.push_back(0.1 * i);
    const auto res = check_ar_condition(P, power_subcritical(P), grid, {});
    EXPECT_TRUE(res.holds);
    EXPECT_TRUE(std::isfinite(res.c3));
}

TEST(ArCondition, ZeroNonlinearityHoldsWithZeroConstant) {
    auto P = triple(5, 2.0, 2.2);
    P.mu = 1.0;
    P.sigma = 3.0;
    const auto res = check_ar_condition(P, Nonlinearity{}, {-2.0, -1.0, 0.0, 1.0, 2.0}, {});
    EXPECT_TRUE(res.holds);
    EXPECT_EQ(res.c3, 0.0);
}

TEST(ArCondition, CriticalGrowthWithoutMuFails) {
    auto P = triple(5, 2.0, 2.2);
    P.mu = 0.0;
    P.sigma = 3.0;
    // G - t g / sigma = K |t|^p* (1/sigma - 1/p*) for g = -K |t|^(p*-2) t, which is unbounded
    const Nonlinearity g{{PowerTerm{-50.0, p_star(P), false}}};
    const auto res = check_ar_condition(P, g, {-1.0, -0.5, 0.5, 1.0}, {});
    EXPECT_FALSE(res.holds);
}

TEST(ArCondition, SigmaOutOfRange) {
    auto P = triple(5, 2.0, 2.2);
    P.sigma = 2.0;
    EXPECT_THROW(check_ar_condition(P, Nonlinearity{}, {1.0}, {}), DomainError);
}

TEST(ProblemParamsJson, RoundTripAndRejection) {
    auto P = triple(5, 3.0, 3.5);
    P.s = 11.0;
    P.b_inf = 1.0;
    P.a0 = 2.0;
    P.c_inf = -1.0;
    const nlohmann::json j = P;
    const auto Q = j.get<ProblemParams>();
    EXPECT_EQ(Q.N, 5);
    EXPECT_EQ(Q.s, 11.0);
    EXPECT_EQ(Q.c_inf, -1.0);
    EXPECT_EQ(nlohmann::json(Q), j);

    auto bad = j;
    bad["bogus"] = 1;
    EXPECT_THROW(bad.get<ProblemParams>(), PreconditionError);
    auto missing = j;
    missing.erase("q");
    EXPECT_THROW(missing.get<ProblemParams>(), PreconditionError);
}
