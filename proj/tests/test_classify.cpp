#include "dplab/classify.hpp"

#include <gtest/gtest.h>

using namespace dplab;

namespace {

ProblemParams power_case(int N, double p, double q, double r, double lambda, double mu) {
    ProblemParams P;
    P.N = N;
    P.p = p;
    P.q = q;
    P.r = r;
    P.lambda = lambda;
    P.mu = mu;
    return P;
}

ProblemParams weighted_case(int N, double p, double q, double s) {
    ProblemParams P;
    P.N = N;
    P.p = p;
    P.q = q;
    P.s = s;
    P.a0 = 1.0;
    P.b_inf = 1.0;
    P.c0 = 1.0;
    P.C_hp = 1.0;
    return P;
}

bool violated(const CaseTag& t, const std::string& id) {
    for (const auto& c : t.violated_conditions) {
        if (c.id == id) return true;
    }
    return false;
}

} // namespace

TEST(Classify, PowerCases) {
    const double l1 = first_eigenvalue_p(2.0, 5, 1.0);
    EXPECT_NEAR(l1, 20.190729, 1e-5);
    EXPECT_EQ(classify_existence_case(power_case(5, 2.0, 2.2, 2.0, 10.0, 1.0)).theorem, ExistenceCase::Thm1_i);
    EXPECT_EQ(classify_existence_case(power_case(5, 2.0, 2.2, 3.0, 1.0, 1.0)).theorem, ExistenceCase::Thm1_ii);
    // N < p^2: r must exceed (Np - 2N + p)p/((N-p)(p-1)) = 4
    EXPECT_EQ(classify_existence_case(power_case(3, 2.0, 2.5, 5.0, 1.0, 1.0)).theorem, ExistenceCase::Thm1_iii);
    EXPECT_EQ(classify_existence_case(power_case(3, 2.0, 2.5, 3.5, 1.0, 1.0)).theorem, ExistenceCase::None);
}

TEST(Classify, EqualityNEqualsPSquaredCountsAsLowDimension) {
    const double l1 = first_eigenvalue_p(2.0, 4, 1.0);
    EXPECT_EQ(classify_existence_case(power_case(4, 2.0, 2.4, 2.0, 0.5 * l1, 1.0), l1).theorem,
              ExistenceCase::Thm1_i);
}

TEST(Classify, WeightedCases) {
    EXPECT_EQ(classify_existence_case(weighted_case(5, 3.0, 3.5, 11.0)).theorem, ExistenceCase::Thm2_i);
    EXPECT_EQ(classify_existence_case(weighted_case(5, 3.2, 3.5, 11.0)).theorem, ExistenceCase::Thm2_ii);
    auto P = weighted_case(5, 3.0, 3.5, 11.0);
    P.C_hp = 0.0;
    const auto t = classify_existence_case(P);
    EXPECT_EQ(t.theorem, ExistenceCase::None);
    EXPECT_TRUE(violated(t, "Thm2_i:C_hp>0"));
}

TEST(Classify, NoneListsViolations) {
    const double l1 = first_eigenvalue_p(2.0, 5, 1.0);
    const auto t = classify_existence_case(power_case(5, 2.0, 2.2, 2.0, 1.5 * l1, 1.0), l1);
    EXPECT_EQ(t.theorem, ExistenceCase::None);
    EXPECT_TRUE(t.conditions.empty());
    EXPECT_TRUE(violated(t, "Thm1_i:lambda<lambda1"));
    EXPECT_TRUE(violated(t, "Thm1_ii:p<r"));
    EXPECT_TRUE(violated(t, "Thm1_iii:N<p^2"));

    const auto w = classify_existence_case(weighted_case(5, 3.0, 3.5, 4.0), l1, ProblemSelector::weighted);
    EXPECT_EQ(w.theorem, ExistenceCase::None);
    EXPECT_TRUE(violated(w, "Thm2_ii:N(q-1)/(N-1)<=p"));
}

TEST(Classify, SelectorOverridesAutomatic) {
    auto P = weighted_case(5, 3.0, 3.5, 11.0);
    P.lambda = 1.0;
    EXPECT_EQ(classify_existence_case(P).theorem, ExistenceCase::None);
    EXPECT_EQ(classify_existence_case(P, ProblemSelector::weighted).theorem, ExistenceCase::Thm2_i);
}

TEST(Classify, InvalidStructureThrows) {
    EXPECT_THROW(classify_existence_case(power_case(3, 2.0, 2.7, 2.0, 1.0, 1.0), 10.0), PreconditionError);
    EXPECT_THROW(classify_existence_case(power_case(3, 2.0, 1.5, 2.0, 1.0, 1.0)), PreconditionError);
}

TEST(Classify, JsonShape) {
    const nlohmann::json j = classify_existence_case(power_case(5, 2.0, 2.2, 2.0, 10.0, 1.0));
    EXPECT_EQ(j.at("theorem"), "Thm1_i");
    EXPECT_EQ(j.at("conditions").size(), 5u);
    EXPECT_TRUE(j.at("violated_conditions").empty());
}
