#pragma once

// Case classifier for the two existence results: the power problem with the
// lambda |u|^(r-2) u term, the weighted problem with c(x) |u|^(s-2) u.

#include "dplab/constants.hpp"
#include "dplab/params.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace dplab {

enum class ExistenceCase { Thm1_i, Thm1_ii, Thm1_iii, Thm2_i, Thm2_ii, None };

inline const char* to_string(ExistenceCase c) {
    switch (c) {
    case ExistenceCase::Thm1_i: return "Thm1_i";
    case ExistenceCase::Thm1_ii: return "Thm1_ii";
    case ExistenceCase::Thm1_iii: return "Thm1_iii";
    case ExistenceCase::Thm2_i: return "Thm2_i";
    case ExistenceCase::Thm2_ii: return "Thm2_ii";
    case ExistenceCase::None: return "None";
    }
    return "None";
}

/// Which problem the parameters describe. `automatic` reads lambda > 0 as
/// the power problem and anything else as the weighted problem.
enum class ProblemSelector { automatic, power, weighted };

struct CaseTag {
    ExistenceCase theorem = ExistenceCase::None;
    std::vector<Condition> conditions;          // every evaluated inequality of the matched case
    std::vector<Condition> violated_conditions; // prefixed by case, empty when a case matched
};

namespace detail {

inline bool all_hold(const std::vector<Condition>& cs) {
    for (const auto& c : cs) {
        if (!c.holds) return false;
    }
    return true;
}

inline void collect_violations(const std::string& prefix, const std::vector<Condition>& cs, std::vector<Condition>& out) {
    for (const auto& c : cs) {
        if (!c.holds) {
            Condition v = c;
            v.id = prefix + ":" + c.id;
            out.push_back(std::move(v));
        }
    }
}

} // namespace detail

/// `lambda1` is the first eigenvalue of the p-Laplacian on the domain ball.
inline CaseTag classify_existence_case(const ProblemParams& P, double lambda1,
                                       ProblemSelector sel = ProblemSelector::automatic) {
    require_valid_structure(P);
    const double N = P.N, p = P.p, q = P.q;
    const bool power = sel == ProblemSelector::power || (sel == ProblemSelector::automatic && P.lambda > 0.0);
    CaseTag tag;
    struct Candidate {
        ExistenceCase id;
        const char* prefix;
        std::vector<Condition> cs;
    };
    std::vector<Candidate> cands;
    if (power) {
        const double ps = p_star(P);
        const Condition mu_pos = strict_less("mu>0", 0.0, P.mu);
        const Condition lam_pos = strict_less("lambda>0", 0.0, P.lambda);
        cands.push_back({ExistenceCase::Thm1_i, "Thm1_i",
                         {mu_pos, non_strict_less("N>=p^2", p * p, N), approx_equal("r=p", P.r, p), lam_pos,
                          strict_less("lambda<lambda1", P.lambda, lambda1)}});
        cands.push_back({ExistenceCase::Thm1_ii, "Thm1_ii",
                         {mu_pos, non_strict_less("N>=p^2", p * p, N), strict_less("p<r", p, P.r),
                          strict_less("r<p*", P.r, ps), lam_pos}});
        cands.push_back({ExistenceCase::Thm1_iii, "Thm1_iii",
                         {mu_pos, strict_less("N<p^2", N, p * p),
                          strict_less("threshold<r", superlinearity_threshold(P.N, p), P.r),
                          strict_less("r<p*", P.r, ps), lam_pos}});
    } else {
        const double qs = q_star(P);
        const double pc = N * (q - 1.0) / (N - 1.0);
        std::vector<Condition> common{strict_less("b_inf>0", 0.0, P.b_inf), strict_less("c0>0", 0.0, P.c0),
                                      non_strict_less("mu>=0", 0.0, P.mu)};
        if (P.s >= p_star(P)) common.push_back(strict_less("C_hp>0", 0.0, P.C_hp));
        auto with = [&](std::vector<Condition> extra) {
            std::vector<Condition> cs = common;
            cs.insert(cs.end(), extra.begin(), extra.end());
            return cs;
        };
        cands.push_back({ExistenceCase::Thm2_i, "Thm2_i",
                         with({strict_less("p<N(q-1)/(N-1)", p, pc),
                               strict_less("N^2(q-1)/((N-1)(N-q))<s", N * N * (q - 1.0) / ((N - 1.0) * (N - q)), P.s),
                               strict_less("s<q*", P.s, qs)})});
        cands.push_back({ExistenceCase::Thm2_ii, "Thm2_ii",
                         with({non_strict_less("N(q-1)/(N-1)<=p", pc, p), strict_less("Np/(N-q)<s", N * p / (N - q), P.s),
                               strict_less("s<q*", P.s, qs)})});
    }
    for (auto& c : cands) {
        if (detail::all_hold(c.cs)) {
            tag.theorem = c.id;
            tag.conditions = c.cs;
            return tag;
        }
    }
    for (const auto& c : cands) detail::collect_violations(c.prefix, c.cs, tag.violated_conditions);
    return tag;
}

/// Same, with lambda1 computed on the ball of radius P.domain_radius.
inline CaseTag classify_existence_case(const ProblemParams& P, ProblemSelector sel = ProblemSelector::automatic) {
    require_valid_structure(P);
    return classify_existence_case(P, first_eigenvalue_p(P.p, P.N, P.domain_radius), sel);
}

inline void to_json(nlohmann::json& j, const CaseTag& t) {
    j = nlohmann::json{{"theorem", to_string(t.theorem)},
                       {"conditions", t.conditions},
                       {"violated_conditions", t.violated_conditions}};
}

} // namespace dplab
