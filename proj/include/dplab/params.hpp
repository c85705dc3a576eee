#pragma once

// Problem data for the critical double phase problems, exponent algebra,
// structural validation and the Ambrosetti-Rabinowitz type growth checker.

#include "dplab/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace dplab {

/// One problem instance. Field names double as the JSON keys.
///
/// `mu` is signed so the nonexistence predicates can see mu <= 0. `c_inf` is
/// the sup norm of c; a nonpositive value encodes "c <= 0 a.e." with
/// |c_inf| as the norm (the sign of c is all the predicates need beyond it).
struct ProblemParams {
    int N = 3;
    double p = 2.0;
    double q = 2.5;
    double r = 2.0;
    double s = 0.0;
    double sigma = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    double b_inf = 0.0;
    double a0 = 0.0;
    double c0 = 0.0;
    double c_inf = 0.0;
    double C_hp = 0.0;
    double domain_radius = 1.0;

    bool operator==(const ProblemParams&) const = default;
};

/// Strict inequalities whose slack is below this are reported as violated.
inline constexpr double kBoundaryTol = 1e-12;

/// m* = N m / (N - m).
inline double sobolev_conjugate(double m, int N) {
    if (!(m > 1.0) || !(m < N)) {
        throw DomainError("sobolev_conjugate: need 1 < m < N (m = " + std::to_string(m) +
                          ", N = " + std::to_string(N) + ")");
    }
    return N * m / (N - m);
}

inline double p_star(const ProblemParams& P) { return sobolev_conjugate(P.p, P.N); }
inline double q_star(const ProblemParams& P) { return sobolev_conjugate(P.q, P.N); }

/// Lower end of the admissible r-range in the N < p^2 regime:
/// (Np - 2N + p) p / ((N - p)(p - 1)).
inline double superlinearity_threshold(int N, double p) {
    if (!(p > 1.0) || !(p < N)) throw DomainError("superlinearity_threshold: need 1 < p < N");
    return (N * p - 2.0 * N + p) * p / ((N - p) * (p - 1.0));
}

/// A single evaluated inequality. `slack` is signed: positive means it holds
/// with that much room.
struct Condition {
    std::string id;
    double slack = 0.0;
    bool holds = false;
    bool boundary = false;
};

/// lhs < rhs, with a near-zero slack counted as a boundary violation.
inline Condition strict_less(std::string id, double lhs, double rhs) {
    const double slack = rhs - lhs;
    const bool boundary = std::abs(slack) < kBoundaryTol;
    return {std::move(id), slack, slack > 0.0 && !boundary, boundary};
}

/// lhs <= rhs (non-strict). Equality within tolerance holds.
inline Condition non_strict_less(std::string id, double lhs, double rhs) {
    const double slack = rhs - lhs;
    return {std::move(id), slack, slack > -kBoundaryTol, std::abs(slack) < kBoundaryTol};
}

inline Condition approx_equal(std::string id, double lhs, double rhs) {
    const double gap = std::abs(lhs - rhs);
    return {std::move(id), -gap, gap <= kBoundaryTol, false};
}

/// Every violated structural inequality with its slack; empty means valid.
inline std::vector<Condition> validate_structure(const ProblemParams& P) {
    std::vector<Condition> all;
    all.push_back(non_strict_less("N>=2", 2.0, P.N));
    all.push_back(strict_less("p>1", 1.0, P.p));
    all.push_back(strict_less("p<q", P.p, P.q));
    all.push_back(strict_less("q<N", P.q, P.N));
    all.push_back(strict_less("q/p<1+1/N", P.q / P.p, 1.0 + 1.0 / P.N));
    if (P.b_inf > 0.0) all.push_back(strict_less("a0>0_when_b_inf>0", 0.0, P.a0));
    all.push_back(non_strict_less("lambda>=0", 0.0, P.lambda));
    all.push_back(non_strict_less("b_inf>=0", 0.0, P.b_inf));
    all.push_back(non_strict_less("c0>=0", 0.0, P.c0));
    all.push_back(strict_less("domain_radius>0", 0.0, P.domain_radius));

    std::vector<Condition> violations;
    for (auto& c : all) {
        if (!c.holds) violations.push_back(std::move(c));
    }
    return violations;
}

inline void require_valid_structure(const ProblemParams& P) {
    const auto v = validate_structure(P);
    if (!v.empty()) {
        std::string msg = "invalid problem structure:";
        for (const auto& c : v) msg += " " + c.id;
        throw PreconditionError(msg);
    }
}

// ---------------------------------------------------------------------------
// Growth condition G(x,t) - t g(x,t)/sigma <= mu (1/sigma - 1/p*) |t|^p* + c3
// ---------------------------------------------------------------------------

/// coefficient * |t|^(exponent-2) t, optionally multiplied by a spatial sample c(x).
struct PowerTerm {
    double coefficient = 0.0;
    double exponent = 2.0;
    bool spatial = false;
};

/// Subcritical part g of the nonlinearity as a sum of power terms.
struct Nonlinearity {
    std::vector<PowerTerm> terms;

    [[nodiscard]] double g(double t, double cx) const {
        double sum = 0.0;
        for (const auto& term : terms) {
            const double c = term.coefficient * (term.spatial ? cx : 1.0);
            sum += c * std::pow(std::abs(t), term.exponent - 2.0) * t;
        }
        return sum;
    }

    [[nodiscard]] double G(double t, double cx) const {
        double sum = 0.0;
        for (const auto& term : terms) {
            const double c = term.coefficient * (term.spatial ? cx : 1.0);
            sum += c * std::pow(std::abs(t), term.exponent) / term.exponent;
        }
        return sum;
    }

    [[nodiscard]] double max_exponent() const {
        double e = 0.0;
        for (const auto& term : terms) e = std::max(e, term.exponent);
        return e;
    }
};

/// Subcritical term of the power problem: lambda |t|^(r-2) t.
inline Nonlinearity power_subcritical(const ProblemParams& P) {
    return {{PowerTerm{P.lambda, P.r, false}}};
}

/// Subcritical term of the weighted problem: c(x) |t|^(s-2) t.
inline Nonlinearity weighted_subcritical(const ProblemParams& P) {
    return {{PowerTerm{1.0, P.s, true}}};
}

struct ArCheckResult {
    bool holds = false;
    double c3 = 0.0;     // smallest constant found on the final grid
    double T = 0.0;      // half-width of the final grid
    int doublings = 0;
};

/// Evaluates the growth condition on t_grid, widening it by successive
/// doublings (each widened grid keeps all earlier points). The condition holds
/// when the clipped worst gap stabilises over two consecutive doublings.
inline ArCheckResult check_ar_condition(const ProblemParams& P, const Nonlinearity& g,
                                        const std::vector<double>& t_grid,
                                        const std::vector<double>& x_samples) {
    const double ps = p_star(P);
    if (!(P.sigma > P.q) || !(P.sigma < ps)) {
        throw DomainError("check_ar_condition: sigma must lie in (q, p*)");
    }
    if (t_grid.empty()) throw DomainError("check_ar_condition: empty t grid");
    const std::vector<double> xs = x_samples.empty() ? std::vector<double>{1.0} : x_samples;
    const double growth = P.mu * (1.0 / P.sigma - 1.0 / ps);

    auto worst_gap = [&](double scale) {
        double worst = 0.0;
        for (double t0 : t_grid) {
            const double t = t0 * scale;
            for (double cx : xs) {
                const double lhs = g.G(t, cx) - t * g.g(t, cx) / P.sigma;
                const double gap = lhs - growth * std::pow(std::abs(t), ps);
                if (!std::isfinite(gap)) return std::numeric_limits<double>::infinity();
                worst = std::max(worst, gap);
            }
        }
        return worst;
    };

    double T0 = 0.0;
    for (double t : t_grid) T0 = std::max(T0, std::abs(t));
    const double e_max = std::max({ps, g.max_exponent(), 1.0});
    const double T_cap = std::pow(1e290, 1.0 / e_max);

    ArCheckResult out;
    double c_prev2 = std::numeric_limits<double>::quiet_NaN();
    double c_prev = worst_gap(1.0);
    double scale = 1.0;
    out.c3 = c_prev;
    out.T = T0;
    while (T0 * scale * 2.0 <= T_cap) {
        scale *= 2.0;
        ++out.doublings;
        const double c = std::max(c_prev, worst_gap(scale));
        out.c3 = c;
        out.T = T0 * scale;
        if (!std::isfinite(c)) return out;
        const double tol = 1e-9 * std::max(1.0, c);
        if (std::isfinite(c_prev2) && std::abs(c - c_prev) < tol && std::abs(c_prev - c_prev2) < tol) {
            out.holds = true;
            return out;
        }
        c_prev2 = c_prev;
        c_prev = c;
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const ProblemParams& P) {
    j = nlohmann::json{{"N", P.N},         {"p", P.p},         {"q", P.q},
                       {"r", P.r},         {"s", P.s},         {"sigma", P.sigma},
                       {"lambda", P.lambda}, {"mu", P.mu},     {"b_inf", P.b_inf},
                       {"a0", P.a0},       {"c0", P.c0},       {"c_inf", P.c_inf},
                       {"C_hp", P.C_hp},   {"domain_radius", P.domain_radius}};
}

/// Unknown keys are rejected; `format_version` is tolerated. Missing keys
/// other than N, p, q keep their defaults.
inline void from_json(const nlohmann::json& j, ProblemParams& P) {
    if (!j.is_object()) throw PreconditionError("ProblemParams must be a JSON object");
    static const std::set<std::string> known = {"N",  "p",  "q",  "r",     "s",     "sigma",  "lambda",
                                                "mu", "b_inf", "a0", "c0", "c_inf", "C_hp", "domain_radius",
                                                "format_version"};
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw PreconditionError("unknown ProblemParams key: " + key);
    }
    for (const char* key : {"N", "p", "q"}) {
        if (!j.contains(key)) throw PreconditionError(std::string("missing ProblemParams key: ") + key);
    }
    auto num = [&](const char* key, double& field) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number()) throw PreconditionError(std::string("ProblemParams key not numeric: ") + key);
        field = j.at(key).get<double>();
    };
    if (!j.at("N").is_number_integer()) throw PreconditionError("ProblemParams N must be an integer");
    P.N = j.at("N").get<int>();
    num("p", P.p);
    num("q", P.q);
    num("r", P.r);
    num("s", P.s);
    num("sigma", P.sigma);
    num("lambda", P.lambda);
    num("mu", P.mu);
    num("b_inf", P.b_inf);
    num("a0", P.a0);
    num("c0", P.c0);
    num("c_inf", P.c_inf);
    num("C_hp", P.C_hp);
    num("domain_radius", P.domain_radius);
}

inline void to_json(nlohmann::json& j, const Condition& c) {
    j = nlohmann::json{{"id", c.id}, {"slack", c.slack}, {"holds", c.holds}, {"boundary", c.boundary}};
}

} // namespace dplab
