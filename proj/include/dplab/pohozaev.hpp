#pragma once

// Pohozaev identity on radial solutions over the ball B_R, and the two
// nonexistence predicates that follow from it. The coefficient a is assumed
// radial and radially nondecreasing throughout; the ball is strictly starshaped.

#include "dplab/constants.hpp"
#include "dplab/errors.hpp"
#include "dplab/params.hpp"
#include "dplab/radial_solver.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dplab {

struct PohozaevReport {
    double term_grad_p = 0.0;   // (1/p - 1/q) int |grad u|^p
    double term_grad_a = 0.0;   // 1/(Nq) int |grad u|^q (grad a . x)
    double term_boundary = 0.0; // boundary integral, x.nu = R on the sphere
    double rhs = 0.0;           // int F(x,u) - f(x,u) u / q*
    double lhs_total = 0.0;
    double residual_abs = 0.0;
    double residual_rel = 0.0;
    double ode_residual = 0.0;
};

inline constexpr double kPohozaevResidualGate = 1e-5;

/// Trapezoid rule on the solution grid for every volume term.
inline PohozaevReport evaluate_identity(const RadialSolution& sol, const ProblemParams& P, const CoefficientField& a,
                                        const SourceTerm& f) {
    const std::size_t n = sol.grid.size();
    if (n < 3 || sol.u.size() != n || sol.du.size() != n || sol.flux.size() != n) {
        throw PreconditionError("evaluate_identity: malformed solution");
    }
    if (sol.N != P.N || std::abs(sol.p - P.p) > 1e-12 || std::abs(sol.q - P.q) > 1e-12) {
        throw PreconditionError("evaluate_identity: solution was computed for different (N, p, q)");
    }
    PohozaevReport rep;
    rep.ode_residual = residual_check(sol, f);
    if (!(rep.ode_residual <= kPohozaevResidualGate)) {
        throw PreconditionError("evaluate_identity: ODE residual " + std::to_string(rep.ode_residual) +
                                " exceeds the gate; the input does not solve the equation");
    }
    const int N = P.N;
    const double p = P.p, q = P.q, qs = q_star(P), R = sol.grid.back();
    const double omega = unit_sphere_area(N);

    double Ip = 0.0, Ia = 0.0, Irhs = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double h = sol.grid[i + 1] - sol.grid[i];
        auto at = [&](std::size_t k, double& gp, double& ga, double& gr) {
            const double r = sol.grid[k];
            const double w = std::pow(r, N - 1.0);
            const double m = std::abs(sol.du[k]);
            gp = w * std::pow(m, p);
            ga = w * std::pow(m, q) * r * a.da(r);
            gr = w * (f.F(r, sol.u[k]) - f.f(r, sol.u[k]) * sol.u[k] / qs);
        };
        double p0, a0, r0, p1, a1, r1;
        at(i, p0, a0, r0);
        at(i + 1, p1, a1, r1);
        Ip += 0.5 * h * (p0 + p1);
        Ia += 0.5 * h * (a0 + a1);
        Irhs += 0.5 * h * (r0 + r1);
    }
    const double dR = std::abs(sol.du.back());
    rep.term_grad_p = (1.0 / p - 1.0 / q) * omega * Ip;
    rep.term_grad_a = omega * Ia / (N * q);
    rep.term_boundary = ((1.0 - 1.0 / p) * std::pow(dR, p) + (1.0 - 1.0 / q) * a.a(R) * std::pow(dR, q)) * R / N *
                        omega * std::pow(R, N - 1.0);
    rep.rhs = omega * Irhs;
    rep.lhs_total = rep.term_grad_p + rep.term_grad_a + rep.term_boundary;
    rep.residual_abs = std::abs(rep.lhs_total - rep.rhs);
    const double floor = std::numeric_limits<double>::min();
    rep.residual_rel = rep.residual_abs / std::max({std::abs(rep.lhs_total), std::abs(rep.rhs), floor});
    return rep;
}

inline void to_json(nlohmann::json& j, const PohozaevReport& r) {
    j = nlohmann::json{{"term_grad_p", r.term_grad_p},   {"term_grad_a", r.term_grad_a},
                       {"term_boundary", r.term_boundary}, {"rhs", r.rhs},
                       {"lhs_total", r.lhs_total},         {"residual_abs", r.residual_abs},
                       {"residual_rel", r.residual_rel},   {"ode_residual", r.ode_residual}};
}

// ---------------------------------------------------------------------------
// Nonexistence
// ---------------------------------------------------------------------------

enum class NonexistenceCase { nonex_i, nonex_ii, nonex_iii, small_i, small_ii, small_iii, none };

inline const char* to_string(NonexistenceCase c) {
    switch (c) {
    case NonexistenceCase::nonex_i: return "nonex_i";
    case NonexistenceCase::nonex_ii: return "nonex_ii";
    case NonexistenceCase::nonex_iii: return "nonex_iii";
    case NonexistenceCase::small_i: return "small_i";
    case NonexistenceCase::small_ii: return "small_ii";
    case NonexistenceCase::small_iii: return "small_iii";
    case NonexistenceCase::none: return "none";
    }
    return "none";
}

struct NonexistenceVerdict {
    bool applicable = false;
    NonexistenceCase which = NonexistenceCase::none;
    double threshold_value = std::numeric_limits<double>::quiet_NaN();
    double margin = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> failed_hypotheses;
};

/// lambda1(p) N (q - p) / (N (q - p) + p q).
inline double nonexistence_threshold(const ProblemParams& P, double lambda1) {
    const double d = P.N * (P.q - P.p);
    return lambda1 * d / (d + P.p * P.q);
}

namespace detail {

inline void structural_hypotheses(const ProblemParams& P, std::vector<std::string>& failed) {
    if (!(P.p > 1.0)) failed.emplace_back("1<p");
    if (!(P.p < P.q)) failed.emplace_back("p<q");
    if (!(P.q < P.N)) failed.emplace_back("q<N");
    if (!(P.q / P.p < 1.0 + 1.0 / P.N)) failed.emplace_back("q/p<1+1/N");
}

} // namespace detail

/// c is summarised by P.c_inf read as a signed bound: c_inf <= 0 means c <= 0 a.e.
inline NonexistenceVerdict nonexistence_verdict(const ProblemParams& P, const ConstantsTable& C, bool strictly_starshaped) {
    NonexistenceVerdict v;
    detail::structural_hypotheses(P, v.failed_hypotheses);
    if (!v.failed_hypotheses.empty()) return v;
    const double qs = q_star(P);
    if (!(P.mu <= 0.0)) v.failed_hypotheses.emplace_back("mu<=0");
    if (!(P.p <= P.r)) v.failed_hypotheses.emplace_back("p<=r");
    if (!(P.r < qs)) v.failed_hypotheses.emplace_back("r<q*");

    const double thr = nonexistence_threshold(P, C.lambda1_p);
    v.threshold_value = thr;
    v.margin = thr - P.c_inf;
    if (!v.failed_hypotheses.empty()) return v;

    const bool r_is_p = std::abs(P.r - P.p) <= kBoundaryTol * std::max(1.0, P.p);
    if (P.c_inf <= 0.0) {
        v.which = NonexistenceCase::nonex_i;
    } else if (r_is_p && P.c_inf < thr && std::abs(P.c_inf - thr) > kBoundaryTol * std::max(1.0, thr)) {
        v.which = NonexistenceCase::nonex_ii;
    } else if (r_is_p && std::abs(P.c_inf - thr) <= kBoundaryTol * std::max(1.0, thr)) {
        if (strictly_starshaped) {
            v.which = NonexistenceCase::nonex_iii;
        } else {
            v.failed_hypotheses.emplace_back("strictly_starshaped");
        }
    } else {
        v.failed_hypotheses.emplace_back("c<=0");
        if (!r_is_p) {
            v.failed_hypotheses.emplace_back("r=p");
        } else {
            v.failed_hypotheses.emplace_back("c_inf<=threshold");
        }
    }
    v.applicable = v.which != NonexistenceCase::none;
    return v;
}

// ---------------------------------------------------------------------------
// Small-norm nonexistence radius
// ---------------------------------------------------------------------------

enum class SmallCase { automatic, i, ii, iii };

/// Keys of the embedding-constant map:
///   C_S         int |u|^r <= C_S (int |grad u|^p)^(r/p)     case (i)
///   C_S_prime   rho_C(u) <= C_S_prime ||u||^sigma, ||u|| < 1 case (ii), required
///   C_S_second  int |u|^r <= C_S_second (int |grad u|^q)^(r/q) case (iii)
///   a0_prime    ess inf of a on supp c                     case (iii), defaults to a0
/// C_S and C_S_second default to Hoelder plus Sobolev on the ball:
///   |B_R|^(1 - r/m*) S_m^(-r/m).
using EmbeddingConstants = std::map<std::string, double>;

struct SmallNormCertificate {
    NonexistenceCase which = NonexistenceCase::none;
    double kappa = 0.0;
    double rho_bar = 0.0; // modular radius for cases (i), (iii)
    double gamma = 0.0;
    bool capped = false;
    std::vector<std::pair<double, double>> terms; // (coefficient, exponent) on the right
    double lhs_coefficient = 0.0;
    double lhs_exponent = 1.0;
};

inline constexpr double kSmallNormCap = 1e12;

namespace detail {

/// Largest x in (0, cap] with L x^e0 > sum c_k x^(e_k) on all of (0, x]; every
/// e_k > e0, so the ratio test is monotone and bisection applies.
inline double monotone_radius(double L, double e0, const std::vector<std::pair<double, double>>& terms, double cap,
                              bool& capped) {
    auto g = [&](double x) {
        double s = 0.0;
        for (const auto& [c, e] : terms) s += c * std::pow(x, e - e0);
        return L - s;
    };
    capped = false;
    if (g(cap) > 0.0) {
        capped = true;
        return cap;
    }
    double lo = cap, hi = cap;
    while (g(lo) <= 0.0) {
        hi = lo;
        lo *= 0.5;
        if (lo < 1e-300) return 0.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) lo = mid; else hi = mid;
    }
    return lo;
}

} // namespace detail

inline SmallNormCertificate small_norm_certificate(const ProblemParams& P, const ConstantsTable& C,
                                                   std::optional<double> gamma = std::nullopt,
                                                   const EmbeddingConstants& emb = {},
                                                   SmallCase which = SmallCase::automatic) {
    std::vector<std::string> failed;
    detail::structural_hypotheses(P, failed);
    const double ps = p_star(P), qs = q_star(P), p = P.p, q = P.q, r = P.r;
    const double g = gamma.value_or(2.0 * qs);
    if (!(g > qs)) failed.emplace_back("gamma>q*");
    if (!(P.mu >= 0.0)) failed.emplace_back("mu>=0");
    if (!(P.b_inf >= 0.0)) failed.emplace_back("b_inf>=0");
    if (P.b_inf > 0.0 && !(P.a0 > 0.0)) failed.emplace_back("a0>0");
    if (!(P.c_inf > 0.0)) failed.emplace_back("c>=0,c!=0");
    auto lookup = [&](const char* key) -> std::optional<double> {
        const auto it = emb.find(key);
        if (it == emb.end()) return std::nullopt;
        return it->second;
    };
    if (which == SmallCase::automatic) {
        if (r <= ps) which = SmallCase::i;
        else if (lookup("a0_prime").value_or(P.a0) > 0.0 && !lookup("C_S_prime")) which = SmallCase::iii;
        else which = SmallCase::ii;
    }
    if (which == SmallCase::i) {
        if (!(p < r)) failed.emplace_back("p<r");
        if (!(r <= ps)) failed.emplace_back("r<=p*");
    } else {
        if (!(ps < r)) failed.emplace_back("p*<r");
        if (!(r < qs)) failed.emplace_back("r<q*");
        if (which == SmallCase::ii) {
            if (!(P.C_hp > 0.0)) failed.emplace_back("C_hp>0");
            if (!(q < P.sigma && P.sigma < ps)) failed.emplace_back("q<sigma<p*");
            if (!lookup("C_S_prime")) failed.emplace_back("C_S_prime given");
        } else if (!(lookup("a0_prime").value_or(P.a0) > 0.0)) {
            failed.emplace_back("a0_prime>0");
        }
    }
    if (!failed.empty()) {
        std::string msg = "small_norm_radius: hypotheses fail:";
        for (const auto& f : failed) msg += " " + f;
        throw PreconditionError(msg);
    }

    SmallNormCertificate cert;
    cert.gamma = g;
    const double L = 1.0 / qs - 1.0 / g;
    cert.lhs_coefficient = L;
    const double mu_c = P.mu * (1.0 / ps - 1.0 / g) * std::pow(C.S_p, -ps / p);
    const double b_c = P.b_inf > 0.0 ? L * P.b_inf * std::pow(P.a0 * C.S_q, -qs / q) : 0.0;
    const double vol = ball_volume(P.N, P.domain_radius);

    if (which == SmallCase::ii) {
        // ||u||-form with ||u|| < 1, so the certificate never exceeds 1.
        cert.which = NonexistenceCase::small_ii;
        cert.lhs_exponent = q;
        cert.terms = {{(1.0 / r - 1.0 / g) * *lookup("C_S_prime"), P.sigma}, {mu_c, ps}, {b_c, p * qs / q}};
        cert.kappa = detail::monotone_radius(L, q, cert.terms, 1.0, cert.capped);
        return cert;
    }
    double c_r = 0.0;
    double e_r = 0.0;
    if (which == SmallCase::i) {
        cert.which = NonexistenceCase::small_i;
        const double CS = lookup("C_S").value_or(std::pow(vol, 1.0 - r / ps) * std::pow(C.S_p, -r / p));
        c_r = (1.0 / r - 1.0 / g) * P.c_inf * CS;
        e_r = r / p;
    } else {
        cert.which = NonexistenceCase::small_iii;
        const double CS2 = lookup("C_S_second").value_or(std::pow(vol, 1.0 - r / qs) * std::pow(C.S_q, -r / q));
        c_r = (1.0 / r - 1.0 / g) * P.c_inf * CS2 / std::pow(lookup("a0_prime").value_or(P.a0), r / q);
        e_r = r / q;
    }
    cert.terms = {{c_r, e_r}, {mu_c, ps / p}, {b_c, qs / q}};
    cert.rho_bar = detail::monotone_radius(L, 1.0, cert.terms, kSmallNormCap, cert.capped);
    // ||u|| <= kappa gives rho(grad u) <= max(kappa^p, kappa^q).
    cert.kappa = cert.rho_bar <= 1.0 ? std::pow(cert.rho_bar, 1.0 / p) : std::pow(cert.rho_bar, 1.0 / q);
    return cert;
}

inline double small_norm_radius(const ProblemParams& P, const ConstantsTable& C, std::optional<double> gamma = std::nullopt,
                                const EmbeddingConstants& emb = {}, SmallCase which = SmallCase::automatic) {
    return small_norm_certificate(P, C, gamma, emb, which).kappa;
}

inline void to_json(nlohmann::json& j, const NonexistenceVerdict& v) {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    j = nlohmann::json{{"applicable", v.applicable},
                       {"case", to_string(v.which)},
                       {"threshold_value", num(v.threshold_value)},
                       {"margin", num(v.margin)},
                       {"failed_hypotheses", v.failed_hypotheses}};
}

inline void to_json(nlohmann::json& j, const SmallNormCertificate& c) {
    j = nlohmann::json{{"case", to_string(c.which)}, {"kappa", c.kappa},       {"rho_bar", c.rho_bar},
                       {"gamma", c.gamma},           {"capped", c.capped},     {"lhs_coefficient", c.lhs_coefficient},
                       {"lhs_exponent", c.lhs_exponent}};
    j["terms"] = nlohmann::json::array();
    for (const auto& [coef, e] : c.terms) j["terms"].push_back({{"coefficient", coef}, {"exponent", e}});
}

} // namespace dplab
