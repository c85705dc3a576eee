#pragma once

// Energy along the ray t -> E(t v) for a normalised bubble v:
//   phi(t) = t^p/p A_p + t^q/q A_q - t^e/e B - t^p*/p* M_p - t^q*/q* M_q,
// its global maximum over t >= 0, and the comparison with the threshold levels.

#include "dplab/bubbles.hpp"
#include "dplab/classify.hpp"
#include "dplab/constants.hpp"
#include "dplab/errors.hpp"
#include "dplab/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace dplab {

struct RayEnergy {
    double A_p = 0.0;     // int |grad v|^p
    double A_q = 0.0;     // int a |grad v|^q
    double B_sub = 0.0;   // lambda int v^r, or c0 int v^s
    double M_pstar = 0.0; // mu
    double M_qstar = 0.0; // b_inf
    double p = 2.0;
    double q = 2.5;
    double e_sub = 2.0;
    double pstar = 6.0;
    double qstar = 15.0;
};

inline RayEnergy make_ray_energy(const ProblemParams& P) {
    RayEnergy E;
    E.p = P.p;
    E.q = P.q;
    E.pstar = p_star(P);
    E.qstar = q_star(P);
    return E;
}

namespace detail {

struct RayTerm {
    double coef; // signed coefficient of t^e in t phi'(t)
    double e;
};

inline std::vector<RayTerm> ray_terms(const RayEnergy& E) {
    std::vector<RayTerm> t;
    if (E.A_p != 0.0) t.push_back({E.A_p, E.p});
    if (E.A_q != 0.0) t.push_back({E.A_q, E.q});
    if (E.B_sub != 0.0) t.push_back({-E.B_sub, E.e_sub});
    if (E.M_pstar != 0.0) t.push_back({-E.M_pstar, E.pstar});
    if (E.M_qstar != 0.0) t.push_back({-E.M_qstar, E.qstar});
    return t;
}

/// t phi'(t) / t^e_min: same sign as phi', no underflow for small t.
inline double scaled_slope(const std::vector<RayTerm>& terms, double e_min, double t) {
    double s = 0.0;
    for (const auto& term : terms) s += term.coef * std::pow(t, term.e - e_min);
    return s;
}

} // namespace detail

inline double energy_along_ray(const RayEnergy& E, double t) {
    if (t < 0.0) throw DomainError("energy_along_ray: t must be nonnegative");
    if (t == 0.0) return 0.0;
    double v = 0.0;
    for (const auto& term : detail::ray_terms(E)) v += term.coef * std::pow(t, term.e) / term.e;
    return v;
}

/// phi'(t).
inline double energy_slope(const RayEnergy& E, double t) {
    double v = 0.0;
    for (const auto& term : detail::ray_terms(E)) v += term.coef * std::pow(t, term.e - 1.0);
    return v;
}

enum class RayStatus { ok, no_critical_term };

inline const char* to_string(RayStatus s) { return s == RayStatus::ok ? "ok" : "no_critical_term"; }

struct RayMaxResult {
    RayStatus status = RayStatus::ok;
    double t_max = 0.0;
    double phi_max = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int local_maxima = 0;
    double slope_residual = 0.0; // |t phi'(t)| / sum of |terms| at t_max
    double threshold = std::numeric_limits<double>::quiet_NaN();
    bool below_threshold = false;
    double margin = std::numeric_limits<double>::quiet_NaN();          // threshold - phi_max
    double relative_margin = std::numeric_limits<double>::quiet_NaN(); // margin / threshold
};

inline constexpr std::size_t kRayGridPoints = 512;

/// Two-term critical scale of the energy; 1 when no such pair exists.
inline double ray_reference_scale(const RayEnergy& E) {
    if (E.M_pstar > 0.0 && E.A_p > 0.0) return std::pow(E.A_p / E.M_pstar, 1.0 / (E.pstar - E.p));
    if (E.M_qstar > 0.0 && E.A_q > 0.0) return std::pow(E.A_q / E.M_qstar, 1.0 / (E.qstar - E.q));
    return 1.0;
}

/// Global maximum of phi on [0, inf). Every sign change of phi' on a log grid
/// over [1e-6 t_ref, max(1e3 t_ref, 2T)] is polished by bisection, where T
/// bounds the region phi' can be positive.
inline RayMaxResult maximize_ray(const RayEnergy& E, double t_ref = 0.0) {
    RayMaxResult res;
    const double M = std::max(E.M_pstar > 0.0 ? E.M_pstar : 0.0, E.M_qstar > 0.0 ? E.M_qstar : 0.0);
    if (!(M > 0.0)) {
        res.status = RayStatus::no_critical_term;
        res.phi_max = std::numeric_limits<double>::infinity();
        res.t_max = std::numeric_limits<double>::infinity();
        return res;
    }
    if (!(t_ref > 0.0)) t_ref = ray_reference_scale(E);
    const auto terms = detail::ray_terms(E);
    double e_min = std::numeric_limits<double>::infinity();
    for (const auto& t : terms) e_min = std::min(e_min, t.e);

    // For t >= 1, t phi' <= (A_p + A_q) t^q - m_c t^c with c the smallest critical
    // exponent carrying a positive coefficient.
    const double c_exp = E.M_pstar > 0.0 ? E.pstar : E.qstar;
    const double m_c = E.M_pstar > 0.0 ? E.M_pstar : E.M_qstar;
    const double pos = std::max(0.0, E.A_p) + std::max(0.0, E.A_q) + std::max(0.0, -E.B_sub);
    const double top_exp = std::max({E.q, E.p, E.B_sub < 0.0 ? E.e_sub : 0.0});
    const double T = std::max(1.0, std::pow(pos / m_c, 1.0 / (c_exp - top_exp)));
    res.bracket_lo = 1e-6 * t_ref;
    res.bracket_hi = std::max(1e3 * t_ref, 2.0 * T);

    const double llo = std::log(res.bracket_lo), lhi = std::log(res.bracket_hi);
    auto slope = [&](double lt) { return detail::scaled_slope(terms, e_min, std::exp(lt)); };
    res.t_max = 0.0;
    res.phi_max = 0.0;
    double prev_x = llo;
    double prev_s = slope(llo);
    for (std::size_t i = 1; i < kRayGridPoints; ++i) {
        const double x = llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(kRayGridPoints - 1);
        const double s = slope(x);
        if (prev_s > 0.0 && s <= 0.0) {
            double a = prev_x, b = x;
            for (int it = 0; it < 200 && b - a > 1e-16 * std::max(1.0, std::abs(a)); ++it) {
                const double mid = 0.5 * (a + b);
                if (slope(mid) > 0.0) a = mid; else b = mid;
            }
            const double t = std::exp(0.5 * (a + b));
            const double phi = energy_along_ray(E, t);
            ++res.local_maxima;
            if (phi > res.phi_max) {
                res.phi_max = phi;
                res.t_max = t;
            }
        }
        prev_x = x;
        prev_s = s;
    }
    if (res.t_max > 0.0) {
        double scale = 0.0;
        for (const auto& term : terms) scale += std::abs(term.coef) * std::pow(res.t_max, term.e);
        res.slope_residual = std::abs(res.t_max * energy_slope(E, res.t_max)) / scale;
    }
    return res;
}

inline void attach_threshold(RayMaxResult& r, double threshold) {
    r.threshold = threshold;
    r.margin = threshold - r.phi_max;
    r.relative_margin = r.margin / threshold;
    r.below_threshold = r.margin > 0.0;
}

enum class CriticalPhase { p_phase, q_phase };

/// (S_p/mu)^((N-p)/p^2) or (a0 S_q/b_inf)^((N-q)/q^2).
inline double critical_scale_t0(CriticalPhase kind, const ConstantsTable& C, const ProblemParams& P) {
    const double N = P.N;
    if (kind == CriticalPhase::p_phase) {
        if (!(P.mu > 0.0)) throw DomainError("critical_scale_t0: mu must be positive");
        return std::pow(C.S_p / P.mu, (N - P.p) / (P.p * P.p));
    }
    if (!(P.b_inf > 0.0) || !(P.a0 > 0.0)) throw DomainError("critical_scale_t0: b_inf and a0 must be positive");
    return std::pow(P.a0 * C.S_q / P.b_inf, (N - P.q) / (P.q * P.q));
}

enum class RayLemma { lemma3, lemma4 };

inline const char* to_string(RayLemma l) { return l == RayLemma::lemma3 ? "lemma3" : "lemma4"; }

struct RayVerifyOptions {
    double rho = 1.0;
    bool check_regime = true;
    std::optional<double> delta; // lemma4: fixed delta instead of the case rule
};

struct RayRow {
    double epsilon = 0.0;
    double delta = 1.0;
    RayEnergy energy;
    RayMaxResult max;
};

struct RayReport {
    RayLemma which = RayLemma::lemma3;
    double threshold = 0.0;
    double kappa = 0.0;
    std::vector<RayRow> rows;
    /// Largest grid eps at and below which every row is strictly below the threshold.
    std::optional<double> strict_from_eps;
};

/// lemma3: v_eps with a = b = 0 on the ball, energy A_p, lambda int v^r, mu.
/// lemma4: v_{eps,delta} with a = a0, b = b_inf, c >= c0 on the ball.
inline RayReport verify_below_threshold(const ProblemParams& P, const ConstantsTable& C,
                                        const std::vector<double>& eps_grid, RayLemma which,
                                        const RayVerifyOptions& opts = {}) {
    RayReport rep;
    rep.which = which;
    double kappa = 0.0;
    if (which == RayLemma::lemma3) {
        if (opts.check_regime) {
            const auto tag = classify_existence_case(P, C.lambda1_p, ProblemSelector::power);
            if (tag.theorem == ExistenceCase::None) throw PreconditionError("verify_below_threshold: parameters are not in a power-problem existence case");
        }
        if (!(P.mu > 0.0)) throw PreconditionError("verify_below_threshold: lemma3 needs mu > 0");
        rep.threshold = std::pow(C.S_p, P.N / P.p) / (P.N * std::pow(P.mu, (P.N - P.p) / P.p));
    } else {
        ExistenceCase c = ExistenceCase::None;
        if (opts.check_regime) {
            c = classify_existence_case(P, C.lambda1_p, ProblemSelector::weighted).theorem;
            if (c == ExistenceCase::None) throw PreconditionError("verify_below_threshold: parameters are not in a weighted-problem existence case");
        }
        if (!(P.b_inf > 0.0) || !(P.a0 > 0.0)) throw PreconditionError("verify_below_threshold: lemma4 needs b_inf, a0 > 0");
        rep.threshold = std::pow(P.a0 * C.S_q, P.N / P.q) / (P.N * std::pow(P.b_inf, (P.N - P.q) / P.q));
        if (!opts.delta && c == ExistenceCase::Thm2_i) kappa = kappa_window(P).midpoint();
    }
    rep.kappa = kappa;
    for (double eps : eps_grid) {
        RayRow row;
        row.epsilon = eps;
        row.energy = make_ray_energy(P);
        if (which == RayLemma::lemma3) {
            const auto b = make_bubble(BubbleKind::p_bubble, eps, 1.0, opts.rho, P);
            row.energy.A_p = bubble_norm(b, NormRequest::grad_p);
            row.energy.B_sub = P.lambda * bubble_norm(b, NormRequest::L_r);
            row.energy.e_sub = P.r;
            row.energy.M_pstar = P.mu;
        } else {
            row.delta = opts.delta ? *opts.delta : std::pow(eps, kappa);
            const auto b = make_bubble(BubbleKind::q_bubble, eps, row.delta, opts.rho, P);
            row.energy.A_p = bubble_norm(b, NormRequest::grad_p);
            row.energy.A_q = P.a0 * bubble_norm(b, NormRequest::grad_q);
            row.energy.B_sub = P.c0 * bubble_norm(b, NormRequest::L_s);
            row.energy.e_sub = P.s;
            row.energy.M_qstar = P.b_inf;
        }
        row.max = maximize_ray(row.energy);
        attach_threshold(row.max, rep.threshold);
        rep.rows.push_back(row);
    }
    // rows sorted by decreasing eps for the eps0 scan
    std::vector<const RayRow*> sorted;
    for (const auto& r : rep.rows) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const RayRow* a, const RayRow* b) { return a->epsilon > b->epsilon; });
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
        if (!(*it)->max.below_threshold) break;
        rep.strict_from_eps = (*it)->epsilon;
    }
    return rep;
}

} // namespace dplab
