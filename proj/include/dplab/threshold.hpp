#pragma once

// Compactness threshold beta*(mu, b_inf): the infimum of
//   I(X,Y,Z,W) = X/p + Y/q - Z/p* - W/q*
// over X,Y,Z,W >= 0 with I > 0, X + Y = Z + W,
//   Z <= mu S_p^(-p*/p) X^(p*/p),  W <= b_inf (a0 S_q)^(-q*/q) Y^(q*/q).

#include "dplab/constants.hpp"
#include "dplab/errors.hpp"
#include "dplab/optimize.hpp"
#include "dplab/params.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace dplab {

struct ThresholdPoint {
    double X = 0.0;
    double Y = 0.0;
    double Z = 0.0;
    double W = 0.0;
};

inline double objective_I(const ThresholdPoint& pt, const ProblemParams& P) {
    if (pt.X < 0.0 || pt.Y < 0.0 || pt.Z < 0.0 || pt.W < 0.0) {
        throw DomainError("objective_I: coordinates must be nonnegative");
    }
    return pt.X / P.p + pt.Y / P.q - pt.Z / p_star(P) - pt.W / q_star(P);
}

/// Coefficients of the two critical constraints and their exponents.
struct CriticalCoefficients {
    double alpha = 0.0; // mu / S_p^(p*/p)
    double gamma = 0.0; // b_inf / (a0 S_q)^(q*/q)
    double k = 0.0;     // p*/p
    double l = 0.0;     // q*/q
};

inline CriticalCoefficients critical_coefficients(const ProblemParams& P, const ConstantsTable& C) {
    CriticalCoefficients cc;
    cc.k = p_star(P) / P.p;
    cc.l = q_star(P) / P.q;
    cc.alpha = P.mu > 0.0 ? P.mu / std::pow(C.S_p, cc.k) : 0.0;
    cc.gamma = P.b_inf > 0.0 ? P.b_inf / std::pow(P.a0 * C.S_q, cc.l) : 0.0;
    return cc;
}

struct FeasibilityReport {
    bool feasible = false;
    double I_value = 0.0;
    double balance = 0.0; // X + Y - Z - W
    double z_slack = 0.0; // bound - Z
    double w_slack = 0.0; // bound - W
    double tolerance = 0.0;
};

inline FeasibilityReport feasible(const ThresholdPoint& pt, const ProblemParams& P, const ConstantsTable& C) {
    FeasibilityReport rep;
    if (pt.X < 0.0 || pt.Y < 0.0 || pt.Z < 0.0 || pt.W < 0.0) return rep;
    const auto cc = critical_coefficients(P, C);
    rep.I_value = objective_I(pt, P);
    rep.balance = pt.X + pt.Y - pt.Z - pt.W;
    rep.z_slack = cc.alpha * std::pow(pt.X, cc.k) - pt.Z;
    rep.w_slack = cc.gamma * std::pow(pt.Y, cc.l) - pt.W;
    rep.tolerance = 1e-9 * (1.0 + pt.X + pt.Y);
    rep.feasible = rep.I_value >= 1e-12 && std::abs(rep.balance) <= rep.tolerance && rep.z_slack >= -rep.tolerance &&
                   rep.w_slack >= -rep.tolerance;
    return rep;
}

/// Leading term of the lower bound as b_inf -> 0: S_p^(N/p) / (N mu^((N-p)/p)).
inline double beta_lower_bound_mu(double mu, const ConstantsTable& C, const ProblemParams& P) {
    if (!(mu > 0.0)) throw DomainError("beta_lower_bound_mu: mu must be positive");
    return std::pow(C.S_p, P.N / P.p) / (P.N * std::pow(mu, (P.N - P.p) / P.p));
}

/// Leading term of the lower bound as mu -> 0: (a0 S_q)^(N/q) / (N b_inf^((N-q)/q)).
inline double beta_lower_bound_b(double b_inf, double a0, const ConstantsTable& C, const ProblemParams& P) {
    if (!(b_inf > 0.0) || !(a0 > 0.0)) throw DomainError("beta_lower_bound_b: b_inf and a0 must be positive");
    return std::pow(a0 * C.S_q, P.N / P.q) / (P.N * std::pow(b_inf, (P.N - P.q) / P.q));
}

enum class ThresholdMethod { reduced_2d, penalty_4d };

inline const char* to_string(ThresholdMethod m) {
    return m == ThresholdMethod::reduced_2d ? "reduced_2d" : "penalty_4d";
}

struct ThresholdOptions {
    std::size_t scan_points = 4096;
    std::size_t multistarts = 64;
    std::size_t seed = 0;
    bool cross_check = true;
    double agreement_tol = 1e-5;
};

struct ThresholdReport {
    double beta_star = 0.0;
    ThresholdPoint argmin;
    double argmin_I = 0.0;
    FeasibilityReport feasibility;
    ThresholdMethod method = ThresholdMethod::reduced_2d;
    double bound_15 = std::numeric_limits<double>::quiet_NaN();
    double bound_16 = std::numeric_limits<double>::quiet_NaN();
    double cross_check_value = std::numeric_limits<double>::quiet_NaN();
    double cross_check_rel_diff = std::numeric_limits<double>::quiet_NaN();
    bool axis_attained = false;          // minimiser on X = 0 or Y = 0
    bool outside_reference_box = false;  // beyond 4x the single-phase minimisers
    bool near_zero_level = false;        // I at the minimiser below 1e-12
};

namespace detail {

/// Point of the active curve X + Y = alpha X^k + gamma Y^l in the direction
/// theta of the normalised (X/sx, Y/sy) plane.
struct ActiveCurve {
    CriticalCoefficients cc;
    double sx = 1.0;
    double sy = 1.0;

    [[nodiscard]] bool has_point(double theta) const {
        const double c = theta >= 0.5 * std::numbers::pi ? 0.0 : std::cos(theta);
        const double s = std::sin(theta);
        return (cc.alpha > 0.0 && c > 0.0) || (cc.gamma > 0.0 && s > 0.0);
    }

    [[nodiscard]] ThresholdPoint point(double theta) const {
        const bool vertical = theta >= 0.5 * std::numbers::pi;
        const double c = vertical ? 0.0 : std::max(0.0, std::cos(theta));
        const double s = vertical ? 1.0 : std::max(0.0, std::sin(theta));
        // h(rho) = alpha sx^k c^k rho^(k-1) + gamma sy^l s^l rho^(l-1) - (sx c + sy s), increasing.
        const double A = cc.alpha * std::pow(sx * c, cc.k);
        const double B = cc.gamma * std::pow(sy * s, cc.l);
        const double lin = sx * c + sy * s;
        auto h = [&](double rho) { return A * std::pow(rho, cc.k - 1.0) + B * std::pow(rho, cc.l - 1.0) - lin; };
        double lo = 0.0, hi = 1.0;
        while (h(hi) < 0.0) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e300) throw NumericError("active curve has no point in this direction");
        }
        for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (h(mid) < 0.0) lo = mid; else hi = mid;
        }
        const double rho = 0.5 * (lo + hi);
        ThresholdPoint pt;
        pt.X = sx * rho * c;
        pt.Y = sy * rho * s;
        pt.Z = cc.alpha * std::pow(pt.X, cc.k);
        pt.W = cc.gamma * std::pow(pt.Y, cc.l);
        return pt;
    }
};

inline void reference_scales(const CriticalCoefficients& cc, double& sx, double& sy) {
    const double x0 = cc.alpha > 0.0 ? std::pow(cc.alpha, -1.0 / (cc.k - 1.0)) : 0.0;
    const double y0 = cc.gamma > 0.0 ? std::pow(cc.gamma, -1.0 / (cc.l - 1.0)) : 0.0;
    sx = x0 > 0.0 ? x0 : y0;
    sy = y0 > 0.0 ? y0 : x0;
}

inline ThresholdPoint minimize_reduced(const ProblemParams& P, const CriticalCoefficients& cc, std::size_t n) {
    ActiveCurve curve{cc, 1.0, 1.0};
    reference_scales(cc, curve.sx, curve.sy);
    const double half_pi = 0.5 * std::numbers::pi;
    auto value = [&](double theta) {
        if (!curve.has_point(theta)) return std::numeric_limits<double>::infinity();
        return objective_I(curve.point(theta), P);
    };
    std::vector<double> thetas(n + 1);
    std::vector<double> values(n + 1);
    std::size_t best = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        thetas[i] = half_pi * static_cast<double>(i) / static_cast<double>(n);
        values[i] = value(thetas[i]);
        if (values[i] < values[best]) best = i;
    }
    double theta = thetas[best];
    double v = values[best];
    const double a = thetas[best == 0 ? 0 : best - 1];
    const double b = thetas[best == n ? n : best + 1];
    if (b > a) {
        auto [t_ref, v_ref] = brent_minimize(value, a, b, 1e-15);
        if (v_ref < v) {
            theta = t_ref;
            v = v_ref;
        }
    }
    return curve.point(theta);
}

/// Augmented-Lagrangian penalty formulation on all four coordinates, solved
/// by BFGS from one start. Coordinates are X_i = scale_i * v_i^2.
struct PenaltyProblem {
    const ProblemParams& P;
    CriticalCoefficients cc;
    Vec<4> scale{};
    double f_scale = 1.0;
    double ps = 0.0, qs = 0.0;
    // multipliers: balance, Z bound, W bound, implied lower bound
    std::array<double, 4> lam{};
    double rho = 10.0;

    [[nodiscard]] ThresholdPoint point(const Vec<4>& v) const {
        return {scale[0] * v[0] * v[0], scale[1] * v[1] * v[1], scale[2] * v[2] * v[2], scale[3] * v[3] * v[3]};
    }

    // Constraint values (equality first) and their gradients w.r.t. X, Y, Z, W.
    void constraints(const ThresholdPoint& t, std::array<double, 4>& c, std::array<Vec<4>, 4>& dc) const {
        const double bal_scale = scale[0] + scale[1];
        c[0] = (t.X + t.Y - t.Z - t.W) / bal_scale;
        dc[0] = {1.0 / bal_scale, 1.0 / bal_scale, -1.0 / bal_scale, -1.0 / bal_scale};
        c[1] = (t.Z - cc.alpha * std::pow(t.X, cc.k)) / scale[0];
        dc[1] = {-cc.alpha * cc.k * std::pow(t.X, cc.k - 1.0) / scale[0], 0.0, 1.0 / scale[0], 0.0};
        c[2] = (t.W - cc.gamma * std::pow(t.Y, cc.l)) / scale[1];
        dc[2] = {0.0, -cc.gamma * cc.l * std::pow(t.Y, cc.l - 1.0) / scale[1], 0.0, 1.0 / scale[1]};
        const double Xs = std::max(t.X, 1e-300), Ys = std::max(t.Y, 1e-300);
        c[3] = 1.0 - cc.alpha * std::pow(t.X, cc.k - 1.0) - cc.gamma * std::pow(t.Y, cc.l - 1.0);
        dc[3] = {cc.alpha > 0.0 ? -cc.alpha * (cc.k - 1.0) * std::pow(Xs, cc.k - 2.0) : 0.0,
                 cc.gamma > 0.0 ? -cc.gamma * (cc.l - 1.0) * std::pow(Ys, cc.l - 2.0) : 0.0, 0.0, 0.0};
    }

    double operator()(const Vec<4>& v, Vec<4>& grad) const {
        const auto t = point(v);
        std::array<double, 4> c{};
        std::array<Vec<4>, 4> dc{};
        constraints(t, c, dc);
        Vec<4> dL = {1.0 / P.p / f_scale, 1.0 / P.q / f_scale, -1.0 / ps / f_scale, -1.0 / qs / f_scale};
        double L = (t.X / P.p + t.Y / P.q - t.Z / ps - t.W / qs) / f_scale;
        L += lam[0] * c[0] + 0.5 * rho * c[0] * c[0];
        for (int i = 0; i < 4; ++i) dL[i] += (lam[0] + rho * c[0]) * dc[0][i];
        for (int j = 1; j < 4; ++j) {
            const double shifted = std::max(0.0, lam[j] + rho * c[j]);
            L += (shifted * shifted - lam[j] * lam[j]) / (2.0 * rho);
            for (int i = 0; i < 4; ++i) dL[i] += shifted * dc[j][i];
        }
        for (int i = 0; i < 4; ++i) grad[i] = dL[i] * 2.0 * scale[i] * v[i];
        return L;
    }

    [[nodiscard]] double violation(const ThresholdPoint& t) const {
        std::array<double, 4> c{};
        std::array<Vec<4>, 4> dc{};
        constraints(t, c, dc);
        double worst = std::abs(c[0]);
        for (int j = 1; j < 4; ++j) worst = std::max(worst, c[j]);
        return worst;
    }
};

inline std::pair<ThresholdPoint, double> minimize_penalty(const ProblemParams& P, const CriticalCoefficients& cc,
                                                          const ThresholdOptions& opts) {
    double sx = 1.0, sy = 1.0;
    reference_scales(cc, sx, sy);
    double best_value = std::numeric_limits<double>::infinity();
    ThresholdPoint best{};
    for (std::size_t k = 0; k < opts.multistarts; ++k) {
        PenaltyProblem prob{P, cc};
        prob.scale = {sx, sy, sx, sy};
        prob.f_scale = std::min(sx, sy);
        prob.ps = p_star(P);
        prob.qs = q_star(P);
        const auto h = halton_point<2>(k, opts.seed * opts.multistarts);
        ThresholdPoint start{4.0 * sx * h[0], 4.0 * sy * h[1], 0.0, 0.0};
        start.Z = std::min(cc.alpha * std::pow(start.X, cc.k), start.X + start.Y);
        start.W = start.X + start.Y - start.Z;
        Vec<4> v = {std::sqrt(start.X / sx), std::sqrt(start.Y / sy), std::sqrt(start.Z / sx), std::sqrt(start.W / sy)};
        double prev_violation = std::numeric_limits<double>::infinity();
        for (int outer = 0; outer < 60; ++outer) {
            auto res = bfgs_minimize<4>(prob, v, 3000, 1e-13);
            v = res.x;
            const auto t = prob.point(v);
            std::array<double, 4> c{};
            std::array<Vec<4>, 4> dc{};
            prob.constraints(t, c, dc);
            prob.lam[0] += prob.rho * c[0];
            for (int j = 1; j < 4; ++j) prob.lam[j] = std::max(0.0, prob.lam[j] + prob.rho * c[j]);
            const double viol = prob.violation(t);
            if (viol < 1e-13) break;
            if (viol > 0.25 * prev_violation) prob.rho = std::min(prob.rho * 4.0, 1e12);
            prev_violation = viol;
        }
        const auto t = prob.point(v);
        if (prob.violation(t) > 1e-9) continue;
        // Smallest admissible level: I > 0 excludes the collapsed origin.
        const double value = objective_I(t, P);
        if (value >= 1e-12 && value < best_value) {
            best_value = value;
            best = t;
        }
    }
    if (!std::isfinite(best_value)) throw NumericError("penalty cross-check found no feasible point");
    return {best, best_value};
}

} // namespace detail

/// Infimum of I over the constraint set. The primary route minimises along
/// the curve on which both critical constraints are active; the cross-check
/// solves the four-variable problem by multi-start augmented Lagrangian.
inline ThresholdReport compute_beta_star(const ProblemParams& P, const ConstantsTable& C,
                                         const ThresholdOptions& opts = {}) {
    if (P.mu < 0.0 || P.b_inf < 0.0) throw PreconditionError("compute_beta_star: mu and b_inf must be >= 0");
    if (P.mu == 0.0 && P.b_inf == 0.0) throw PreconditionError("compute_beta_star: mu and b_inf both zero");
    if (P.b_inf > 0.0 && !(P.a0 > 0.0)) throw PreconditionError("compute_beta_star: a0 must be positive");
    require_valid_structure(P);

    const auto cc = critical_coefficients(P, C);
    ThresholdReport rep;
    rep.argmin = detail::minimize_reduced(P, cc, opts.scan_points);
    rep.argmin_I = objective_I(rep.argmin, P);
    rep.beta_star = rep.argmin_I;
    rep.method = ThresholdMethod::reduced_2d;
    rep.feasibility = feasible(rep.argmin, P, C);
    if (P.mu > 0.0) rep.bound_15 = beta_lower_bound_mu(P.mu, C, P);
    if (P.b_inf > 0.0) rep.bound_16 = beta_lower_bound_b(P.b_inf, P.a0, C, P);

    const double rel = 1e-9;
    rep.axis_attained = rep.argmin.X <= rel * (rep.argmin.X + rep.argmin.Y) ||
                        rep.argmin.Y <= rel * (rep.argmin.X + rep.argmin.Y);
    double sx = 1.0, sy = 1.0;
    detail::reference_scales(cc, sx, sy);
    rep.outside_reference_box = rep.argmin.X > 4.0 * sx || rep.argmin.Y > 4.0 * sy;
    rep.near_zero_level = rep.argmin_I < 1e-12;

    if (opts.cross_check) {
        const auto [pt, value] = detail::minimize_penalty(P, cc, opts);
        rep.cross_check_value = value;
        rep.cross_check_rel_diff = std::abs(value - rep.beta_star) / std::abs(rep.beta_star);
        if (!(rep.cross_check_rel_diff <= opts.agreement_tol)) {
            throw NumericError("compute_beta_star: reduced_2d = " + std::to_string(rep.beta_star) +
                                   " but penalty_4d = " + std::to_string(value),
                               rep.cross_check_rel_diff);
        }
    }
    return rep;
}

} // namespace dplab
