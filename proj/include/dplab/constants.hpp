#pragma once

// Best Sobolev constants, the first Dirichlet eigenvalue of the p-Laplacian on
// a ball, and inversion of the double phase flux map.

#include "dplab/errors.hpp"
#include "dplab/ode.hpp"
#include "dplab/params.hpp"
#include "dplab/quadrature.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

namespace dplab {

// ---------------------------------------------------------------------------
// Flux map s -> |s|^(p-2) s + a |s|^(q-2) s
// ---------------------------------------------------------------------------

inline double flux_map(double s, double a, double p, double q) {
    const double m = std::abs(s);
    const double v = std::pow(m, p - 1.0) + a * std::pow(m, q - 1.0);
    return s < 0.0 ? -v : v;
}

/// Unique s with flux_map(s) = w. Odd by construction: the magnitude is found
/// for |w| and the sign reattached.
inline double invert_flux(double w, double a, double p, double q) {
    if (!(p > 1.0) || !(q > 1.0)) throw DomainError("invert_flux: need p, q > 1");
    if (a < 0.0) throw DomainError("invert_flux: coefficient must be nonnegative");
    const double target = std::abs(w);
    if (target == 0.0) return 0.0;
    const double ep = 1.0 / (p - 1.0);
    if (a == 0.0) return std::copysign(std::pow(target, ep), w);

    const double eq = 1.0 / (q - 1.0);
    // Each phase alone overshoots, half of w per phase undershoots.
    double hi = std::min(std::pow(target, ep), std::pow(target / a, eq));
    double lo = std::min(std::pow(0.5 * target, ep), std::pow(0.5 * target / a, eq));
    auto h = [&](double s) { return std::pow(s, p - 1.0) + a * std::pow(s, q - 1.0) - target; };
    auto dh = [&](double s) { return (p - 1.0) * std::pow(s, p - 2.0) + a * (q - 1.0) * std::pow(s, q - 2.0); };

    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double hs = h(s);
        if (hs == 0.0) break;
        if (hs > 0.0) hi = s; else lo = s;
        const double d = dh(s);
        double next = s - hs / d;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        if (std::abs(next - s) <= 2.0 * std::numeric_limits<double>::epsilon() * s) {
            s = next;
            break;
        }
        s = next;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    }
    return std::copysign(s, w);
}

// ---------------------------------------------------------------------------
// Best Sobolev constants
// ---------------------------------------------------------------------------

/// Closed form of S_m = inf |grad u|_m^m / |u|_{m*}^m on R^N (Talenti).
inline double talenti_constant(double m, int N) {
    if (!(m > 1.0) || !(m < N)) throw DomainError("talenti_constant: need 1 < m < N");
    const double Nd = N;
    const double log_gamma = std::lgamma(Nd / m) + std::lgamma(1.0 + Nd - Nd / m) - std::lgamma(1.0 + Nd / 2.0) -
                             std::lgamma(Nd);
    return std::pow(std::numbers::pi, m / 2.0) * Nd * std::pow((Nd - m) / (m - 1.0), m - 1.0) *
           std::exp(m / Nd * log_gamma);
}

namespace detail {

struct RadialMoments {
    double gradient = 0.0; // int_0^inf r^(N-1) |U'|^m dr
    double mass = 0.0;     // int_0^inf r^(N-1) U^(m*) dr
};

/// Moments of U(r) = (eps^(m') + r^(m'))^(-(N-m)/m), integrated in x = log r
/// so the profile's layer at r ~ eps and both power-law tails are resolved.
inline RadialMoments extremal_moments(double m, int N, double eps, double rel_tol) {
    const double mp = m / (m - 1.0);
    const double Nd = N;
    const double expo = (Nd - m) / m;
    const double log_eps = std::log(eps);
    auto log_base = [&](double x) { // log(eps^m' + r^m')
        const double u = mp * log_eps;
        const double v = mp * x;
        const double hi = std::max(u, v);
        return hi + std::log1p(std::exp(-std::abs(u - v)));
    };
    auto grad = [&](double x) {
        const double L = log_base(x);
        const double log_du = std::log(expo * mp) - (expo + 1.0) * L + (mp - 1.0) * x;
        return std::exp(m * log_du + Nd * x);
    };
    auto mass = [&](double x) { return std::exp(-Nd * log_base(x) + Nd * x); };

    // Decay rates in x: at -inf both >= N; at +inf (N-m)/(m-1) and N/(m-1).
    const double left = log_eps - 45.0 / Nd;
    const double right_grad = log_eps + 45.0 * (m - 1.0) / (Nd - m);
    const double right_mass = log_eps + 45.0 * (m - 1.0) / Nd;
    QuadratureOptions opts{rel_tol, 0.0, 20000};
    auto knots = [&](double right) {
        std::vector<double> k{left, log_eps - 2.0, log_eps, log_eps + 2.0};
        for (double x = log_eps + 6.0; x < right; x += 6.0) k.push_back(x);
        k.push_back(right);
        return k;
    };
    const auto kg = knots(right_grad);
    const auto km = knots(right_mass);
    return {integrate_piecewise(grad, kg, opts).value, integrate_piecewise(mass, km, opts).value};
}

} // namespace detail

/// Rayleigh quotient of the extremal profile dilated by eps. Invariant under
/// eps; exposed so callers can check that.
inline double sobolev_rayleigh_quotient(double m, int N, double eps = 1.0, double rel_tol = 1e-13) {
    if (!(m > 1.0) || !(m < N)) throw DomainError("sobolev_rayleigh_quotient: need 1 < m < N");
    if (!(eps > 0.0)) throw DomainError("sobolev_rayleigh_quotient: eps must be positive");
    const auto mom = detail::extremal_moments(m, N, eps, rel_tol);
    const double omega = unit_sphere_area(N);
    const double m_star = sobolev_conjugate(m, N);
    return omega * mom.gradient / std::pow(omega * mom.mass, m / m_star);
}

struct SobolevConstant {
    double value = 0.0;       // quadrature on the extremal family
    double closed_form = 0.0; // Talenti's formula
    double rel_diff = 0.0;
};

inline SobolevConstant sobolev_constant_report(double m, int N) {
    SobolevConstant out;
    out.value = sobolev_rayleigh_quotient(m, N, 1.0);
    out.closed_form = talenti_constant(m, N);
    out.rel_diff = std::abs(out.value - out.closed_form) / out.closed_form;
    return out;
}

/// S_m on R^N. Throws if quadrature and the closed form disagree beyond 1e-8.
inline double best_sobolev_constant(double m, int N) {
    const auto rep = sobolev_constant_report(m, N);
    if (!(rep.rel_diff <= 1e-8)) {
        throw NumericError("best_sobolev_constant: quadrature and closed form disagree", rep.rel_diff);
    }
    return rep.value;
}

// ---------------------------------------------------------------------------
// First Dirichlet eigenvalue of the p-Laplacian on B_R
// ---------------------------------------------------------------------------

namespace detail {

/// True when the radial eigen-ODE solution with u(0) = 1 stays positive on
/// (0, R] for the trial value lambda.
inline bool eigenfunction_positive(double p, int N, double R, double lambda) {
    const double r0 = R * 1e-8;
    const double pp = p / (p - 1.0);
    const double Nd = N;
    // Series start: Phi = r^(N-1) |u'|^(p-2) u' ~ -lambda r^N / N.
    State<2> y0{1.0 - std::pow(lambda / Nd, 1.0 / (p - 1.0)) * std::pow(r0, pp) / pp,
                -lambda * std::pow(r0, Nd) / Nd};
    auto rhs = [&](double r, const State<2>& y) -> State<2> {
        const double rn1 = std::pow(r, Nd - 1.0);
        const double du = invert_flux(y[1] / rn1, 0.0, p, p);
        const double u = y[0];
        return {du, -lambda * rn1 * std::pow(std::abs(u), p - 2.0) * u};
    };
    OdeOptions opts{1e-12, 1e-15, r0, 5'000'000};
    StopPredicate<2> crossed = [](double, const State<2>& y) { return y[0] <= 0.0; };
    const auto out = integrate_ode<2>(rhs, r0, y0, R, opts, crossed);
    return !out.stopped && out.y[0] > 0.0;
}

} // namespace detail

/// lambda_1(p) on the ball of radius R by shooting from the origin and
/// bisecting on whether the eigenfunction keeps its sign up to R.
inline double first_eigenvalue_p(double p, int N, double R) {
    if (!(p > 1.0) || N < 2 || !(R > 0.0)) throw DomainError("first_eigenvalue_p: need p > 1, N >= 2, R > 0");
    double lo = 0.0;
    double hi = 1.0 / std::pow(R, p);
    int grow = 0;
    while (detail::eigenfunction_positive(p, N, R, hi)) {
        lo = hi;
        hi *= 2.0;
        if (++grow > 200) throw NumericError("first_eigenvalue_p: bracketing failed", hi);
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (detail::eigenfunction_positive(p, N, R, mid)) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// ConstantsTable
// ---------------------------------------------------------------------------

struct ConstantsTable {
    double S_p = 0.0;
    double S_q = 0.0;
    double lambda1_p = 0.0;
    double radius = 1.0;
    double p = 0.0;
    double q = 0.0;
    int N = 0;
    // Provenance and achieved agreement of each value.
    std::string S_p_method = "extremal-quadrature";
    std::string S_q_method = "extremal-quadrature";
    std::string lambda1_method = "radial-shooting";
    double S_p_closed_form_rel_diff = 0.0;
    double S_q_closed_form_rel_diff = 0.0;
    double lambda1_tolerance = 1e-12;
};

inline ConstantsTable make_constants_table(double p, double q, int N, double R) {
    ConstantsTable t;
    const auto sp = sobolev_constant_report(p, N);
    const auto sq = sobolev_constant_report(q, N);
    if (!(sp.rel_diff <= 1e-8) || !(sq.rel_diff <= 1e-8)) {
        throw NumericError("Sobolev constant cross-check failed", std::max(sp.rel_diff, sq.rel_diff));
    }
    t.S_p = sp.value;
    t.S_q = sq.value;
    t.S_p_closed_form_rel_diff = sp.rel_diff;
    t.S_q_closed_form_rel_diff = sq.rel_diff;
    t.lambda1_p = first_eigenvalue_p(p, N, R);
    t.radius = R;
    t.p = p;
    t.q = q;
    t.N = N;
    return t;
}

inline ConstantsTable make_constants_table(const ProblemParams& P) {
    return make_constants_table(P.p, P.q, P.N, P.domain_radius);
}

inline void to_json(nlohmann::json& j, const ConstantsTable& t) {
    j = nlohmann::json{{"format_version", 1},
                       {"S_p", t.S_p},
                       {"S_q", t.S_q},
                       {"lambda1_p", t.lambda1_p},
                       {"radius", t.radius},
                       {"p", t.p},
                       {"q", t.q},
                       {"N", t.N},
                       {"method", {{"S_p", t.S_p_method}, {"S_q", t.S_q_method}, {"lambda1_p", t.lambda1_method}}},
                       {"tolerance",
                        {{"S_p_closed_form_rel_diff", t.S_p_closed_form_rel_diff},
                         {"S_q_closed_form_rel_diff", t.S_q_closed_form_rel_diff},
                         {"lambda1_p", t.lambda1_tolerance}}}};
}

inline void from_json(const nlohmann::json& j, ConstantsTable& t) {
    t.S_p = j.at("S_p").get<double>();
    t.S_q = j.at("S_q").get<double>();
    t.lambda1_p = j.at("lambda1_p").get<double>();
    t.radius = j.at("radius").get<double>();
    t.p = j.at("p").get<double>();
    t.q = j.at("q").get<double>();
    t.N = j.at("N").get<int>();
    t.S_p_method = j.at("method").at("S_p").get<std::string>();
    t.S_q_method = j.at("method").at("S_q").get<std::string>();
    t.lambda1_method = j.at("method").at("lambda1_p").get<std::string>();
    t.S_p_closed_form_rel_diff = j.at("tolerance").at("S_p_closed_form_rel_diff").get<double>();
    t.S_q_closed_form_rel_diff = j.at("tolerance").at("S_q_closed_form_rel_diff").get<double>();
    t.lambda1_tolerance = j.at("tolerance").at("lambda1_p").get<double>();
}

/// File name for the on-disk cache entry of (p, q, N, R); values are printed
/// round-trip exact so distinct inputs never collide.
inline std::string constants_cache_key(double p, double q, int N, double R) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "constants_p%.17g_q%.17g_N%d_R%.17g.json", p, q, N, R);
    return buf;
}

/// Loads the table from `cache_dir` when present, otherwise computes and stores it.
inline ConstantsTable cached_constants_table(const ProblemParams& P, const std::filesystem::path& cache_dir) {
    namespace fs = std::filesystem;
    const fs::path file = cache_dir / constants_cache_key(P.p, P.q, P.N, P.domain_radius);
    if (fs::exists(file)) {
        std::ifstream in(file);
        try {
            const auto j = nlohmann::json::parse(in);
            auto t = j.get<ConstantsTable>();
            if (t.p == P.p && t.q == P.q && t.N == P.N && t.radius == P.domain_radius) return t;
        } catch (const nlohmann::json::exception&) {
            // Corrupt entry: recompute and overwrite.
        }
    }
    auto t = make_constants_table(P);
    fs::create_directories(cache_dir);
    std::ofstream out(file);
    out << nlohmann::json(t).dump(2) << '\n';
    return t;
}

} // namespace dplab
