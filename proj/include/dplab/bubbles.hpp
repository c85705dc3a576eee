#pragma once

// Cut-off Talenti profiles
//   u(x) = psi(|x| / delta) (eps^(m') + |x|^(m'))^(-(N-m)/m),  v = u / |u|_{m*},
// their radial norms, and log-log rate fitting for the scaling laws.

#include "dplab/errors.hpp"
#include "dplab/params.hpp"
#include "dplab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace dplab {

enum class BubbleKind { p_bubble, q_bubble };

inline const char* to_string(BubbleKind k) { return k == BubbleKind::p_bubble ? "p_bubble" : "q_bubble"; }

/// C^2 quintic cutoff: 1 on [0, inner], 0 beyond outer.
struct Cutoff {
    double inner = 0.5;
    double outer = 1.0;

    [[nodiscard]] double value(double r) const {
        if (r <= inner) return 1.0;
        if (r >= outer) return 0.0;
        const double t = (r - inner) / (outer - inner);
        return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    }

    [[nodiscard]] double derivative(double r) const {
        if (r <= inner || r >= outer) return 0.0;
        const double t = (r - inner) / (outer - inner);
        return -30.0 * t * t * (1.0 - t) * (1.0 - t) / (outer - inner);
    }
};

struct BubbleProfile {
    BubbleKind kind = BubbleKind::p_bubble;
    double epsilon = 0.1;
    double delta = 1.0;
    double rho = 1.0;
    double m = 2.0;
    int N = 3;
    Cutoff cutoff;
    double normalization = 1.0; // |u|_{L^{m*}}
    // exponents the norm requests refer to
    double p = 2.0, q = 2.5, r = 2.0, s = 0.0;

    [[nodiscard]] double support_radius() const { return cutoff.outer; }
    [[nodiscard]] double conjugate() const { return m / (m - 1.0); }
    [[nodiscard]] double decay() const { return (N - m) / m; }

    /// u(0) = eps^(-(N-m)/(m-1)).
    [[nodiscard]] double peak() const { return std::pow(epsilon, -(N - m) / (m - 1.0)); }

    /// log(eps^(m') + r^(m')) at x = log r.
    [[nodiscard]] double log_base(double x) const {
        const double a = conjugate() * std::log(epsilon);
        const double b = conjugate() * x;
        return std::max(a, b) + std::log1p(std::exp(-std::abs(a - b)));
    }

    /// log u at x = log r; -inf outside the support.
    [[nodiscard]] double log_value(double x) const {
        const double psi = cutoff.value(std::exp(x));
        if (psi <= 0.0) return -std::numeric_limits<double>::infinity();
        return std::log(psi) - decay() * log_base(x);
    }

    /// log |u'| at x = log r. Both parts of u' = psi' B + psi B' are <= 0.
    [[nodiscard]] double log_abs_gradient(double x) const {
        const double rr = std::exp(x);
        const double psi = cutoff.value(rr);
        const double dpsi = -cutoff.derivative(rr);
        const double L = log_base(x);
        const double ratio = decay() * conjugate() * std::exp((conjugate() - 1.0) * x - L); // |B'|/B
        const double sum = dpsi + psi * ratio;
        if (sum <= 0.0) return -std::numeric_limits<double>::infinity();
        return -decay() * L + std::log(sum);
    }

    [[nodiscard]] double value(double radius) const {
        if (radius <= 0.0) return cutoff.value(0.0) * peak();
        return std::exp(log_value(std::log(radius)));
    }
};

enum class NormKind { gradient, lebesgue };

enum class NormRequest { grad_p, grad_q, L_r, L_s, L_mstar };

inline std::string to_string(NormRequest n) {
    switch (n) {
    case NormRequest::grad_p: return "grad_p";
    case NormRequest::grad_q: return "grad_q";
    case NormRequest::L_r: return "L^r";
    case NormRequest::L_s: return "L^s";
    case NormRequest::L_mstar: return "L^{m*}";
    }
    return "?";
}

inline constexpr double kBubbleRelTol = 1e-12;

namespace detail {

/// omega_{N-1} int_0^R r^(N-1) w(r) dr of w = |u'|^e or |u|^e (unnormalised),
/// in x = log r with knots at the core layer and the cutoff transition.
inline double bubble_integral(const BubbleProfile& b, NormKind kind, double e, double rel_tol) {
    const double Nd = b.N;
    const double log_eps = std::log(b.epsilon);
    const double right = std::log(b.cutoff.outer);
    const double inner = std::log(b.cutoff.inner);
    const double left = std::min(log_eps, inner) - 46.0 / Nd;
    std::vector<double> knots{left, log_eps - 2.0, log_eps, log_eps + 2.0};
    for (double x = log_eps + 6.0; x < inner; x += 6.0) knots.push_back(x);
    knots.push_back(inner);
    knots.push_back(right);
    std::sort(knots.begin(), knots.end());
    std::vector<double> k;
    for (double x : knots) {
        if (x < left || x > right) continue;
        if (k.empty() || x > k.back() + 1e-12) k.push_back(x);
    }
    auto f = [&](double x) {
        const double lv = kind == NormKind::gradient ? b.log_abs_gradient(x) : b.log_value(x);
        if (!std::isfinite(lv)) return 0.0;
        return std::exp(e * lv + Nd * x);
    };
    const QuadratureOptions opts{rel_tol, 0.0, 20000};
    return unit_sphere_area(b.N) * integrate_piecewise(f, k, opts).value;
}

} // namespace detail

/// pre: eps > 0, 1 < m < N; for q_bubble 0 < delta <= 1 and eps < rho delta / 2.
inline BubbleProfile make_bubble(BubbleKind kind, double eps, double delta, double rho, const ProblemParams& P) {
    if (!(eps > 0.0)) throw PreconditionError("make_bubble: eps must be positive");
    if (!(rho > 0.0)) throw PreconditionError("make_bubble: rho must be positive");
    BubbleProfile b;
    b.kind = kind;
    b.epsilon = eps;
    b.rho = rho;
    b.N = P.N;
    b.p = P.p;
    b.q = P.q;
    b.r = P.r;
    b.s = P.s;
    if (kind == BubbleKind::p_bubble) {
        b.m = P.p;
        b.delta = 1.0;
    } else {
        if (!(delta > 0.0) || delta > 1.0) throw PreconditionError("make_bubble: delta must lie in (0, 1]");
        b.m = P.q;
        b.delta = delta;
    }
    if (!(b.m > 1.0) || !(b.m < P.N)) throw PreconditionError("make_bubble: need 1 < m < N");
    b.cutoff = Cutoff{0.5 * rho * b.delta, rho * b.delta};
    if (!(eps < b.cutoff.inner)) throw PreconditionError("make_bubble: eps must be small against rho delta / 2");
    const double ms = sobolev_conjugate(b.m, b.N);
    b.normalization = std::pow(detail::bubble_integral(b, NormKind::lebesgue, ms, kBubbleRelTol), 1.0 / ms);
    return b;
}

/// Integral of |grad v|^e (gradient) or |v|^e (lebesgue) for the normalised v.
inline double bubble_integral(const BubbleProfile& b, NormKind kind, double e, double rel_tol = kBubbleRelTol) {
    return detail::bubble_integral(b, kind, e, rel_tol) / std::pow(b.normalization, e);
}

inline double bubble_norm(const BubbleProfile& b, NormRequest n, double rel_tol = kBubbleRelTol) {
    switch (n) {
    case NormRequest::grad_p: return bubble_integral(b, NormKind::gradient, b.p, rel_tol);
    case NormRequest::grad_q: return bubble_integral(b, NormKind::gradient, b.q, rel_tol);
    case NormRequest::L_r: return bubble_integral(b, NormKind::lebesgue, b.r, rel_tol);
    case NormRequest::L_s: return bubble_integral(b, NormKind::lebesgue, b.s, rel_tol);
    case NormRequest::L_mstar: return bubble_integral(b, NormKind::lebesgue, sobolev_conjugate(b.m, b.N), rel_tol);
    }
    return 0.0;
}

inline std::map<std::string, double> bubble_norms(const BubbleProfile& b, const std::vector<NormRequest>& requests) {
    std::map<std::string, double> out;
    for (auto n : requests) out[to_string(n)] = bubble_norm(b, n);
    return out;
}

// ---------------------------------------------------------------------------
// Rate laws and fitting
// ---------------------------------------------------------------------------

/// value ~ eps^exponent |log eps|^log_power
struct RateLaw {
    double exponent = 0.0;
    int log_power = 0;
    std::string branch;
};

namespace detail {

inline bool on_boundary(double x, double boundary) {
    return std::abs(x - boundary) <= 1e-12 * std::max(1.0, std::abs(boundary));
}

} // namespace detail

/// Deficit |grad v_eps|_p^p - S_p.
inline RateLaw rate_gradient_deficit_p(const ProblemParams& P) {
    return {(P.N - P.p) / (P.p - 1.0), 0, "deficit"};
}

/// int v_eps^r, three branches around r = N(p-1)/(N-p).
inline RateLaw rate_lebesgue_p(const ProblemParams& P, double r) {
    const double N = P.N, p = P.p;
    const double rc = N * (p - 1.0) / (N - p);
    if (detail::on_boundary(r, rc)) return {N / p, 1, "boundary"};
    if (r > rc) return {(N * p - (N - p) * r) / p, 0, "above"};
    return {(N - p) * r / (p * (p - 1.0)), 0, "below"};
}

/// eps^((N-p)/(p-1)) / int v_eps^r.
inline RateLaw rate_lemma3_ratio(const ProblemParams& P) {
    const double N = P.N, p = P.p, r = P.r;
    const double rc = N * (p - 1.0) / (N - p);
    if (detail::on_boundary(r, rc)) return {(N - p * p) / (p * (p - 1.0)), -1, "boundary"};
    if (r > rc) return {((N - p) * (p - 1.0) * r - (N * p - 2.0 * N + p) * p) / (p * (p - 1.0)), 0, "above"};
    return {(N - p) * (p - r) / (p * (p - 1.0)), 0, "below"};
}

/// Deficit |grad v_{eps,delta}|_q^q - S_q in eps/delta.
inline RateLaw rate_gradient_deficit_q(const ProblemParams& P) {
    return {(P.N - P.q) / (P.q - 1.0), 0, "deficit"};
}

/// int |grad v_{eps,delta}|^p at fixed delta, branches around p = N(q-1)/(N-1).
inline RateLaw rate_gradient_p_of_q_bubble(const ProblemParams& P) {
    const double N = P.N, p = P.p, q = P.q;
    const double pc = N * (q - 1.0) / (N - 1.0);
    if (detail::on_boundary(p, pc)) return {N * (N - q) / ((N - 1.0) * q), 1, "boundary"};
    if (p > pc) return {N * (q - p) / q, 0, "above"};
    return {(N - q) * p / (q * (q - 1.0)), 0, "below"};
}

/// int v_{eps,delta}^s at fixed delta, branches around s = N(q-1)/(N-q).
inline RateLaw rate_lebesgue_q(const ProblemParams& P, double s) {
    const double N = P.N, q = P.q;
    const double sc = N * (q - 1.0) / (N - q);
    if (detail::on_boundary(s, sc)) return {N / q, 1, "boundary"};
    if (s > sc) return {(N * q - (N - q) * s) / q, 0, "above"};
    return {(N - q) * s / (q * (q - 1.0)), 0, "below"};
}

struct RateFitOptions {
    double log_gain = 0.25;        // residual reduction needed to accept a log factor
    double curvature_tol = 0.03;   // endpoint slope jump (relative) that triggers trimming
    std::size_t max_trim = 2;      // per end
};

struct RateFit {
    std::vector<double> exponent_grid; // eps values, strictly decreasing
    std::vector<double> values;
    double fitted_slope = 0.0;
    bool log_factor_detected = false;
    int log_power = 0;
    double theoretical_slope = 0.0;
    double relative_slope_error = 0.0; // absolute error when the theoretical slope is 0
    double pure_slope = 0.0;
    double pure_residual = 0.0;
    double log_residual = 0.0;
    std::size_t first_used = 0;
    std::size_t last_used = 0; // inclusive
};

namespace detail {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double rss = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = y[i] - f.intercept - f.slope * x[i];
        f.rss += d * d;
    }
    return f;
}

} // namespace detail

/// Log-log least squares of value against eps. A model value ~ eps^b |log eps|^(+-1)
/// is preferred when it lowers the residual by at least `log_gain`. Endpoints whose
/// local slope departs from the neighbouring one by more than `curvature_tol`
/// (relative) are dropped, up to `max_trim` per end, keeping at least 4 points.
inline RateFit fit_rate(std::vector<double> eps, std::vector<double> values, double theoretical_slope,
                        const RateFitOptions& opts = {}) {
    if (eps.size() != values.size()) throw PreconditionError("fit_rate: grid and values differ in length");
    if (eps.size() < 4) throw PreconditionError("fit_rate: need at least 4 points");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(values[i] > 0.0) || !std::isfinite(values[i])) throw DomainError("fit_rate: values must be positive");
        if (!(eps[i] > 0.0) || !(eps[i] < 1.0)) throw DomainError("fit_rate: eps must lie in (0, 1)");
    }
    std::vector<std::size_t> order(eps.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eps[a] > eps[b]; });
    RateFit fit;
    for (auto i : order) {
        fit.exponent_grid.push_back(eps[i]);
        fit.values.push_back(values[i]);
    }
    for (std::size_t i = 1; i < fit.exponent_grid.size(); ++i) {
        if (!(fit.exponent_grid[i] < fit.exponent_grid[i - 1])) throw PreconditionError("fit_rate: repeated eps");
    }
    fit.theoretical_slope = theoretical_slope;

    const std::size_t n = fit.exponent_grid.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(fit.exponent_grid[i]);
        ly[i] = std::log(fit.values[i]);
    }
    auto local_slope = [&](std::size_t i) { return (ly[i + 1] - ly[i]) / (lx[i + 1] - lx[i]); };
    auto jump = [&](std::size_t a, std::size_t b) {
        const double sa = local_slope(a), sb = local_slope(b);
        return std::abs(sa - sb) / std::max(std::abs(sb), 0.05);
    };
    std::size_t lo = 0, hi = n - 1;
    for (std::size_t k = 0; k < opts.max_trim && hi - lo + 1 > 4; ++k) {
        if (jump(lo, lo + 1) > opts.curvature_tol) ++lo; else break;
    }
    for (std::size_t k = 0; k < opts.max_trim && hi - lo + 1 > 4; ++k) {
        if (jump(hi - 1, hi - 2) > opts.curvature_tol) --hi; else break;
    }
    fit.first_used = lo;
    fit.last_used = hi;

    std::vector<double> x(lx.begin() + lo, lx.begin() + hi + 1);
    std::vector<double> y(ly.begin() + lo, ly.begin() + hi + 1);
    const auto pure = detail::least_squares(x, y);
    fit.pure_slope = pure.slope;
    fit.pure_residual = pure.rss;
    fit.fitted_slope = pure.slope;
    fit.log_residual = pure.rss;
    for (int power : {1, -1}) {
        std::vector<double> yl(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) yl[i] = y[i] - power * std::log(std::abs(x[i]));
        const auto lf = detail::least_squares(x, yl);
        if (lf.rss <= (1.0 - opts.log_gain) * pure.rss && (fit.log_power == 0 || lf.rss < fit.log_residual)) {
            fit.log_power = power;
            fit.log_residual = lf.rss;
            fit.fitted_slope = lf.slope;
        }
    }
    fit.log_factor_detected = fit.log_power != 0;
    const double err = std::abs(fit.fitted_slope - theoretical_slope);
    fit.relative_slope_error = theoretical_slope != 0.0 ? err / std::abs(theoretical_slope) : err;
    return fit;
}

/// n logarithmically spaced points from hi down to lo.
inline std::vector<double> log_grid(double hi, double lo, std::size_t n) {
    if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw PreconditionError("log_grid: need 0 < lo < hi and n >= 2");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        g[i] = std::exp(std::log(hi) + t * (std::log(lo) - std::log(hi)));
    }
    g.front() = hi;
    g.back() = lo;
    return g;
}

inline std::vector<double> default_eps_grid() { return log_grid(1e-1, 1e-3, 8); }

// ---------------------------------------------------------------------------
// kappa window and ratio limits
// ---------------------------------------------------------------------------

struct KappaWindow {
    double kappa_low = 0.0;
    double kappa_high = 0.0;
    bool nonempty = false;
    [[nodiscard]] double midpoint() const { return 0.5 * (std::max(0.0, kappa_low) + std::min(1.0, kappa_high)); }
};

inline KappaWindow kappa_window(const ProblemParams& P) {
    const double N = P.N, p = P.p, q = P.q, s = P.s;
    const double den = N * (q - 1.0) - (N - 1.0) * p;
    if (!(den > 0.0)) throw PreconditionError("kappa_window: needs p < N(q-1)/(N-1)");
    KappaWindow w;
    w.kappa_low = (N * q * (q - 1.0) - (N - q) * (q - 1.0) * s - (N - q) * p) / (den * q);
    w.kappa_high = ((N - q) * (q - 1.0) * s - (N * q - 2.0 * N + q) * q) / ((N - q) * q);
    w.nonempty = std::max(0.0, w.kappa_low) < std::min(1.0, w.kappa_high);
    return w;
}

struct RatioSeries {
    std::string name;
    std::vector<double> eps;
    std::vector<double> delta;
    std::vector<double> values;
    RateLaw law;
    RateFit fit;
    bool monotone_decreasing = false;
    bool tends_to_zero = false; // from the theoretical law
};

enum class RatioRegime { lemma3, lemma4 };

struct RatioReport {
    RatioRegime regime = RatioRegime::lemma3;
    double kappa = 0.0; // delta = eps^kappa (0 means delta = 1)
    std::vector<RatioSeries> series;
};

namespace detail {

inline void finish_series(RatioSeries& s) {
    s.monotone_decreasing = true;
    for (std::size_t i = 1; i < s.values.size(); ++i) {
        if (!(s.values[i] < s.values[i - 1])) s.monotone_decreasing = false;
    }
    s.tends_to_zero = s.law.exponent > 0.0 || (s.law.exponent == 0.0 && s.law.log_power < 0);
    s.fit = fit_rate(s.eps, s.values, s.law.exponent);
}

} // namespace detail

/// lemma3: eps^((N-p)/(p-1)) / int v_eps^r. lemma4: the two ratios with
/// q-bubbles, delta = eps^kappa (kappa from the window midpoint) when
/// p < N(q-1)/(N-1), delta = 1 otherwise. eps_grid must be decreasing.
inline RatioReport ratio_limits(const ProblemParams& P, const std::vector<double>& eps_grid, RatioRegime regime,
                                double rho = 1.0) {
    RatioReport rep;
    rep.regime = regime;
    const double N = P.N, p = P.p, q = P.q, s = P.s;
    if (regime == RatioRegime::lemma3) {
        RatioSeries ser;
        ser.name = "eps^((N-p)/(p-1))/int v^r";
        ser.law = rate_lemma3_ratio(P);
        for (double e : eps_grid) {
            const auto b = make_bubble(BubbleKind::p_bubble, e, 1.0, rho, P);
            ser.eps.push_back(e);
            ser.delta.push_back(1.0);
            ser.values.push_back(std::pow(e, (N - p) / (p - 1.0)) / bubble_norm(b, NormRequest::L_r));
        }
        detail::finish_series(ser);
        rep.series.push_back(std::move(ser));
        return rep;
    }

    const double pc = N * (q - 1.0) / (N - 1.0);
    const bool case_i = p < pc && !detail::on_boundary(p, pc);
    RateLaw grad_law, cut_law;
    if (case_i) {
        const auto w = kappa_window(P);
        if (!w.nonempty) throw PreconditionError("ratio_limits: empty kappa window");
        rep.kappa = w.midpoint();
        grad_law = {(N * (q - 1.0) - (N - 1.0) * p) * (rep.kappa - w.kappa_low) / (q - 1.0), 0, "case_i"};
        cut_law = {(N - q) * (w.kappa_high - rep.kappa) / (q - 1.0), 0, "case_i"};
    } else {
        const int lp = detail::on_boundary(p, pc) ? 1 : 0;
        grad_law = {((N - q) * s - N * p) / q, lp, "case_ii"};
        cut_law = {((N - q) * (q - 1.0) * s - (N * q - 2.0 * N + q) * q) / (q * (q - 1.0)), 0, "case_ii"};
    }
    RatioSeries g{"int|grad v|^p/int v^s", {}, {}, {}, grad_law, {}, false, false};
    RatioSeries c{"(eps/delta)^((N-q)/(q-1))/int v^s", {}, {}, {}, cut_law, {}, false, false};
    for (double e : eps_grid) {
        const double delta = case_i ? std::pow(e, rep.kappa) : 1.0;
        const auto b = make_bubble(BubbleKind::q_bubble, e, delta, rho, P);
        const double vs = bubble_norm(b, NormRequest::L_s);
        for (auto* ser : {&g, &c}) {
            ser->eps.push_back(e);
            ser->delta.push_back(delta);
        }
        g.values.push_back(bubble_norm(b, NormRequest::grad_p) / vs);
        c.values.push_back(std::pow(e / delta, (N - q) / (q - 1.0)) / vs);
    }
    detail::finish_series(g);
    detail::finish_series(c);
    rep.series.push_back(std::move(g));
    rep.series.push_back(std::move(c));
    return rep;
}

} // namespace dplab
