#pragma once

// Radial solutions of
//   -(r^(N-1) (|u'|^(p-2) u' + a(r) |u'|^(q-2) u'))' = r^(N-1) f(r, u),  u'(0) = 0, u(R) = 0
// by shooting on u(0). The state is (u, Phi) with Phi = r^(N-1) * flux, and u'
// is recovered from the flux through invert_flux.

#include "dplab/constants.hpp"
#include "dplab/errors.hpp"
#include "dplab/ode.hpp"
#include "dplab/params.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace dplab {

/// Radial coefficient a(r) = base + coef * r^exponent.
struct CoefficientField {
    double base = 0.0;
    double coef = 0.0;
    double exponent = 1.0;

    [[nodiscard]] double a(double r) const { return base + (coef != 0.0 ? coef * std::pow(r, exponent) : 0.0); }
    [[nodiscard]] double da(double r) const {
        if (coef == 0.0) return 0.0;
        return coef * exponent * std::pow(r, exponent - 1.0);
    }
    [[nodiscard]] bool radially_nondecreasing() const { return coef == 0.0 || coef * exponent >= 0.0; }

    static CoefficientField zero() { return {}; }
    static CoefficientField constant(double a0) { return {a0, 0.0, 1.0}; }
};

/// Sampled check of a >= 0 (and a' >= 0 when `nondecreasing`) on [0, R].
inline bool check_coefficient(const CoefficientField& a, double R, bool nondecreasing, std::size_t samples = 257) {
    for (std::size_t i = 0; i < samples; ++i) {
        const double r = R * static_cast<double>(i) / static_cast<double>(samples - 1);
        if (a.a(r) < 0.0) return false;
        if (nondecreasing && r > 0.0 && a.da(r) < 0.0) return false;
    }
    return true;
}

/// f(r, u) = constant + sum_k coef_k |u|^(e_k - 2) u, with the primitive F in u.
struct SourceTerm {
    struct Power {
        double coef = 0.0;
        double exponent = 2.0;
    };
    double constant = 0.0;
    std::vector<Power> powers;

    [[nodiscard]] double f(double, double u) const {
        double v = constant;
        for (const auto& pw : powers) v += pw.coef * std::pow(std::abs(u), pw.exponent - 2.0) * u;
        return v;
    }
    [[nodiscard]] double F(double, double u) const {
        double v = constant * u;
        for (const auto& pw : powers) v += pw.coef * std::pow(std::abs(u), pw.exponent) / pw.exponent;
        return v;
    }

    static SourceTerm torsion(double c = 1.0) { return {c, {}}; }
};

struct RadialSolution {
    std::vector<double> grid;
    std::vector<double> u;
    std::vector<double> du;
    std::vector<double> flux;
    double shooting_value = 0.0;
    double residual = 0.0;
    int N = 3;
    double p = 2.0;
    double q = 2.5;
    double R = 1.0;
};

enum class ShootingStatus { solved, no_sign_change };

struct RadialSolveResult {
    ShootingStatus status = ShootingStatus::solved;
    RadialSolution solution;
    int bisections = 0;
    double boundary_value = 0.0; // u(R) at the accepted shooting value
};

struct RadialSolverOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    double start_fraction = 1e-8; // series start at r0 = R * start_fraction
    int max_doublings = 10;
};

namespace detail {

struct ShootingSystem {
    int N;
    double p, q;
    const CoefficientField& a;
    const SourceTerm& f;

    [[nodiscard]] State<2> rhs(double r, const State<2>& y) const {
        const double rn1 = std::pow(r, N - 1.0);
        const double du = invert_flux(y[1] / rn1, a.a(r), p, q);
        return {du, -rn1 * f.f(r, y[0])};
    }

    /// Two-term series start at r0: Phi ~ -f(0, u0) r^N / N.
    [[nodiscard]] State<2> start(double u0, double r0) const {
        const double f0 = f.f(0.0, u0);
        const double Phi = -f0 * std::pow(r0, static_cast<double>(N)) / N;
        const double du = invert_flux(-f0 * r0 / N, a.a(0.0), p, q);
        // u(r0) = u0 + int_0^r0 u' ~ u0 + du r0 (p-1)/p for the leading power law
        return {u0 + du * r0 * (p - 1.0) / p, Phi};
    }
};

} // namespace detail

/// Boundary value u(R) for the shooting value u0, integrating node to node so
/// that the bisection and the stored profile follow the same path.
inline double shoot(const detail::ShootingSystem& sys, double u0, const std::vector<double>& nodes,
                    const RadialSolverOptions& opts, RadialSolution* out = nullptr) {
    const double r0 = nodes.back() * opts.start_fraction;
    auto rhs = [&](double r, const State<2>& y) { return sys.rhs(r, y); };
    OdeOptions ode{opts.rel_tol, opts.abs_tol, 0.0, 2'000'000};
    State<2> y = sys.start(u0, r0);
    double r = r0;
    if (out != nullptr) {
        out->grid = nodes;
        out->u.assign(nodes.size(), 0.0);
        out->du.assign(nodes.size(), 0.0);
        out->flux.assign(nodes.size(), 0.0);
        out->u[0] = u0;
    }
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        ode.initial_step = i == 1 ? r0 : 0.0;
        y = integrate_ode<2>(rhs, r, y, nodes[i], ode).y;
        r = nodes[i];
        if (out != nullptr) {
            const double rn1 = std::pow(r, sys.N - 1.0);
            out->u[i] = y[0];
            out->flux[i] = y[1] / rn1;
            out->du[i] = invert_flux(out->flux[i], sys.a.a(r), sys.p, sys.q);
        }
    }
    return y[0];
}

/// max over interior nodes of |(r^(N-1) flux)' + r^(N-1) f(r, u)| / scale, central
/// differences; scale is the largest |r^(N-1) f| (1 if that vanishes).
inline double residual_check(const RadialSolution& sol, const SourceTerm& f) {
    const std::size_t n = sol.grid.size();
    if (n < 3) return 0.0;
    std::vector<double> Phi(n), src(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double rn1 = std::pow(sol.grid[i], sol.N - 1.0);
        Phi[i] = rn1 * sol.flux[i];
        src[i] = rn1 * f.f(sol.grid[i], sol.u[i]);
        scale = std::max(scale, std::abs(src[i]));
    }
    if (scale == 0.0) scale = 1.0;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double d = (Phi[i + 1] - Phi[i - 1]) / (sol.grid[i + 1] - sol.grid[i - 1]);
        worst = std::max(worst, std::abs(d + src[i]));
    }
    return worst / scale;
}

/// Shooting solve on a uniform grid with grid_size intervals. The bracket for
/// u(0) is [0, u_t K] with u_t the p-torsion height and K doubled up to 2^10.
inline RadialSolveResult solve_radial_bvp(const ProblemParams& P, const CoefficientField& a, const SourceTerm& f,
                                          std::size_t grid_size, const RadialSolverOptions& opts = {}) {
    if (grid_size < 256) throw PreconditionError("solve_radial_bvp: grid_size must be at least 256");
    if (!(P.p > 1.0) || !(P.q > P.p) || !(P.domain_radius > 0.0)) {
        throw PreconditionError("solve_radial_bvp: need 1 < p < q and R > 0");
    }
    if (!check_coefficient(a, P.domain_radius, false)) throw PreconditionError("solve_radial_bvp: a must be >= 0");
    const double R = P.domain_radius;
    const detail::ShootingSystem sys{P.N, P.p, P.q, a, f};
    RadialSolveResult res;
    std::vector<double> nodes(grid_size + 1);
    for (std::size_t i = 0; i <= grid_size; ++i) nodes[i] = R * static_cast<double>(i) / static_cast<double>(grid_size);
    nodes.back() = R;

    const double ut = (P.p - 1.0) / P.p * std::pow(static_cast<double>(P.N), -1.0 / (P.p - 1.0)) *
                      std::pow(R, P.p / (P.p - 1.0));
    double lo = 0.0;
    double g_lo = shoot(sys, lo, nodes, opts);
    double hi = ut;
    double g_hi = 0.0;
    bool bracketed = g_lo == 0.0;
    if (!bracketed) {
        for (int k = 0; k <= opts.max_doublings; ++k) {
            g_hi = shoot(sys, hi, nodes, opts);
            if ((g_lo < 0.0) != (g_hi < 0.0) || g_hi == 0.0) {
                bracketed = true;
                break;
            }
            hi *= 2.0;
        }
    }
    if (!bracketed) {
        res.status = ShootingStatus::no_sign_change;
        return res;
    }
    double u0 = g_lo == 0.0 ? lo : hi;
    if (g_lo != 0.0 && g_hi != 0.0) {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const double g = shoot(sys, mid, nodes, opts);
            ++res.bisections;
            if (g == 0.0) {
                lo = hi = mid;
                break;
            }
            if ((g < 0.0) == (g_lo < 0.0)) {
                lo = mid;
                g_lo = g;
            } else {
                hi = mid;
                g_hi = g;
            }
            if (std::abs(g) <= 1e-13 * std::max(std::abs(mid), 1e-300)) {
                lo = hi = mid;
                break;
            }
        }
        u0 = 0.5 * (lo + hi);
    }
    auto& sol = res.solution;
    sol.N = P.N;
    sol.p = P.p;
    sol.q = P.q;
    sol.R = R;
    sol.shooting_value = u0;
    res.boundary_value = shoot(sys, u0, nodes, opts, &sol);
    double umax = 0.0;
    for (double v : sol.u) umax = std::max(umax, std::abs(v));
    if (std::abs(res.boundary_value) > 1e-10 * std::max(umax, 1e-300) && umax > 0.0) {
        throw NumericError("solve_radial_bvp: boundary condition not met", res.boundary_value);
    }
    sol.residual = residual_check(sol, f);
    return res;
}

// ---------------------------------------------------------------------------
// CSV: "# format_version=1" header line, then r,u,du,flux rows.
// ---------------------------------------------------------------------------

inline constexpr int kSolutionFormatVersion = 1;

inline void write_solution_csv(std::ostream& os, const RadialSolution& sol) {
    os << "# format_version=" << kSolutionFormatVersion << " N=" << sol.N << std::setprecision(17) << " p=" << sol.p
       << " q=" << sol.q << " R=" << sol.R << " shooting_value=" << sol.shooting_value << "\n";
    os << "r,u,du,flux\n";
    for (std::size_t i = 0; i < sol.grid.size(); ++i) {
        os << sol.grid[i] << "," << sol.u[i] << "," << sol.du[i] << "," << sol.flux[i] << "\n";
    }
}

/// Reads the CSV written above. N, p, q, R come from the header when present.
inline RadialSolution read_solution_csv(std::istream& is) {
    RadialSolution sol;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string tok;
            while (hs >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const double val = std::stod(tok.substr(eq + 1));
                if (key == "format_version" && static_cast<int>(val) != kSolutionFormatVersion) {
                    throw PreconditionError("solution CSV: unsupported format_version");
                }
                if (key == "N") sol.N = static_cast<int>(val);
                if (key == "p") sol.p = val;
                if (key == "q") sol.q = val;
                if (key == "R") sol.R = val;
                if (key == "shooting_value") sol.shooting_value = val;
            }
            continue;
        }
        if (!header_seen) {
            if (line.rfind("r,u,du,flux", 0) != 0) throw PreconditionError("solution CSV: missing r,u,du,flux header");
            header_seen = true;
            continue;
        }
        std::istringstream ls(line);
        std::string cell;
        double vals[4];
        for (double& v : vals) {
            if (!std::getline(ls, cell, ',')) throw PreconditionError("solution CSV: short row");
            v = std::stod(cell);
        }
        sol.grid.push_back(vals[0]);
        sol.u.push_back(vals[1]);
        sol.du.push_back(vals[2]);
        sol.flux.push_back(vals[3]);
    }
    if (sol.grid.size() < 3) throw PreconditionError("solution CSV: too few rows");
    for (std::size_t i = 1; i < sol.grid.size(); ++i) {
        if (!(sol.grid[i] > sol.grid[i - 1])) throw PreconditionError("solution CSV: grid not increasing");
    }
    sol.R = sol.grid.back();
    return sol;
}

// JSON specs for the coefficient and the source, as used in run configs.

inline void from_json(const nlohmann::json& j, CoefficientField& a) {
    a = CoefficientField{};
    for (const auto& [key, _] : j.items()) {
        if (key != "base" && key != "coef" && key != "exponent") throw PreconditionError("coefficient: unknown key " + key);
    }
    if (j.contains("base")) a.base = j.at("base").get<double>();
    if (j.contains("coef")) a.coef = j.at("coef").get<double>();
    if (j.contains("exponent")) a.exponent = j.at("exponent").get<double>();
}

inline void to_json(nlohmann::json& j, const CoefficientField& a) {
    j = nlohmann::json{{"base", a.base}, {"coef", a.coef}, {"exponent", a.exponent}};
}

inline void from_json(const nlohmann::json& j, SourceTerm& f) {
    f = SourceTerm{};
    for (const auto& [key, _] : j.items()) {
        if (key != "constant" && key != "powers") throw PreconditionError("source: unknown key " + key);
    }
    if (j.contains("constant")) f.constant = j.at("constant").get<double>();
    if (j.contains("powers")) {
        for (const auto& t : j.at("powers")) f.powers.push_back({t.at("coef").get<double>(), t.at("exponent").get<double>()});
    }
}

inline void to_json(nlohmann::json& j, const SourceTerm& f) {
    j = nlohmann::json{{"constant", f.constant}, {"powers", nlohmann::json::array()}};
    for (const auto& pw : f.powers) j["powers"].push_back({{"coef", pw.coef}, {"exponent", pw.exponent}});
}

} // namespace dplab
