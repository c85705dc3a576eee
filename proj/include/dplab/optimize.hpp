#pragma once

// Small dense optimisation kit: golden-section/Brent refinement in 1-D, BFGS
// with backtracking in fixed dimension, and a Halton sequence for seeding.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace dplab {

/// Brent's method (golden section + parabolic steps) for a minimum in [a, b].
template <class F>
std::pair<double, double> brent_minimize(F&& f, double a, double b, double tol = 1e-14, int max_iter = 500) {
    constexpr double golden = 0.3819660112501051;
    double x = a + golden * (b - a);
    double w = x, v = x;
    double fx = f(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const double m = 0.5 * (a + b);
        const double tol1 = tol * std::abs(x) + 1e-300;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
        bool parabolic = false;
        if (std::abs(e) > tol1) {
            double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p; else q = -q;
            if (std::abs(p) < std::abs(0.5 * q * e) && p > q * (a - x) && p < q * (b - x)) {
                e = d;
                d = p / q;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = x < m ? tol1 : -tol1;
                parabolic = true;
            }
        }
        if (!parabolic) {
            e = (x < m ? b : a) - x;
            d = golden * e;
        }
        const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0 ? tol1 : -tol1);
        const double fu = f(u);
        if (fu <= fx) {
            if (u < x) b = x; else a = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return {x, fx};
}

template <std::size_t D>
using Vec = std::array<double, D>;

template <std::size_t D>
struct BfgsResult {
    Vec<D> x{};
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// BFGS with Armijo backtracking. `fg(x, grad)` returns f(x) and fills grad.
template <std::size_t D, class FG>
BfgsResult<D> bfgs_minimize(FG&& fg, Vec<D> x, int max_iter = 2000, double grad_tol = 1e-12) {
    std::array<std::array<double, D>, D> H{};
    for (std::size_t i = 0; i < D; ++i) H[i][i] = 1.0;
    Vec<D> g{};
    double f = fg(x, g);
    BfgsResult<D> out;
    for (int it = 0; it < max_iter; ++it) {
        double gnorm = 0.0;
        for (double gi : g) gnorm = std::max(gnorm, std::abs(gi));
        if (gnorm <= grad_tol * std::max(1.0, std::abs(f))) {
            out.converged = true;
            out.iterations = it;
            break;
        }
        Vec<D> dir{};
        for (std::size_t i = 0; i < D; ++i) {
            for (std::size_t j = 0; j < D; ++j) dir[i] -= H[i][j] * g[j];
        }
        double slope = 0.0;
        for (std::size_t i = 0; i < D; ++i) slope += dir[i] * g[i];
        if (slope >= 0.0) { // lost descent: restart from steepest descent
            for (std::size_t i = 0; i < D; ++i) {
                for (std::size_t j = 0; j < D; ++j) H[i][j] = i == j ? 1.0 : 0.0;
                dir[i] = -g[i];
            }
            slope = 0.0;
            for (std::size_t i = 0; i < D; ++i) slope += dir[i] * g[i];
        }
        double step = 1.0;
        Vec<D> xn{}, gn{};
        double fn = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 80; ++ls) {
            for (std::size_t i = 0; i < D; ++i) xn[i] = x[i] + step * dir[i];
            fn = fg(xn, gn);
            if (std::isfinite(fn) && fn <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            out.iterations = it;
            break;
        }
        Vec<D> s{}, y{};
        double sy = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
            sy += s[i] * y[i];
        }
        const double change = std::abs(f - fn);
        x = xn;
        g = gn;
        f = fn;
        out.iterations = it + 1;
        if (sy > 1e-300) {
            Vec<D> Hy{};
            for (std::size_t i = 0; i < D; ++i) {
                for (std::size_t j = 0; j < D; ++j) Hy[i] += H[i][j] * y[j];
            }
            double yHy = 0.0;
            for (std::size_t i = 0; i < D; ++i) yHy += y[i] * Hy[i];
            const double rho = 1.0 / sy;
            for (std::size_t i = 0; i < D; ++i) {
                for (std::size_t j = 0; j < D; ++j) {
                    H[i][j] += (1.0 + yHy * rho) * rho * s[i] * s[j] - rho * (Hy[i] * s[j] + s[i] * Hy[j]);
                }
            }
        }
        if (change <= 1e-16 * std::max(1.0, std::abs(f))) {
            out.converged = true;
            break;
        }
    }
    out.x = x;
    out.value = f;
    return out;
}

/// Radical inverse of `index` in `base` (van der Corput); component of a
/// Halton point.
inline double radical_inverse(std::size_t index, std::size_t base) {
    double result = 0.0;
    double f = 1.0 / static_cast<double>(base);
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= static_cast<double>(base);
    }
    return result;
}

/// `index`-th point of the Halton sequence in [0,1)^D (bases 2, 3, 5, 7, ...).
/// `offset` shifts the start so different seeds give different but fixed sets.
template <std::size_t D>
Vec<D> halton_point(std::size_t index, std::size_t offset = 0) {
    static constexpr std::array<std::size_t, 8> primes{2, 3, 5, 7, 11, 13, 17, 19};
    static_assert(D <= primes.size());
    Vec<D> out{};
    for (std::size_t i = 0; i < D; ++i) out[i] = radical_inverse(index + 1 + offset, primes[i]);
    return out;
}

} // namespace dplab
