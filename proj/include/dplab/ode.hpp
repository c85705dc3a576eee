#pragma once

// Dormand-Prince 5(4) embedded pair with step-size control. Small fixed-size
// state only; the radial problems here are two-dimensional.

#include "dplab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>

namespace dplab {

struct OdeOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    double initial_step = 0.0; // 0 picks (t1 - t0) * 1e-6
    std::size_t max_steps = 2'000'000;
};

template <std::size_t D>
using State = std::array<double, D>;

/// Stop condition evaluated after every accepted step; returning true halts
/// integration and reports the step end point.
template <std::size_t D>
using StopPredicate = std::function<bool(double, const State<D>&)>;

template <std::size_t D>
struct OdeOutcome {
    double t = 0.0;
    State<D> y{};
    bool stopped = false;
    std::size_t steps = 0;
    double last_step = 0.0;
};

namespace detail {

template <std::size_t D>
State<D> axpy(const State<D>& y, double h, std::initializer_list<std::pair<double, const State<D>*>> terms) {
    State<D> out = y;
    for (const auto& [c, k] : terms) {
        for (std::size_t i = 0; i < D; ++i) out[i] += h * c * (*k)[i];
    }
    return out;
}

} // namespace detail

/// Integrate y' = rhs(t, y) from t0 to t1 (t1 > t0). The last step lands
/// exactly on t1. `stop` may end integration early at an accepted step.
template <std::size_t D, class Rhs>
OdeOutcome<D> integrate_ode(Rhs&& rhs, double t0, State<D> y0, double t1,
                            const OdeOptions& opts = {},
                            const StopPredicate<D>& stop = {}) {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    OdeOutcome<D> out;
    out.t = t0;
    out.y = y0;
    if (t1 <= t0) return out;

    double h = opts.initial_step > 0.0 ? opts.initial_step : (t1 - t0) * 1e-6;
    State<D> k1 = rhs(out.t, out.y);
    while (out.t < t1) {
        if (out.steps >= opts.max_steps) {
            throw NumericError("ODE integration exceeded the step budget", out.t);
        }
        bool last = false;
        if (out.t + h >= t1) {
            h = t1 - out.t;
            last = true;
        }
        const double t = out.t;
        const State<D>& y = out.y;
        const auto k2 = rhs(t + c2 * h, detail::axpy<D>(y, h, {{a21, &k1}}));
        const auto k3 = rhs(t + c3 * h, detail::axpy<D>(y, h, {{a31, &k1}, {a32, &k2}}));
        const auto k4 = rhs(t + c4 * h, detail::axpy<D>(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const auto k5 = rhs(t + c5 * h, detail::axpy<D>(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const auto k6 = rhs(t + h, detail::axpy<D>(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        const auto y_new = detail::axpy<D>(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        const auto k7 = rhs(last ? t1 : t + h, y_new);

        double err = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
            err = std::max(err, std::abs(e) / sc);
        }
        if (!std::isfinite(err)) {
            h *= 0.25;
            if (h < 1e-300) throw NumericError("ODE right-hand side not finite", out.t);
            continue;
        }
        if (err <= 1.0) {
            out.t = last ? t1 : t + h;
            out.y = y_new;
            out.last_step = h;
            k1 = k7;
            ++out.steps;
            if (stop && stop(out.t, out.y)) {
                out.stopped = true;
                return out;
            }
            const double grow = err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err, -0.2));
            h *= grow;
        } else {
            h *= std::max(0.1, 0.9 * std::pow(err, -0.2));
            if (h < std::abs(out.t) * 1e-15 + 1e-300) {
                throw NumericError("ODE step size underflow (stiff or singular problem)", out.t);
            }
        }
    }
    return out;
}

} // namespace dplab
