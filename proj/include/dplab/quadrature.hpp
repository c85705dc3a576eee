#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature and grid rules used by every
// radial integral in the library.

#include "dplab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <queue>
#include <span>
#include <vector>

namespace dplab {

struct QuadratureOptions {
    double rel_tol = 1e-12;
    double abs_tol = 0.0;
    std::size_t max_intervals = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t intervals = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (7-point Gauss rule).
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gk15(F&& f, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kKronrodNodes[j];
        const double sum = f(centre - dx) + f(centre + dx);
        kronrod += kKronrodWeights[j] * sum;
        if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

} // namespace detail

/// Globally adaptive G7K15 on [a, b]: the interval with the largest error
/// estimate is bisected until the summed estimate meets the tolerance.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opts = {}) {
    if (a == b) return {};
    std::priority_queue<detail::Segment> heap;
    auto first = detail::gk15(f, a, b);
    double total = first.value;
    double error = first.error;
    heap.push(first);
    std::size_t count = 1;
    while (error > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
        if (count >= opts.max_intervals) {
            throw NumericError("adaptive quadrature did not converge", error);
        }
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Interval cannot be split further in double precision.
            throw NumericError("adaptive quadrature interval underflow", error);
        }
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++count;
    }
    // Re-sum to shed the drift accumulated by incremental updates.
    double value = 0.0;
    double err = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {value, err, count};
}

/// Integrate over consecutive knots; each piece is adaptive on its own. The
/// tolerance is shared, so a piece that is tiny relative to the total does not
/// force needless refinement.
template <class F>
QuadratureResult integrate_piecewise(F&& f, std::span<const double> knots,
                                     const QuadratureOptions& opts = {}) {
    QuadratureResult out;
    if (knots.size() < 2) return out;
    // First pass at loose tolerance fixes the scale used by every piece.
    QuadratureOptions coarse = opts;
    coarse.rel_tol = std::max(opts.rel_tol, 1e-6);
    double scale = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        scale += std::abs(integrate(f, knots[i], knots[i + 1], coarse).value);
    }
    QuadratureOptions piece = opts;
    piece.abs_tol = std::max(opts.abs_tol, opts.rel_tol * scale / static_cast<double>(knots.size()));
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        auto r = integrate(f, knots[i], knots[i + 1], piece);
        out.value += r.value;
        out.error += r.error;
        out.intervals += r.intervals;
    }
    return out;
}

/// Composite trapezoid rule on a (possibly non-uniform) grid.
inline double trapezoid(std::span<const double> x, std::span<const double> y) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        sum += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    }
    return sum;
}

/// Surface area of the unit sphere in R^N, i.e. the radial volume factor.
inline double unit_sphere_area(int N) {
    const double half = 0.5 * N;
    return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

/// Volume of the ball of radius R in R^N.
inline double ball_volume(int N, double R) {
    return unit_sphere_area(N) * std::pow(R, N) / N;
}

} // namespace dplab
