#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <numbers>

namespace chemowave::quad {

template <std::size_t N>
struct GaussLegendreRule {
    std::array<double, N> nodes{};
    std::array<double, N> weights{};
};

/// N-point Gauss-Legendre rule on [-1, 1], nodes found by Newton iteration
/// on the Legendre polynomial P_N.
template <std::size_t N>
const GaussLegendreRule<N>& gauss_legendre() {
    static const GaussLegendreRule<N> rule = [] {
        GaussLegendreRule<N> r;
        const double n = static_cast<double>(N);
        for (std::size_t i = 0; i < N; ++i) {
            double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = x;
                for (std::size_t k = 2; k <= N; ++k) {
                    const double kk = static_cast<double>(k);
                    const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16) {
                    break;
                }
            }
            r.nodes[i] = x;
            r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return r;
    }();
    return rule;
}

/// Fixed-order Gauss-Legendre integral of f over [a, b].
template <std::size_t N = 10, typename F>
double gauss(F&& f, double a, double b) {
    const auto& rule = gauss_legendre<N>();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    return half * sum;
}

struct AdaptiveResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
};

namespace detail {

template <typename F>
void adaptive_step(F& f, double a, double b, double whole, double abs_tol, double rel_tol, int depth,
                   AdaptiveResult& out) {
    const double m = 0.5 * (a + b);
    const double left = gauss(f, a, m);
    const double right = gauss(f, m, b);
    const double refined = left + right;
    const double diff = std::abs(refined - whole);
    const double tol = std::max(abs_tol, rel_tol * std::abs(refined));
    if (diff <= tol || depth <= 0) {
        if (diff > tol || !std::isfinite(refined)) {
            out.converged = false;
        }
        out.value += refined;
        out.error_estimate += diff;
        return;
    }
    adaptive_step(f, a, m, left, 0.5 * abs_tol, rel_tol, depth - 1, out);
    adaptive_step(f, m, b, right, 0.5 * abs_tol, rel_tol, depth - 1, out);
}

}  // namespace detail

/// Adaptive composite Gauss-Legendre quadrature. A panel is accepted when the
/// 10-point rule and its two-panel refinement agree to
/// max(abs_tol, rel_tol * |I|); the absolute budget halves at each split.
template <typename F>
AdaptiveResult adaptive_gauss(F&& f, double a, double b, double abs_tol = 1e-12, double rel_tol = 1e-14,
                              int max_depth = 40) {
    AdaptiveResult out;
    out.value = 0.0;
    const double whole = gauss(f, a, b);
    detail::adaptive_step(f, a, b, whole, abs_tol, rel_tol, max_depth, out);
    return out;
}

/// Trapezoid rule on a uniform grid.
template <typename Range>
double trapezoid(const Range& values, double h) {
    const std::size_t n = std::size(values);
    if (n < 2) {
        return 0.0;
    }
    double sum = 0.5 * (values[0] + values[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        sum += values[i];
    }
    return sum * h;
}

}  // namespace chemowave::quad
