#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chemowave/error.hpp"
#include "chemowave/grid.hpp"
#include "chemowave/params.hpp"
#include "chemowave/profile.hpp"
#include "chemowave/quadrature.hpp"

namespace chemowave {

// ---------------------------------------------------------------------------
// Hopf-Cole transform

/// v = -(ln w)_x: central differences inside, one-sided second order at the
/// two ends.
inline std::vector<double> hopf_cole_forward(std::span<const double> w, const Grid1D& grid) {
    if (w.size() != grid.nx) {
        throw DimensionError("hopf_cole_forward: size mismatch");
    }
    std::vector<double> lw(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0)) {
            throw DomainError("hopf_cole_forward: w must be positive");
        }
        lw[i] = std::log(w[i]);
    }
    const std::size_t n = grid.nx;
    const double inv_2h = 0.5 / grid.h;
    std::vector<double> v(n);
    v[0] = -(-3.0 * lw[0] + 4.0 * lw[1] - lw[2]) * inv_2h;
    v[n - 1] = -(3.0 * lw[n - 1] - 4.0 * lw[n - 2] + lw[n - 3]) * inv_2h;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        v[i] = -(lw[i + 1] - lw[i - 1]) * inv_2h;
    }
    return v;
}

/// Inverse of hopf_cole_forward with w fixed at the right end: ln w is
/// rebuilt by midpoint-rule cumulative integration over double cells,
/// which undoes the forward stencil exactly.
inline std::vector<double> hopf_cole_inverse(std::span<const double> v, const Grid1D& grid, double w_right) {
    if (v.size() != grid.nx) {
        throw DimensionError("hopf_cole_inverse: size mismatch");
    }
    if (!(w_right > 0.0)) {
        throw DomainError("hopf_cole_inverse: w_right must be positive");
    }
    const std::size_t n = grid.nx;
    const double h = grid.h;
    std::vector<double> lw(n);
    lw[n - 1] = std::log(w_right);
    lw[n - 3] = lw[n - 1] + 2.0 * h * v[n - 2];
    // one-sided closure at the right end: 3 f_{n-1} - 4 f_{n-2} + f_{n-3} = -2h v_{n-1}
    lw[n - 2] = (3.0 * lw[n - 1] + lw[n - 3] + 2.0 * h * v[n - 1]) / 4.0;
    for (std::size_t i = n - 2; i-- > 1;) {
        lw[i - 1] = lw[i + 1] + 2.0 * h * v[i];
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(lw[i]);
    }
    return w;
}

/// w(x, t) = w0(x) exp(-int_0^t u(x, tau) dtau), trapezoid rule in time over
/// equally spaced snapshots.
inline std::vector<double> reconstruct_w_from_history(std::span<const double> w0, std::span<const State> snapshots,
                                                      const Grid1D& grid) {
    if (w0.size() != grid.nx) {
        throw DimensionError("reconstruct_w_from_history: w0 does not match the grid");
    }
    if (snapshots.empty()) {
        throw DimensionError("reconstruct_w_from_history: no snapshots");
    }
    for (const auto& s : snapshots) {
        if (s.u.size() != grid.nx) {
            throw DimensionError("reconstruct_w_from_history: snapshot does not match the grid");
        }
    }
    std::vector<double> integral(grid.nx, 0.0);
    if (snapshots.size() > 1) {
        const double dt = snapshots[1].t - snapshots[0].t;
        for (std::size_t k = 1; k < snapshots.size(); ++k) {
            const double step = snapshots[k].t - snapshots[k - 1].t;
            if (!(dt > 0.0) || std::abs(step - dt) > 1e-9 * std::max(1.0, dt)) {
                throw DimensionError("reconstruct_w_from_history: snapshots are not equally spaced in time");
            }
            for (std::size_t i = 0; i < grid.nx; ++i) {
                integral[i] += 0.5 * dt * (snapshots[k - 1].u[i] + snapshots[k].u[i]);
            }
        }
    }
    std::vector<double> w(grid.nx);
    for (std::size_t i = 0; i < grid.nx; ++i) {
        w[i] = w0[i] * std::exp(-integral[i]);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Shifted wave on the grid

struct ShiftedWave {
    std::vector<double> U;
    std::vector<double> V;
    std::vector<double> Uz;
};

/// (U, V)(x + x0 - s t) at every grid node.
inline ShiftedWave shifted_wave(const WaveProfile& profile, double x0, double t, const Grid1D& grid) {
    ShiftedWave out;
    out.U.resize(grid.nx);
    out.V.resize(grid.nx);
    out.Uz.resize(grid.nx);
    const double offset = x0 - profile.s * t;
    for (std::size_t i = 0; i < grid.nx; ++i) {
        const auto pt = profile.wave->at(grid.x(i) + offset);
        out.U[i] = pt.U;
        out.V[i] = -pt.U / profile.s;
        out.Uz[i] = pt.slope;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Front tracking and speed

/// Position where u crosses `level`, by linear interpolation between the
/// bracketing nodes. Exactly one crossing must exist inside the window.
inline double front_position(std::span<const double> u, const Grid1D& grid, double level,
                             std::optional<std::pair<double, double>> window = std::nullopt) {
    if (u.size() != grid.nx) {
        throw DimensionError("front_position: size mismatch");
    }
    const double xa = window ? window->first : grid.x_left;
    const double xb = window ? window->second : grid.x_right;
    std::size_t crossings = 0;
    double where = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i + 1 < grid.nx; ++i) {
        const double x0 = grid.x(i);
        const double x1 = grid.x(i + 1);
        if (x0 < xa || x1 > xb) {
            continue;
        }
        const bool above0 = u[i] >= level;
        const bool above1 = u[i + 1] >= level;
        if (above0 != above1) {
            ++crossings;
            where = x0 + (level - u[i]) / (u[i + 1] - u[i]) * (x1 - x0);
        }
    }
    if (crossings == 0) {
        throw TrackingError("front_position: no crossing of level " + std::to_string(level));
    }
    if (crossings > 1) {
        throw TrackingError("front_position: " + std::to_string(crossings) + " crossings of level " +
                            std::to_string(level));
    }
    return where;
}

/// Least-squares slope of front position against time over samples with
/// t in [window.first, window.second].
inline double measure_speed(std::span<const double> times, std::span<const double> fronts,
                            std::pair<double, double> window) {
    if (times.size() != fronts.size()) {
        throw DimensionError("measure_speed: series lengths differ");
    }
    std::vector<double> t;
    std::vector<double> x;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] >= window.first - 1e-12 && times[k] <= window.second + 1e-12 && std::isfinite(fronts[k])) {
            t.push_back(times[k]);
            x.push_back(fronts[k]);
        }
    }
    if (t.size() < 2) {
        throw TrackingError("measure_speed: fewer than two samples in the time window");
    }
    return detail::least_squares(t, x).slope;
}

// ---------------------------------------------------------------------------
// Shift estimation

struct ShiftEstimate {
    double x0 = 0.0;
    double mass_residual = 0.0;       // trapezoid of u0 - U(. + x0) over the grid
    double x0_closed_form = 0.0;      // -(1/u_-) * trapezoid of u0 - U
    double gamma = std::numeric_limits<double>::quiet_NaN();
    std::size_t iterations = 0;
};

namespace detail {

// First characteristic direction of A = [[-chi v, -chi u], [-1, 0]] at (u_-, v_-).
inline std::array<double, 2> first_characteristic(const WaveParams& params) {
    const double b = params.chi * params.v_minus;
    const double lambda = 0.5 * (-b - std::sqrt(b * b + 4.0 * params.chi * params.u_minus));
    const double ru = -lambda;
    const double rv = 1.0;
    const double norm = std::hypot(ru, rv);
    return {ru / norm, rv / norm};
}

}  // namespace detail

/// Translation x0 such that u0 - U(. + x0) has zero mass on the grid. The
/// closed form -(1/u_-) int (u0 - U) is the starting point; Newton on the
/// finite-domain mass removes the truncation of the wave tails. When v0 is
/// given, gamma is the coefficient of the first characteristic direction in
/// the decomposition of the initial mass excess (reported, not used).
inline ShiftEstimate estimate_shift(std::span<const double> u0, const WaveProfile& profile, const Grid1D& grid,
                                    std::span<const double> v0 = {}) {
    if (u0.size() != grid.nx) {
        throw DimensionError("estimate_shift: size mismatch");
    }
    const WaveParams& pr = profile.params;
    try {
        (void)front_position(u0, grid, 0.5 * pr.u_minus);
    } catch (const TrackingError& e) {
        throw ShiftError(std::string("estimate_shift: front not inside the domain: ") + e.what());
    }
    const auto mass_gap = [&](double x0, double* derivative) {
        std::vector<double> diff(grid.nx);
        std::vector<double> slope(grid.nx);
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const auto pt = profile.wave->at(grid.x(i) + x0);
            diff[i] = u0[i] - pt.U;
            slope[i] = pt.slope;
        }
        if (derivative) {
            *derivative = -quad::trapezoid(slope, grid.h);
        }
        return quad::trapezoid(diff, grid.h);
    };

    ShiftEstimate est;
    const double gap0 = mass_gap(0.0, nullptr);
    est.x0_closed_form = -gap0 / pr.u_minus;
    if (!v0.empty()) {
        if (v0.size() != grid.nx) {
            throw DimensionError("estimate_shift: v0 size mismatch");
        }
        std::vector<double> dv(grid.nx);
        for (std::size_t i = 0; i < grid.nx; ++i) {
            dv[i] = v0[i] - profile.wave->V(grid.x(i));
        }
        const double gap_v = quad::trapezoid(dv, grid.h);
        // [-u_-  r_u] [x0   ]   [gap_u]
        // [-v_-  r_v] [gamma] = [gap_v]
        const auto r = detail::first_characteristic(pr);
        const double det = -pr.u_minus * r[1] + pr.v_minus * r[0];
        est.gamma = (-pr.u_minus * gap_v + pr.v_minus * gap0) / det + 0.0;  // no signed zero
    }

    const double tol = 1e-12 * pr.u_minus * grid.length();
    double x0 = est.x0_closed_form;
    double gap = 0.0;
    for (std::size_t it = 1; it <= 60; ++it) {
        double dgap = 0.0;
        gap = mass_gap(x0, &dgap);
        est.iterations = it;
        if (std::abs(gap) <= tol) {
            break;
        }
        if (!(std::abs(dgap) > 0.0)) {
            throw ShiftError("estimate_shift: degenerate mass derivative");
        }
        x0 -= gap / dgap;
        if (!std::isfinite(x0)) {
            throw ShiftError("estimate_shift: iteration diverged");
        }
    }
    est.x0 = x0;
    est.mass_residual = gap;
    if (std::abs(gap) > 1e-6 * pr.u_minus * grid.length()) {
        throw ShiftError("estimate_shift: zero-mass shift not found (residual " + std::to_string(gap) + ")");
    }
    return est;
}

// ---------------------------------------------------------------------------
// Anti-derivatives and weighted norms

struct Antiderivatives {
    std::vector<double> phi;
    std::vector<double> psi;
    double phi_end = 0.0;
    double psi_end = 0.0;
};

/// Cumulative trapezoid from the left end of u - U(. + x0 - s t) and
/// v - V(. + x0 - s t).
inline Antiderivatives antiderivatives(std::span<const double> u, std::span<const double> v, const WaveProfile& profile,
                                       double x0, double t, const Grid1D& grid) {
    if (u.size() != grid.nx || v.size() != grid.nx) {
        throw DimensionError("antiderivatives: size mismatch");
    }
    const ShiftedWave wave = shifted_wave(profile, x0, t, grid);
    Antiderivatives out;
    out.phi.assign(grid.nx, 0.0);
    out.psi.assign(grid.nx, 0.0);
    for (std::size_t i = 1; i < grid.nx; ++i) {
        out.phi[i] = out.phi[i - 1] + 0.5 * grid.h * ((u[i - 1] - wave.U[i - 1]) + (u[i] - wave.U[i]));
        out.psi[i] = out.psi[i - 1] + 0.5 * grid.h * ((v[i - 1] - wave.V[i - 1]) + (v[i] - wave.V[i]));
    }
    out.phi_end = out.phi.back();
    out.psi_end = out.psi.back();
    return out;
}

/// Weight w_k = U^{exponent}. alpha = 2p - 1 for p > 1/2, else 0.
struct WeightSpec {
    int index = 1;
    double alpha = 0.0;
    double exponent_of_U = 0.0;
};

inline double weight_alpha(double p) { return p > 0.5 ? 2.0 * p - 1.0 : 0.0; }

inline WeightSpec make_weight(int index, double p) {
    WeightSpec w;
    w.index = index;
    w.alpha = weight_alpha(p);
    switch (index) {
        case 1: w.exponent_of_U = -(w.alpha + 1.0); break;
        case 2: w.exponent_of_U = -w.alpha; break;
        case 3: w.exponent_of_U = -2.0; break;
        case 4: w.exponent_of_U = -1.0; break;
        case 5: w.exponent_of_U = p - w.alpha - 2.0; break;
        case 6: w.exponent_of_U = p - 3.0; break;
        default: throw ParameterError("weight index must be in 1..6, got " + std::to_string(index));
    }
    return w;
}

struct WeightedNorm {
    double integral = 0.0;     // trapezoid of w(U) f^2 over the kept nodes
    double norm = 0.0;         // sqrt(integral)
    double cut_x = 0.0;        // first node dropped by the cut (x_right if none)
    bool truncated = false;
};

/// Trapezoid of U^{exponent} f^2 restricted to cells whose nodes both have
/// U >= u_min_cut.
inline WeightedNorm weighted_norm(std::span<const double> f, const WeightSpec& weight, std::span<const double> U,
                                  const Grid1D& grid, double u_min_cut) {
    if (f.size() != grid.nx || U.size() != grid.nx) {
        throw DimensionError("weighted_norm: size mismatch");
    }
    WeightedNorm out;
    out.cut_x = grid.x_right;
    bool seen_cut = false;
    for (std::size_t i = 0; i < grid.nx; ++i) {
        if (!(U[i] >= u_min_cut)) {
            out.truncated = true;
            if (!seen_cut) {
                out.cut_x = grid.x(i);
                seen_cut = true;
            }
        }
    }
    const auto integrand = [&](std::size_t i) { return std::pow(U[i], weight.exponent_of_U) * f[i] * f[i]; };
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < grid.nx; ++i) {
        if (U[i] >= u_min_cut && U[i + 1] >= u_min_cut) {
            sum += 0.5 * grid.h * (integrand(i) + integrand(i + 1));
        }
    }
    out.integral = sum;
    out.norm = std::sqrt(sum);
    return out;
}

/// Running supremum of the sum of the four component norms.
inline std::vector<double> compute_N(std::span<const double> phi_w1, std::span<const double> psi_w2,
                                     std::span<const double> phiz_w3, std::span<const double> psiz_w4) {
    const std::size_t n = phi_w1.size();
    if (psi_w2.size() != n || phiz_w3.size() != n || psiz_w4.size() != n) {
        throw DimensionError("compute_N: component series are misaligned");
    }
    std::vector<double> out(n);
    double running = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        running = std::max(running, phi_w1[k] + psi_w2[k] + phiz_w3[k] + psiz_w4[k]);
        out[k] = running;
    }
    return out;
}

/// max |u - U| and max |v - V| against the wave shifted to x + x0 - s t.
inline std::pair<double, double> sup_distance(const State& state, const WaveProfile& profile, double s, double x0,
                                              const Grid1D& grid) {
    if (state.u.size() != grid.nx || state.v.size() != grid.nx) {
        throw DimensionError("sup_distance: size mismatch");
    }
    double su = 0.0;
    double sv = 0.0;
    const double offset = x0 - s * state.t;
    for (std::size_t i = 0; i < grid.nx; ++i) {
        const double U = profile.wave->U(grid.x(i) + offset);
        su = std::max(su, std::abs(state.u[i] - U));
        sv = std::max(sv, std::abs(state.v[i] + U / profile.s));
    }
    return {su, sv};
}

/// Central differences inside, one-sided second order at the ends.
inline std::vector<double> central_derivative(std::span<const double> f, const Grid1D& grid) {
    const std::size_t n = f.size();
    std::vector<double> d(n);
    const double inv_2h = 0.5 / grid.h;
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv_2h;
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv_2h;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        d[i] = (f[i + 1] - f[i - 1]) * inv_2h;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Full diagnostics over a snapshot sequence

struct DiagnosticsOptions {
    double u_min_cut_fraction = 1e-6;          // weighted norms keep U >= fraction * u_-
    double speed_window_width = 2.0;           // trailing window for the per-snapshot speed
    std::optional<std::pair<double, double>> speed_window;  // summary window; default [t_end/2, t_end]
};

struct DiagnosticsSeries {
    std::vector<double> times;
    std::vector<double> sup_dist_u;
    std::vector<double> sup_dist_v;
    std::vector<double> front_pos;
    std::vector<double> s_window;
    std::vector<double> N_t;
    std::array<std::vector<double>, 6> weighted_norms;  // index k holds norm_w{k+1}
    std::vector<double> phi_end;
    std::vector<double> psi_end;
};

struct DiagnosticsSummary {
    ShiftEstimate shift;
    double measured_speed = std::numeric_limits<double>::quiet_NaN();
    std::pair<double, double> speed_window{0.0, 0.0};
    double theoretical_speed = 0.0;
    double u_min_cut = 0.0;
    double cut_x_final = 0.0;
    bool truncated = false;
    double sobolev_ratio_final = std::numeric_limits<double>::quiet_NaN();
};

struct DiagnosticsReport {
    DiagnosticsSeries series;
    DiagnosticsSummary summary;
};

/// Perturbation diagnostics of a run against the traveling wave: shift from
/// the first snapshot, then per snapshot the sup distances, front position,
/// trailing speed, anti-derivative end values and weighted norms
///   norm_w1 = |phi|_{w1}, norm_w2 = |psi|_{w2}, norm_w3 = |phi_z|_{1,w3},
///   norm_w4 = |psi_z|_{1,w4}, norm_w5 = |phi_z|_{w5}, norm_w6 = |phi_zz|_{1,w6},
/// with N(t) the running supremum of norm_w1 + ... + norm_w4.
inline DiagnosticsReport diagnose(std::span<const State> snapshots, const Grid1D& grid, const WaveProfile& profile,
                                  const DiagnosticsOptions& options = {}) {
    if (snapshots.empty()) {
        throw DimensionError("diagnose: no snapshots");
    }
    const WaveParams& pr = profile.params;
    DiagnosticsReport report;
    auto& ser = report.series;
    auto& sum = report.summary;
    sum.shift = estimate_shift(snapshots.front().u, profile, grid, snapshots.front().v);
    sum.theoretical_speed = pr.s;
    sum.u_min_cut = options.u_min_cut_fraction * pr.u_minus;
    const double x0 = sum.shift.x0;

    std::array<WeightSpec, 6> weights;
    for (int k = 0; k < 6; ++k) {
        weights[static_cast<std::size_t>(k)] = make_weight(k + 1, pr.p);
    }
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        const State& st = snapshots[k];
        if (k > 0 && !(st.t > snapshots[k - 1].t)) {
            throw DimensionError("diagnose: snapshot times must be strictly increasing");
        }
        ser.times.push_back(st.t);
        const ShiftedWave wave = shifted_wave(profile, x0, st.t, grid);
        double su = 0.0;
        double sv = 0.0;
        std::vector<double> du(grid.nx);
        std::vector<double> dv(grid.nx);
        for (std::size_t i = 0; i < grid.nx; ++i) {
            du[i] = st.u[i] - wave.U[i];
            dv[i] = st.v[i] - wave.V[i];
            su = std::max(su, std::abs(du[i]));
            sv = std::max(sv, std::abs(dv[i]));
        }
        ser.sup_dist_u.push_back(su);
        ser.sup_dist_v.push_back(sv);
        double front = std::numeric_limits<double>::quiet_NaN();
        try {
            front = front_position(st.u, grid, 0.5 * pr.u_minus);
        } catch (const TrackingError&) {
        }
        ser.front_pos.push_back(front);
        double speed = std::numeric_limits<double>::quiet_NaN();
        try {
            speed = measure_speed(ser.times, ser.front_pos, {st.t - options.speed_window_width, st.t});
        } catch (const TrackingError&) {
        }
        ser.s_window.push_back(speed);

        const Antiderivatives anti = antiderivatives(st.u, st.v, profile, x0, st.t, grid);
        ser.phi_end.push_back(anti.phi_end);
        ser.psi_end.push_back(anti.psi_end);

        const auto du_x = central_derivative(du, grid);
        const auto du_xx = central_derivative(du_x, grid);
        const auto dv_x = central_derivative(dv, grid);
        const auto wn = [&](std::span<const double> f, int idx) {
            return weighted_norm(f, weights[static_cast<std::size_t>(idx - 1)], wave.U, grid, sum.u_min_cut);
        };
        const auto h1 = [&](std::span<const double> f, std::span<const double> fx, int idx) {
            return std::sqrt(wn(f, idx).integral + wn(fx, idx).integral);
        };
        ser.weighted_norms[0].push_back(wn(anti.phi, 1).norm);
        ser.weighted_norms[1].push_back(wn(anti.psi, 2).norm);
        ser.weighted_norms[2].push_back(h1(du, du_x, 3));
        ser.weighted_norms[3].push_back(h1(dv, dv_x, 4));
        ser.weighted_norms[4].push_back(wn(du, 5).norm);
        ser.weighted_norms[5].push_back(h1(du_x, du_xx, 6));

        if (k + 1 == snapshots.size()) {
            const WeightedNorm last = wn(du, 3);
            sum.cut_x_final = last.cut_x;
            sum.truncated = last.truncated;
            // empirical constant in sup |sqrt(w3) f|^2 <= C |f|_{1,w3}^2
            double sup_w = 0.0;
            for (std::size_t i = 0; i < grid.nx; ++i) {
                if (wave.U[i] >= sum.u_min_cut) {
                    sup_w = std::max(sup_w, du[i] * du[i] / (wave.U[i] * wave.U[i]));
                }
            }
            const double h1sq = std::pow(ser.weighted_norms[2].back(), 2);
            if (h1sq > 0.0) {
                sum.sobolev_ratio_final = sup_w / h1sq;
            }
        }
    }
    ser.N_t = compute_N(ser.weighted_norms[0], ser.weighted_norms[1], ser.weighted_norms[2], ser.weighted_norms[3]);

    const double t_end = ser.times.back();
    sum.speed_window = options.speed_window.value_or(std::make_pair(0.5 * t_end, t_end));
    try {
        sum.measured_speed = measure_speed(ser.times, ser.front_pos, sum.speed_window);
    } catch (const TrackingError&) {
    }
    return report;
}

}  // namespace chemowave
