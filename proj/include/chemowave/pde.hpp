#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chemowave/banded.hpp"
#include "chemowave/error.hpp"
#include "chemowave/grid.hpp"
#include "chemowave/quadrature.hpp"

namespace chemowave {

struct TimeConfig {
    double tau = 0.05;
    double t_end = 20.0;
    std::size_t snapshot_stride = 1;
};

struct NewtonConfig {
    double tol = 1e-10;        // infinity norm of the Crank-Nicolson residual
    std::size_t max_iter = 50;
    double u_floor = 1e-12;    // lower bound for u inside p u^{p-1}
    int max_halvings = 4;
    std::size_t nonmonotone_window = 5; // trial must beat the max of this many recent residuals
    double negativity_tolerance = 1e-13;
};

struct PdeCoefficients {
    double chi = 1.0;
    double p = 0.5;
};

inline void validate(const TimeConfig& cfg) {
    if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) {
        throw ParameterError("time step tau must be positive");
    }
    if (!(cfg.t_end >= 0.0) || !std::isfinite(cfg.t_end)) {
        throw ParameterError("t_end must be non-negative");
    }
    if (cfg.snapshot_stride < 1) {
        throw ParameterError("snapshot stride must be at least 1");
    }
}

inline void validate(const NewtonConfig& cfg) {
    if (!(cfg.tol > 0.0)) {
        throw ParameterError("Newton tolerance must be positive");
    }
    if (cfg.max_iter < 1) {
        throw ParameterError("Newton max_iter must be at least 1");
    }
    if (!(cfg.u_floor > 0.0)) {
        throw ParameterError("Newton u_floor must be positive");
    }
}

/// Initial data of the reference experiment: a smooth front at x = 0 with a
/// decaying oscillation behind it.
inline std::pair<double, double> reference_initial_condition(double x) {
    if (x >= 0.0) {
        const double a = 0.5 * std::exp(-x);
        return {a, -a};
    }
    const double b = 0.5 * std::exp(x) * std::cos(x);
    return {1.0 - b, -1.0 + b};
}

inline State reference_initial_state(const Grid1D& grid) {
    State st;
    st.u.resize(grid.nx);
    st.v.resize(grid.nx);
    for (std::size_t i = 0; i < grid.nx; ++i) {
        std::tie(st.u[i], st.v[i]) = reference_initial_condition(grid.x(i));
    }
    return st;
}

namespace detail {

// Mirror ghost: index -1 reflects to 1 and n reflects to n - 2.
inline std::size_t mirror_left(std::size_t i) noexcept { return i == 0 ? 1 : i - 1; }
inline std::size_t mirror_right(std::size_t i, std::size_t n) noexcept { return i + 1 == n ? n - 2 : i + 1; }

inline void check_finite(std::span<const double> values, const char* what) {
    for (double x : values) {
        if (!std::isfinite(x)) {
            throw NumericError(std::string(what) + ": non-finite value");
        }
    }
}

// Interleaved right-hand side (du_0, dv_0, du_1, dv_1, ...).
inline void rhs_interleaved(std::span<const double> z, const Grid1D& grid, const PdeCoefficients& c,
                            std::span<double> out) {
    const std::size_t n = grid.nx;
    const double inv_h2 = 1.0 / (grid.h * grid.h);
    const double inv_2h = 0.5 / grid.h;
    thread_local std::vector<double> m;
    thread_local std::vector<double> f;
    m.resize(n);
    f.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = std::max(z[2 * i], 0.0);
        m[i] = std::pow(u, c.p);
        f[i] = u * z[2 * i + 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = mirror_left(i);
        const std::size_t r = mirror_right(i, n);
        out[2 * i] = (m[r] - 2.0 * m[i] + m[l]) * inv_h2 + c.chi * (f[r] - f[l]) * inv_2h;
        out[2 * i + 1] = (std::max(z[2 * r], 0.0) - std::max(z[2 * l], 0.0)) * inv_2h;
    }
}

inline std::vector<double> interleave(const State& s) {
    std::vector<double> z(2 * s.u.size());
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        z[2 * i] = s.u[i];
        z[2 * i + 1] = s.v[i];
    }
    return z;
}

inline void deinterleave(std::span<const double> z, State& s) {
    const std::size_t n = z.size() / 2;
    s.u.resize(n);
    s.v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.u[i] = z[2 * i];
        s.v[i] = z[2 * i + 1];
    }
}

inline void check_state(const State& s, const Grid1D& grid, const char* what) {
    if (s.u.size() != grid.nx || s.v.size() != grid.nx) {
        throw DimensionError(std::string(what) + ": state size does not match the grid");
    }
    check_finite(s.u, what);
    check_finite(s.v, what);
}

inline double inf_norm(std::span<const double> r) {
    double m = 0.0;
    for (double x : r) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

}  // namespace detail

/// Central-difference semi-discretization of
/// u_t = (u^p)_xx + chi (u v)_x, v_t = u_x with mirror (Neumann) ghosts.
inline std::pair<std::vector<double>, std::vector<double>> semidiscrete_rhs(const State& state, const Grid1D& grid,
                                                                            double chi, double p) {
    detail::check_state(state, grid, "semidiscrete_rhs");
    const auto z = detail::interleave(state);
    std::vector<double> out(z.size());
    detail::rhs_interleaved(z, grid, {chi, p}, out);
    std::pair<std::vector<double>, std::vector<double>> result;
    result.first.resize(grid.nx);
    result.second.resize(grid.nx);
    for (std::size_t i = 0; i < grid.nx; ++i) {
        result.first[i] = out[2 * i];
        result.second[i] = out[2 * i + 1];
    }
    return result;
}

namespace detail {

inline void cn_residual_interleaved(std::span<const double> z_old, std::span<const double> rhs_old,
                                    std::span<const double> z_new, const Grid1D& grid, double tau,
                                    const PdeCoefficients& c, std::span<double> out) {
    rhs_interleaved(z_new, grid, c, out);
    const double inv_tau = 1.0 / tau;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = (z_new[k] - z_old[k]) * inv_tau - 0.5 * (out[k] + rhs_old[k]);
    }
}

inline BandedMatrix jacobian_interleaved(std::span<const double> z, const Grid1D& grid, double tau,
                                         const PdeCoefficients& c, double u_floor) {
    const std::size_t n = grid.nx;
    BandedMatrix jac(2 * n, 3, 3);
    const double inv_h2 = 1.0 / (grid.h * grid.h);
    const double inv_2h = 0.5 / grid.h;
    const double inv_tau = 1.0 / tau;
    const auto dm = [&](std::size_t i) { return c.p * std::pow(std::max(z[2 * i], u_floor), c.p - 1.0); };
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ru = 2 * i;
        const std::size_t rv = 2 * i + 1;
        jac.add(ru, ru, inv_tau);
        jac.add(rv, rv, inv_tau);
        // Diffusion: the mirrored neighbour receives the weight of both sides.
        const std::size_t l = detail::mirror_left(i);
        const std::size_t r = detail::mirror_right(i, n);
        jac.add(ru, 2 * l, -0.5 * dm(l) * inv_h2);
        jac.add(ru, 2 * r, -0.5 * dm(r) * inv_h2);
        jac.add(ru, ru, -0.5 * (-2.0) * dm(i) * inv_h2);
        if (i == 0 || i + 1 == n) {
            continue;  // advection and u_x vanish under the mirror
        }
        // chi (f_r - f_l) / (2h), f = u v
        jac.add(ru, 2 * r, -0.5 * c.chi * z[2 * r + 1] * inv_2h);
        jac.add(ru, 2 * r + 1, -0.5 * c.chi * std::max(z[2 * r], 0.0) * inv_2h);
        jac.add(ru, 2 * l, 0.5 * c.chi * z[2 * l + 1] * inv_2h);
        jac.add(ru, 2 * l + 1, 0.5 * c.chi * std::max(z[2 * l], 0.0) * inv_2h);
        // (u_r - u_l) / (2h)
        jac.add(rv, 2 * r, -0.5 * inv_2h);
        jac.add(rv, 2 * l, 0.5 * inv_2h);
    }
    return jac;
}

}  // namespace detail

/// Crank-Nicolson residual, interleaved (u_0, v_0, u_1, v_1, ...).
inline std::vector<double> cn_residual(const State& state_old, const State& state_new_guess, const Grid1D& grid,
                                       double tau, double chi, double p) {
    detail::check_state(state_old, grid, "cn_residual");
    detail::check_state(state_new_guess, grid, "cn_residual");
    const PdeCoefficients c{chi, p};
    const auto z_old = detail::interleave(state_old);
    const auto z_new = detail::interleave(state_new_guess);
    std::vector<double> rhs_old(z_old.size());
    detail::rhs_interleaved(z_old, grid, c, rhs_old);
    std::vector<double> out(z_old.size());
    detail::cn_residual_interleaved(z_old, rhs_old, z_new, grid, tau, c, out);
    return out;
}

/// Jacobian of cn_residual with respect to the new state. Half-bandwidth 3.
inline BandedMatrix assemble_jacobian(const State& state_guess, const Grid1D& grid, double tau, double chi, double p,
                                      const NewtonConfig& cfg) {
    detail::check_state(state_guess, grid, "assemble_jacobian");
    const auto z = detail::interleave(state_guess);
    return detail::jacobian_interleaved(z, grid, tau, {chi, p}, cfg.u_floor);
}

struct StepResult {
    State state;
    std::size_t iterations = 0;
    double residual = 0.0;
    std::size_t clamped = 0;  // nodes where roundoff-level negative u was reset to 0
    int halvings = 0;
};

/// One Crank-Nicolson step solved by Newton's method, starting from the old
/// state. A trial update is halved (up to max_halvings times) when it drives
/// u below -negativity_tolerance or when its residual exceeds the largest of
/// the last nonmonotone_window accepted residuals.
inline StepResult newton_step_solve(const State& state_old, const Grid1D& grid, double tau, double chi, double p,
                                    const NewtonConfig& cfg) {
    detail::check_state(state_old, grid, "newton_step_solve");
    validate(cfg);
    if (!(tau > 0.0)) {
        throw ParameterError("newton_step_solve: tau must be positive");
    }
    const PdeCoefficients c{chi, p};
    const auto z_old = detail::interleave(state_old);
    const std::size_t dim = z_old.size();
    std::vector<double> rhs_old(dim);
    detail::rhs_interleaved(z_old, grid, c, rhs_old);

    std::vector<double> z = z_old;
    std::vector<double> res(dim);
    std::vector<double> trial(dim);
    std::vector<double> trial_res(dim);
    detail::cn_residual_interleaved(z_old, rhs_old, z, grid, tau, c, res);
    double norm = detail::inf_norm(res);

    std::vector<double> recent{norm};
    StepResult out;
    for (std::size_t it = 1;; ++it) {
        out.iterations = it;
        if (!std::isfinite(norm)) {
            throw NumericError("newton_step_solve: non-finite residual");
        }
        if (norm <= cfg.tol) {
            break;
        }
        if (it >= cfg.max_iter) {
            throw ConvergenceError("Newton iteration did not converge in " + std::to_string(cfg.max_iter) +
                                       " iterations",
                                   norm);
        }
        const BandedMatrix jac = detail::jacobian_interleaved(z, grid, tau, c, cfg.u_floor);
        const BandedLU lu(jac);
        for (double& r : res) {
            r = -r;
        }
        const std::vector<double> delta = lu.solve(res);

        const double reference = *std::max_element(recent.begin(), recent.end());
        double lambda = 1.0;
        bool accepted = false;
        bool negative = false;
        for (int halving = 0; halving <= cfg.max_halvings; ++halving, lambda *= 0.5) {
            negative = false;
            std::size_t clamped = 0;
            for (std::size_t k = 0; k < dim; ++k) {
                trial[k] = z[k] + lambda * delta[k];
            }
            for (std::size_t i = 0; i < grid.nx; ++i) {
                double& u = trial[2 * i];
                if (u < 0.0) {
                    if (u < -cfg.negativity_tolerance) {
                        negative = true;
                        break;
                    }
                    u = 0.0;
                    ++clamped;
                }
            }
            if (negative) {
                continue;
            }
            detail::cn_residual_interleaved(z_old, rhs_old, trial, grid, tau, c, trial_res);
            const double trial_norm = detail::inf_norm(trial_res);
            if (std::isfinite(trial_norm) && trial_norm < reference) {
                z.swap(trial);
                res.swap(trial_res);
                norm = trial_norm;
                recent.push_back(norm);
                if (recent.size() > std::max<std::size_t>(cfg.nonmonotone_window, 1)) {
                    recent.erase(recent.begin());
                }
                out.clamped += clamped;
                out.halvings += halving;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (negative) {
                throw NumericError("newton_step_solve: update drives u negative beyond roundoff");
            }
            throw ConvergenceError("Newton iteration diverged: residual did not decrease after " +
                                       std::to_string(cfg.max_halvings) + " halvings",
                                   norm);
        }
    }
    out.residual = norm;
    detail::deinterleave(z, out.state);
    out.state.t = state_old.t + tau;
    return out;
}

/// Discrete mass and boundary flux: with trapezoid weights the central
/// scheme satisfies d/dt mass = boundary_flux exactly.
inline double discrete_mass(std::span<const double> u, const Grid1D& grid) { return quad::trapezoid(u, grid.h); }

inline double boundary_flux(const State& s, double chi) {
    const std::size_t n = s.u.size();
    const auto f = [&](std::size_t i) { return s.u[i] * s.v[i]; };
    return 0.5 * chi * (f(n - 1) + f(n - 2) - f(0) - f(1));
}

struct SimulationResult {
    std::vector<State> snapshots;
    std::vector<std::size_t> step_iterations;
    std::vector<std::size_t> step_clamped;
    std::vector<double> step_residuals;
    std::vector<double> step_times;         // time at the end of each step
    std::vector<double> mass;               // trapezoid mass after each step, mass[0] at t = 0
    std::vector<double> cumulative_flux;    // time integral of boundary_flux, same indexing as mass
    std::size_t total_clamped() const {
        std::size_t n = 0;
        for (auto c : step_clamped) {
            n += c;
        }
        return n;
    }
};

using StepObserver = std::function<void(const State&, const StepResult&)>;

/// Integrates from the initial state to t_end with fixed step tau.
/// Snapshots are kept every snapshot_stride steps, plus the initial and
/// final states.
inline SimulationResult run_simulation(const Grid1D& grid, const TimeConfig& time_cfg, const NewtonConfig& newton_cfg,
                                       double chi, double p, const State& initial,
                                       const StepObserver& observer = {}) {
    validate(time_cfg);
    validate(newton_cfg);
    detail::check_state(initial, grid, "run_simulation");
    for (double u : initial.u) {
        if (u < 0.0) {
            throw ParameterError("run_simulation: initial density must be non-negative");
        }
    }
    const double steps_real = time_cfg.t_end / time_cfg.tau;
    const double steps_rounded = std::round(steps_real);
    if (std::abs(steps_real - steps_rounded) > 1e-9 * std::max(1.0, steps_real)) {
        throw ParameterError("run_simulation: t_end must be a whole number of time steps");
    }
    const auto n_steps = static_cast<std::size_t>(steps_rounded);

    SimulationResult result;
    State current = initial;
    current.t = 0.0;
    result.snapshots.push_back(current);
    result.mass.push_back(discrete_mass(current.u, grid));
    result.cumulative_flux.push_back(0.0);
    double flux_old = boundary_flux(current, chi);

    for (std::size_t k = 1; k <= n_steps; ++k) {
        StepResult step;
        try {
            step = newton_step_solve(current, grid, time_cfg.tau, chi, p, newton_cfg);
        } catch (const Error& e) {
            throw SimulationError(e.what(), current.t + time_cfg.tau);
        }
        step.state.t = static_cast<double>(k) * time_cfg.tau;
        current = std::move(step.state);
        const double flux_new = boundary_flux(current, chi);
        result.step_iterations.push_back(step.iterations);
        result.step_clamped.push_back(step.clamped);
        result.step_residuals.push_back(step.residual);
        result.step_times.push_back(current.t);
        result.mass.push_back(discrete_mass(current.u, grid));
        result.cumulative_flux.push_back(result.cumulative_flux.back() + 0.5 * time_cfg.tau * (flux_old + flux_new));
        flux_old = flux_new;
        if (observer) {
            observer(current, step);
        }
        if (k % time_cfg.snapshot_stride == 0 || k == n_steps) {
            result.snapshots.push_back(current);
        }
    }
    return result;
}

}  // namespace chemowave
