#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "chemowave/config.hpp"
#include "chemowave/diagnostics.hpp"
#include "chemowave/grid.hpp"
#include "chemowave/parallel.hpp"
#include "chemowave/pde.hpp"
#include "chemowave/profile.hpp"

namespace chemowave {

/// (U, V) of the wave sampled on the grid at t = 0.
inline State wave_initial_state(const WaveProfile& profile, const Grid1D& grid, double x0 = 0.0) {
    const ShiftedWave w = shifted_wave(profile, x0, 0.0, grid);
    return State{0.0, w.U, w.V};
}

struct ConvergenceLevel {
    double h = 0.0;
    double tau = 0.0;
    double error = 0.0;         // discrete L2 norm of (u, v) minus reference at this level's nodes
    double observed_order = 0.0; // log2 of the error ratio to the previous level, NaN on the first
};

struct ConvergenceReport {
    std::vector<ConvergenceLevel> levels;
    double reference_h = 0.0;
    double t_end = 0.0;

    double min_order() const {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k < levels.size(); ++k) {
            m = std::min(m, levels[k].observed_order);
        }
        return m;
    }
    double max_order() const {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k < levels.size(); ++k) {
            m = std::max(m, levels[k].observed_order);
        }
        return m;
    }
};

/// Refinement study with tau = h on the wave-initialized problem. Errors are
/// measured against a run on h_finest / reference_factor.
inline ConvergenceReport run_convergence(const RunConfig& cfg) {
    validate_levels(cfg.levels);
    if (cfg.reference_factor < 2) {
        throw ParameterError("run_convergence: reference factor must be at least 2");
    }
    const WaveParams params = cfg.wave_params();
    const WaveProfile profile = compute_profile(params, cfg.z_min, cfg.z_max, cfg.n_samples, cfg.profile_options());
    const NewtonConfig newton = cfg.newton_config();

    std::vector<double> hs = cfg.levels;
    hs.push_back(cfg.levels.back() / static_cast<double>(cfg.reference_factor));
    std::vector<Grid1D> grids;
    for (double h : hs) {
        grids.push_back(make_grid_with_spacing(cfg.x_left, cfg.x_right, h));
    }
    std::vector<State> finals(hs.size());
    parallel_for(hs.size(), cfg.workers, [&](std::size_t k) {
        const TimeConfig tc{hs[k], cfg.convergence_t_end, 1u << 30};
        auto res = run_simulation(grids[k], tc, newton, params.chi, params.p, wave_initial_state(profile, grids[k]));
        finals[k] = std::move(res.snapshots.back());
    });

    const Grid1D& ref_grid = grids.back();
    const State& ref = finals.back();
    ConvergenceReport report;
    report.reference_h = hs.back();
    report.t_end = cfg.convergence_t_end;
    for (std::size_t k = 0; k + 1 < hs.size(); ++k) {
        const std::size_t ratio = (ref_grid.nx - 1) / (grids[k].nx - 1);
        if ((grids[k].nx - 1) * ratio != ref_grid.nx - 1) {
            throw ParameterError("run_convergence: level grids do not nest in the reference grid");
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < grids[k].nx; ++i) {
            const double du = finals[k].u[i] - ref.u[i * ratio];
            const double dv = finals[k].v[i] - ref.v[i * ratio];
            sum += du * du + dv * dv;
        }
        ConvergenceLevel lvl;
        lvl.h = hs[k];
        lvl.tau = hs[k];
        lvl.error = std::sqrt(grids[k].h * sum);
        lvl.observed_order = k == 0 ? std::numeric_limits<double>::quiet_NaN()
                                    : std::log2(report.levels.back().error / lvl.error);
        report.levels.push_back(lvl);
    }
    return report;
}

}  // namespace chemowave
