#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "chemowave/config.hpp"
#include "chemowave/convergence.hpp"
#include "chemowave/diagnostics.hpp"
#include "chemowave/io.hpp"
#include "chemowave/parallel.hpp"
#include "chemowave/pde.hpp"
#include "chemowave/profile.hpp"

namespace chemowave::app {

namespace fs = std::filesystem;
using io::Json;

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

/// CHEMOWAVE_OUT, when set and non-empty, replaces the output directory.
inline void apply_environment(RunConfig& cfg) {
    if (const char* env = std::getenv("CHEMOWAVE_OUT"); env != nullptr && *env != '\0') {
        cfg.out = env;
    }
}

struct RunArtifacts {
    SimulationResult result;
    Grid1D grid;
    double seconds = 0.0;
};

inline State initial_state(const RunConfig& cfg, const Grid1D& grid) {
    if (cfg.initial == "wave") {
        const WaveProfile prof =
            compute_profile(cfg.wave_params(), cfg.z_min, cfg.z_max, cfg.n_samples, cfg.profile_options());
        return wave_initial_state(prof, grid);
    }
    return reference_initial_state(grid);
}

inline RunArtifacts execute_run(const RunConfig& cfg, const StepObserver& observer = {}) {
    const WaveParams params = cfg.wave_params();
    RunArtifacts art;
    art.grid = cfg.grid();
    const auto start = std::chrono::steady_clock::now();
    art.result = run_simulation(art.grid, cfg.time_config(), cfg.newton_config(), params.chi, params.p,
                                initial_state(cfg, art.grid), observer);
    art.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return art;
}

/// Snapshot CSVs plus run.json in `dir`; wall time goes to timing.json so the
/// rest stays byte-identical between runs.
inline void write_run(const fs::path& dir, const RunConfig& cfg, const RunArtifacts& art) {
    const auto& res = art.result;
    Json snaps = Json::array();
    for (const State& st : res.snapshots) {
        const std::string name = io::snapshot_filename(st.t);
        io::write_snapshot_csv(dir / name, art.grid, st);
        Json e;
        e["t"] = st.t;
        e["file"] = name;
        snaps.push_back(e);
    }
    std::size_t max_it = 0;
    for (auto it : res.step_iterations) {
        max_it = std::max(max_it, it);
    }
    Json j;
    j["params"] = io::params_json(cfg.wave_params());
    j["grid"] = io::grid_json(art.grid);
    j["tau"] = cfg.tau;
    j["t_end"] = cfg.t_end;
    j["snapshot_stride"] = cfg.snapshot_stride;
    j["initial"] = cfg.initial;
    j["anchor"] = cfg.anchor;
    j["newton"] = {{"tol", cfg.newton_tol}, {"max_iter", cfg.max_iter}, {"u_floor", cfg.u_floor}};
    j["steps"] = res.step_iterations.size();
    j["max_newton_iterations"] = max_it;
    j["total_clamped"] = res.total_clamped();
    j["step_iterations"] = res.step_iterations;
    j["mass"] = {{"initial", res.mass.front()},
                 {"final", res.mass.back()},
                 {"boundary_flux_integral", res.cumulative_flux.back()},
                 {"balance_residual", res.mass.back() - res.mass.front() - res.cumulative_flux.back()}};
    j["snapshots"] = snaps;
    io::write_json(dir / "run.json", j);
    Json timing;
    timing["wall_seconds"] = art.seconds;
    io::write_json(dir / "timing.json", timing);
}

// ---------------------------------------------------------------------------
// profile

inline int cmd_profile(const RunConfig& cfg, std::ostream& log) {
    validate(cfg);
    const WaveParams params = cfg.wave_params();
    const ProfileOptions opts = cfg.profile_options();
    const WaveProfile prof = compute_profile(params, cfg.z_min, cfg.z_max, cfg.n_samples, opts);
    const TailModel tails = fit_tails(prof);
    const fs::path out(cfg.out);
    io::write_profile_csv(out / "profile.csv", prof);
    Json j;
    j["params"] = io::params_json(params);
    j["anchor"] = cfg.anchor;
    j["z_min"] = cfg.z_min;
    j["z_max"] = cfg.z_max;
    j["n_samples"] = cfg.n_samples;
    j["table_cells"] = prof.wave->table_size() - 1;
    j["tails"] = io::tails_json(tails);
    j["tolerances"] = {{"quad_abs", opts.quad_abs_tol},
                       {"quad_rel", opts.quad_rel_tol},
                       {"u_min_fraction", opts.u_min_fraction},
                       {"deficit_fraction", opts.deficit_fraction}};
    io::write_json(out / "profile.json", j);
    log << "profile: s = " << io::format_double(params.s) << ", " << prof.size() << " samples -> "
        << (out / "profile.csv").string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// simulate

inline int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    validate(cfg);
    const RunArtifacts art = execute_run(cfg);
    write_run(cfg.out, cfg, art);
    std::size_t max_it = 0;
    for (auto it : art.result.step_iterations) {
        max_it = std::max(max_it, it);
    }
    log << "simulate: " << art.result.step_iterations.size() << " steps, max Newton iterations " << max_it
        << ", clamped nodes " << art.result.total_clamped() << ", " << art.result.snapshots.size()
        << " snapshots -> " << cfg.out << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// diagnose

struct LoadedRun {
    Grid1D grid;
    WaveParams params;
    std::vector<State> snapshots;
};

namespace detail {

inline bool same_value(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

}  // namespace detail

/// Reads run.json and the snapshots it lists, checking them against cfg.
inline LoadedRun load_run(const fs::path& dir, const RunConfig& cfg) {
    if (!fs::is_directory(dir)) {
        throw io::IoError("snapshot directory '" + dir.string() + "' does not exist");
    }
    if (!fs::exists(dir / "run.json")) {
        throw io::IoError("no run.json in '" + dir.string() + "'");
    }
    const Json meta = io::read_json(dir / "run.json");
    LoadedRun run;
    try {
        const auto& p = meta.at("params");
        run.params = make_params(p.at("p").get<double>(), p.at("chi").get<double>(), p.at("u_minus").get<double>(),
                                 p.at("w_plus").get<double>());
        const auto& g = meta.at("grid");
        run.grid = make_grid(g.at("x_left").get<double>(), g.at("x_right").get<double>(),
                             g.at("nx").get<std::size_t>());
        const WaveParams want = cfg.wave_params();
        const std::array<std::pair<const char*, std::pair<double, double>>, 4> checks{{
            {"p", {run.params.p, want.p}},
            {"chi", {run.params.chi, want.chi}},
            {"u_minus", {run.params.u_minus, want.u_minus}},
            {"w_plus", {run.params.w_plus, want.w_plus}},
        }};
        for (const auto& [name, vals] : checks) {
            if (!detail::same_value(vals.first, vals.second)) {
                throw ParameterError(std::string("metadata mismatch: run has ") + name + " = " +
                                     io::format_double(vals.first) + ", config has " +
                                     io::format_double(vals.second));
            }
        }
        const auto nodes = run.grid.nodes();
        for (const auto& e : meta.at("snapshots")) {
            const double t = e.at("t").get<double>();
            const fs::path file = dir / e.at("file").get<std::string>();
            const io::Table table = io::read_csv(file);
            const auto& x = table.column("x");
            if (x.size() != run.grid.nx) {
                throw ParameterError("metadata mismatch: " + file.string() + " has " + std::to_string(x.size()) +
                                     " rows, grid has " + std::to_string(run.grid.nx));
            }
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (std::abs(x[i] - nodes[i]) > 1e-9 * run.grid.h) {
                    throw ParameterError("metadata mismatch: x column of " + file.string() + " is off the grid");
                }
            }
            State st;
            st.t = t;
            st.u = table.column("u");
            st.v = table.column("v");
            run.snapshots.push_back(std::move(st));
        }
    } catch (const nlohmann::json::exception& e) {
        throw io::IoError("malformed run.json: " + std::string(e.what()));
    }
    if (run.snapshots.empty()) {
        throw io::IoError("run.json in '" + dir.string() + "' lists no snapshots");
    }
    return run;
}

inline int cmd_diagnose(const RunConfig& cfg, std::ostream& log) {
    validate(cfg);
    const fs::path dir = cfg.snapshots.empty() ? fs::path(cfg.out) : fs::path(cfg.snapshots);
    const LoadedRun run = load_run(dir, cfg);
    const WaveProfile prof =
        compute_profile(run.params, cfg.z_min, cfg.z_max, cfg.n_samples, cfg.profile_options());
    DiagnosticsOptions opts;
    opts.u_min_cut_fraction = cfg.u_min_cut_fraction;
    const DiagnosticsReport rep = diagnose(run.snapshots, run.grid, prof, opts);
    const auto& ser = rep.series;
    const auto& sum = rep.summary;

    std::vector<std::string> header{"t", "sup_u", "sup_v", "front", "s_window", "N_t"};
    std::vector<std::span<const double>> cols{ser.times,     ser.sup_dist_u, ser.sup_dist_v,
                                              ser.front_pos, ser.s_window,   ser.N_t};
    for (std::size_t k = 0; k < 6; ++k) {
        header.push_back("norm_w" + std::to_string(k + 1));
        cols.push_back(ser.weighted_norms[k]);
    }
    header.push_back("phi_end");
    header.push_back("psi_end");
    cols.push_back(ser.phi_end);
    cols.push_back(ser.psi_end);
    const fs::path out(cfg.out);
    io::write_csv(out / "diagnostics.csv", header, cols);

    const TailModel tails = fit_tails(prof);
    Json j;
    j["snapshot_dir"] = dir.string();
    j["params"] = io::params_json(run.params);
    j["grid"] = io::grid_json(run.grid);
    j["shift"] = {{"x0", sum.shift.x0},
                  {"x0_closed_form", sum.shift.x0_closed_form},
                  {"mass_residual", sum.shift.mass_residual},
                  {"gamma", sum.shift.gamma},
                  {"iterations", sum.shift.iterations}};
    j["speed"] = {{"measured", sum.measured_speed},
                  {"theoretical", sum.theoretical_speed},
                  {"relative_error", std::abs(sum.measured_speed - sum.theoretical_speed) / sum.theoretical_speed},
                  {"window", {sum.speed_window.first, sum.speed_window.second}}};
    j["sup_distance_final"] = {{"u", ser.sup_dist_u.back()}, {"v", ser.sup_dist_v.back()}};
    j["N_final"] = ser.N_t.back();
    j["weights"] = {{"alpha", weight_alpha(run.params.p)},
                    {"u_min_cut", sum.u_min_cut},
                    {"cut_x_final", sum.cut_x_final},
                    {"truncated", sum.truncated}};
    j["sobolev_ratio_final"] = sum.sobolev_ratio_final;
    j["tails"] = io::tails_json(tails);
    io::write_json(out / "diagnostics.json", j);
    log << "diagnose: " << ser.times.size() << " snapshots, x0 = " << io::format_double(sum.shift.x0)
        << ", measured speed = " << io::format_double(sum.measured_speed) << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// convergence

inline int cmd_convergence(const RunConfig& cfg, std::ostream& log) {
    validate(cfg);
    const ConvergenceReport rep = run_convergence(cfg);
    std::vector<double> h;
    std::vector<double> tau;
    std::vector<double> err;
    std::vector<double> order;
    for (const auto& l : rep.levels) {
        h.push_back(l.h);
        tau.push_back(l.tau);
        err.push_back(l.error);
        order.push_back(l.observed_order);
    }
    const fs::path out(cfg.out);
    io::write_csv(out / "convergence.csv", {"h", "tau", "error", "observed_order"}, {h, tau, err, order});
    Json j;
    j["params"] = io::params_json(cfg.wave_params());
    j["t_end"] = rep.t_end;
    j["reference_h"] = rep.reference_h;
    j["levels"] = h;
    j["errors"] = err;
    j["observed_orders"] = std::vector<double>(order.begin() + 1, order.end());
    j["min_order"] = rep.min_order();
    j["max_order"] = rep.max_order();
    io::write_json(out / "convergence.json", j);
    log << "      h        tau        L2 error   order\n";
    for (const auto& l : rep.levels) {
        log << std::setw(9) << l.h << "  " << std::setw(9) << l.tau << "  " << std::setw(12) << std::scientific
            << std::setprecision(4) << l.error << std::defaultfloat << std::setprecision(6) << "   ";
        if (std::isnan(l.observed_order)) {
            log << "-";
        } else {
            log << std::fixed << std::setprecision(3) << l.observed_order << std::defaultfloat
                << std::setprecision(6);
        }
        log << "\n";
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// reproduce-figures

inline constexpr std::array<double, 3> kFigureP{0.1, 0.5, 0.9};
inline constexpr std::array<double, 5> kProfileTimes{0.0, 5.0, 10.0, 15.0, 20.0};

/// max |u_{i+1} - u_i| / h
inline double steepness(std::span<const double> u, double h) {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        m = std::max(m, std::abs(u[i + 1] - u[i]) / h);
    }
    return m;
}

inline std::string p_label(double p) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), p, std::chars_format::fixed, 1);
    return std::string(buf, res.ptr);
}

struct FigureRun {
    double p = 0.0;
    bool ok = false;
    std::string error;
    RunArtifacts art;
    std::vector<State> profiles;  // states at kProfileTimes that fall inside [0, t_end]
};

namespace detail {

inline void write_long(const fs::path& path, const Grid1D& grid, std::span<const State> states) {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> u;
    std::vector<double> v;
    for (const State& st : states) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            t.push_back(st.t);
            x.push_back(grid.x(i));
            u.push_back(st.u[i]);
            v.push_back(st.v[i]);
        }
    }
    io::write_csv(path, {"t", "x", "u", "v"}, {t, x, u, v});
}

}  // namespace detail

/// Runs the three reference experiments and writes the data behind each
/// figure plus manifest.json. A failed run still leaves a manifest listing
/// what was produced.
inline int cmd_reproduce_figures(const RunConfig& cfg, std::ostream& log) {
    validate(cfg);
    const fs::path out(cfg.out);
    std::vector<FigureRun> runs(kFigureP.size());
    parallel_for(runs.size(), cfg.workers, [&](std::size_t k) {
        FigureRun& fr = runs[k];
        fr.p = kFigureP[k];
        RunConfig rc = cfg;
        rc.p = fr.p;
        rc.initial = "reference";
        try {
            validate(rc);
            const Grid1D grid = rc.grid();
            fr.profiles.push_back(reference_initial_state(grid));
            const double half_tau = 0.5 * rc.tau;
            fr.art = execute_run(rc, [&](const State& st, const StepResult&) {
                for (double t : kProfileTimes) {
                    if (t > 0.0 && std::abs(st.t - t) < half_tau) {
                        fr.profiles.push_back(st);
                    }
                }
            });
            write_run(out / ("run_p" + p_label(fr.p)), rc, fr.art);
            fr.ok = true;
        } catch (const std::exception& e) {
            fr.error = e.what();
        }
    });

    Json manifest;
    manifest["params"] = {{"chi", cfg.chi}, {"u_minus", cfg.u_minus}, {"w_plus", cfg.w_plus}};
    manifest["domain"] = {cfg.x_left, cfg.x_right};
    manifest["h"] = cfg.h;
    manifest["tau"] = cfg.tau;
    manifest["t_end"] = cfg.t_end;
    manifest["newton_tol"] = cfg.newton_tol;
    manifest["snapshot_stride"] = cfg.snapshot_stride;
    Json run_list = Json::array();
    bool all_ok = true;
    for (const auto& fr : runs) {
        Json r;
        r["p"] = fr.p;
        r["dir"] = "run_p" + p_label(fr.p);
        r["status"] = fr.ok ? "ok" : "failed";
        if (fr.ok) {
            std::size_t max_it = 0;
            for (auto it : fr.art.result.step_iterations) {
                max_it = std::max(max_it, it);
            }
            r["max_newton_iterations"] = max_it;
            r["total_clamped"] = fr.art.result.total_clamped();
        } else {
            r["error"] = fr.error;
            all_ok = false;
        }
        run_list.push_back(r);
    }
    manifest["runs"] = run_list;

    Json figures = Json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const FigureRun& fr = runs[k];
        if (!fr.ok) {
            continue;
        }
        const std::string lbl = p_label(fr.p);
        const std::string f3 = "fig" + std::to_string(2 * k + 1) + "_spacetime_p" + lbl + ".csv";
        detail::write_long(out / f3, fr.art.grid, fr.art.result.snapshots);
        Json a;
        a["figure"] = 2 * k + 1;
        a["kind"] = "space-time";
        a["p"] = fr.p;
        a["file"] = f3;
        a["columns"] = {"t", "x", "u", "v"};
        a["times"] = fr.art.result.snapshots.size();
        figures.push_back(a);

        const std::string f2 = "fig" + std::to_string(2 * k + 2) + "_profiles_p" + lbl + ".csv";
        detail::write_long(out / f2, fr.art.grid, fr.profiles);
        Json b;
        b["figure"] = 2 * k + 2;
        b["kind"] = "profiles";
        b["p"] = fr.p;
        b["file"] = f2;
        b["columns"] = {"t", "x", "u", "v"};
        Json times = Json::array();
        for (const auto& st : fr.profiles) {
            times.push_back(st.t);
        }
        b["times"] = times;
        figures.push_back(b);
    }
    if (all_ok) {
        const Grid1D& grid = runs.front().art.grid;
        std::vector<std::string> header{"x"};
        std::vector<std::vector<double>> data{grid.nodes()};
        Json steep;
        for (const auto& fr : runs) {
            const State& fin = fr.art.result.snapshots.back();
            header.push_back("u_p" + p_label(fr.p));
            header.push_back("v_p" + p_label(fr.p));
            data.push_back(fin.u);
            data.push_back(fin.v);
            steep["p" + p_label(fr.p)] = steepness(fin.u, grid.h);
        }
        std::vector<std::span<const double>> cols(data.begin(), data.end());
        io::write_csv(out / "fig7_final_all_p.csv", header, cols);
        Json c;
        c["figure"] = 7;
        c["kind"] = "final-comparison";
        c["p"] = kFigureP;
        c["file"] = "fig7_final_all_p.csv";
        c["columns"] = header;
        c["times"] = Json::array({runs.front().art.result.snapshots.back().t});
        figures.push_back(c);
        manifest["steepness"] = steep;
    }
    manifest["status"] = all_ok ? "complete" : "partial";
    manifest["figures"] = figures;
    io::write_json(out / "manifest.json", manifest);

    for (const auto& fr : runs) {
        if (fr.ok) {
            log << "reproduce-figures: p = " << p_label(fr.p) << " done in " << std::fixed << std::setprecision(2)
                << fr.art.seconds << std::defaultfloat << std::setprecision(6) << " s\n";
        } else {
            log << "reproduce-figures: p = " << p_label(fr.p) << " failed: " << fr.error << "\n";
        }
    }
    log << "reproduce-figures: " << figures.size() << " figure datasets -> " << (out / "manifest.json").string()
        << "\n";
    return all_ok ? kOk : kFailure;
}

/// Dispatches on cfg.subcommand. Errors become messages on `err` and a
/// nonzero exit code.
inline int run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
    try {
        if (cfg.subcommand == "profile") {
            return cmd_profile(cfg, log);
        }
        if (cfg.subcommand == "simulate") {
            return cmd_simulate(cfg, log);
        }
        if (cfg.subcommand == "diagnose") {
            return cmd_diagnose(cfg, log);
        }
        if (cfg.subcommand == "convergence") {
            return cmd_convergence(cfg, log);
        }
        if (cfg.subcommand == "reproduce-figures") {
            return cmd_reproduce_figures(cfg, log);
        }
        err << "error: unknown subcommand '" << cfg.subcommand << "'\n";
        return kUsage;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace chemowave::app
