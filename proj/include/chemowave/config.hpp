#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "chemowave/error.hpp"
#include "chemowave/grid.hpp"
#include "chemowave/io.hpp"
#include "chemowave/params.hpp"
#include "chemowave/pde.hpp"
#include "chemowave/profile.hpp"

namespace chemowave {

/// Everything a subcommand needs. Defaults reproduce the reference
/// experiment (p = 0.5 on (-30, 30), h = tau = 0.05, t in [0, 20]).
struct RunConfig {
    std::string subcommand = "simulate";

    // wave parameters
    double p = 0.5;
    double chi = 1.0;
    double u_minus = 1.0;
    double w_plus = 1.0;

    // profile sampling
    double anchor = 0.0;
    double z_min = -30.0;
    double z_max = 200.0;
    std::size_t n_samples = 4601;

    // grid
    double x_left = -30.0;
    double x_right = 30.0;
    double h = 0.05;

    // time
    double tau = 0.05;
    double t_end = 20.0;
    std::size_t snapshot_stride = 10;

    // Newton
    double newton_tol = 1e-10;
    std::size_t max_iter = 50;
    double u_floor = 1e-12;

    // simulate
    std::string initial = "reference";  // reference | wave

    // diagnose
    std::string snapshots;          // defaults to out when empty
    double u_min_cut_fraction = 1e-6;

    // convergence
    std::vector<double> levels{0.1, 0.05, 0.025};
    double convergence_t_end = 0.5;
    std::size_t reference_factor = 8;

    // output
    std::string out = "chemowave_out";
    std::size_t workers = 1;

    bool operator==(const RunConfig&) const = default;

    WaveParams wave_params() const { return make_params(p, chi, u_minus, w_plus); }
    Grid1D grid() const { return make_grid_with_spacing(x_left, x_right, h); }
    TimeConfig time_config() const { return {tau, t_end, snapshot_stride}; }
    NewtonConfig newton_config() const {
        NewtonConfig n;
        n.tol = newton_tol;
        n.max_iter = max_iter;
        n.u_floor = u_floor;
        return n;
    }
    ProfileOptions profile_options() const {
        ProfileOptions o;
        o.anchor = anchor;
        return o;
    }
};

inline void validate_levels(const std::vector<double>& levels) {
    if (levels.size() < 3) {
        throw ParameterError("convergence study needs at least 3 levels");
    }
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (!(levels[k] > 0.0)) {
            throw ParameterError("convergence levels must be positive");
        }
        if (k > 0 && std::abs(levels[k - 1] / levels[k] - 2.0) > 1e-9) {
            throw ParameterError("convergence levels must halve from one level to the next");
        }
    }
}

/// Checks every field against the invariants of the type that owns it.
inline void validate(const RunConfig& cfg) {
    static const char* kSubcommands[] = {"profile", "simulate", "diagnose", "convergence", "reproduce-figures"};
    bool known = false;
    for (const char* s : kSubcommands) {
        known = known || cfg.subcommand == s;
    }
    if (!known) {
        throw ParameterError("unknown subcommand '" + cfg.subcommand + "'");
    }
    (void)cfg.wave_params();
    if (!(cfg.z_min < cfg.anchor && cfg.anchor < cfg.z_max)) {
        throw ParameterError("profile z-range must contain the anchor");
    }
    if (cfg.n_samples < 16) {
        throw ParameterError("profile needs at least 16 samples");
    }
    (void)cfg.grid();
    validate(cfg.time_config());
    validate(cfg.newton_config());
    if (cfg.initial != "reference" && cfg.initial != "wave") {
        throw ParameterError("initial must be 'reference' or 'wave'");
    }
    if (!(cfg.u_min_cut_fraction > 0.0 && cfg.u_min_cut_fraction < 1.0)) {
        throw ParameterError("u_min_cut_fraction must lie in (0, 1)");
    }
    validate_levels(cfg.levels);
    if (!(cfg.convergence_t_end > 0.0)) {
        throw ParameterError("convergence t_end must be positive");
    }
    if (cfg.reference_factor < 2) {
        throw ParameterError("reference factor must be at least 2");
    }
    if (cfg.workers < 1) {
        throw ParameterError("workers must be at least 1");
    }
    if (cfg.out.empty()) {
        throw ParameterError("output directory must be set");
    }
}

namespace detail {

inline std::string format_list(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (k > 0) {
            s += ' ';
        }
        s += io::format_double(xs[k]);
    }
    return s;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::size_t parse_count(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    unsigned long long n = 0;
    try {
        n = std::stoull(value, &pos);
    } catch (const std::exception&) {
        throw ParameterError("config: '" + key + "' expects a non-negative integer, got '" + value + "'");
    }
    if (pos != value.size() || value.front() == '-') {
        throw ParameterError("config: '" + key + "' expects a non-negative integer, got '" + value + "'");
    }
    return static_cast<std::size_t>(n);
}

inline double parse_number(const std::string& key, const std::string& value) {
    try {
        return io::parse_double(value);
    } catch (const io::IoError&) {
        throw ParameterError("config: '" + key + "' expects a number, got '" + value + "'");
    }
}

}  // namespace detail

/// key = value lines grouped in [sections]; '#' starts a comment.
inline std::string serialize_config(const RunConfig& c) {
    using io::format_double;
    std::ostringstream o;
    o << "[run]\n";
    o << "subcommand = " << c.subcommand << "\n";
    o << "out = " << c.out << "\n";
    o << "workers = " << c.workers << "\n";
    o << "\n[profile]\n";
    o << "p = " << format_double(c.p) << "\n";
    o << "chi = " << format_double(c.chi) << "\n";
    o << "u_minus = " << format_double(c.u_minus) << "\n";
    o << "w_plus = " << format_double(c.w_plus) << "\n";
    o << "anchor = " << format_double(c.anchor) << "\n";
    o << "z_min = " << format_double(c.z_min) << "\n";
    o << "z_max = " << format_double(c.z_max) << "\n";
    o << "n_samples = " << c.n_samples << "\n";
    o << "\n[pde]\n";
    o << "x_left = " << format_double(c.x_left) << "\n";
    o << "x_right = " << format_double(c.x_right) << "\n";
    o << "h = " << format_double(c.h) << "\n";
    o << "tau = " << format_double(c.tau) << "\n";
    o << "t_end = " << format_double(c.t_end) << "\n";
    o << "snapshot_stride = " << c.snapshot_stride << "\n";
    o << "initial = " << c.initial << "\n";
    o << "\n[newton]\n";
    o << "tol = " << format_double(c.newton_tol) << "\n";
    o << "max_iter = " << c.max_iter << "\n";
    o << "u_floor = " << format_double(c.u_floor) << "\n";
    o << "\n[diagnostics]\n";
    o << "snapshots = " << c.snapshots << "\n";
    o << "u_min_cut_fraction = " << format_double(c.u_min_cut_fraction) << "\n";
    o << "\n[convergence]\n";
    o << "levels = " << detail::format_list(c.levels) << "\n";
    o << "t_end = " << format_double(c.convergence_t_end) << "\n";
    o << "reference_factor = " << c.reference_factor << "\n";
    return o.str();
}

/// Applies the entries of a config text on top of `base`.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParameterError("config line " + std::to_string(lineno) + ": malformed section header");
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParameterError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string full = section + "." + key;
        const auto num = [&] { return detail::parse_number(full, value); };
        const auto count = [&] { return detail::parse_count(full, value); };

        if (full == "run.subcommand") base.subcommand = value;
        else if (full == "run.out") base.out = value;
        else if (full == "run.workers") base.workers = count();
        else if (full == "profile.p") base.p = num();
        else if (full == "profile.chi") base.chi = num();
        else if (full == "profile.u_minus") base.u_minus = num();
        else if (full == "profile.w_plus") base.w_plus = num();
        else if (full == "profile.anchor") base.anchor = num();
        else if (full == "profile.z_min") base.z_min = num();
        else if (full == "profile.z_max") base.z_max = num();
        else if (full == "profile.n_samples") base.n_samples = count();
        else if (full == "pde.x_left") base.x_left = num();
        else if (full == "pde.x_right") base.x_right = num();
        else if (full == "pde.h") base.h = num();
        else if (full == "pde.tau") base.tau = num();
        else if (full == "pde.t_end") base.t_end = num();
        else if (full == "pde.snapshot_stride") base.snapshot_stride = count();
        else if (full == "pde.initial") base.initial = value;
        else if (full == "newton.tol") base.newton_tol = num();
        else if (full == "newton.max_iter") base.max_iter = count();
        else if (full == "newton.u_floor") base.u_floor = num();
        else if (full == "diagnostics.snapshots") base.snapshots = value;
        else if (full == "diagnostics.u_min_cut_fraction") base.u_min_cut_fraction = num();
        else if (full == "convergence.levels") {
            std::istringstream ls(value);
            std::vector<double> levels;
            std::string tok;
            while (ls >> tok) {
                levels.push_back(detail::parse_number(full, tok));
            }
            base.levels = levels;
        }
        else if (full == "convergence.t_end") base.convergence_t_end = num();
        else if (full == "convergence.reference_factor") base.reference_factor = count();
        else {
            throw ParameterError("config line " + std::to_string(lineno) + ": unknown key '" + full + "'");
        }
    }
    return base;
}

}  // namespace chemowave
