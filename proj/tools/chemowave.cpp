#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chemowave/app.hpp"

namespace {

struct Flags {
    std::optional<double> p, chi, u_minus, w_plus, anchor, z_min, z_max;
    std::optional<std::size_t> n_samples;
    std::vector<double> domain;
    std::optional<double> h, tau, t_end, newton_tol;
    std::optional<std::size_t> max_iter, snapshot_stride, workers;
    std::optional<std::string> out, initial, snapshots;
    std::vector<double> levels;
    std::optional<double> convergence_t_end;
    std::string config_file;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_file, "key = value config file; flags override it")->check(CLI::ExistingFile);
    cmd->add_option("--p", f.p, "diffusion exponent, 0 < p < 1");
    cmd->add_option("--chi", f.chi, "chemotactic coefficient");
    cmd->add_option("--u-minus", f.u_minus, "left state u_-");
    cmd->add_option("--w-plus", f.w_plus, "right state w_+");
    cmd->add_option("--anchor", f.anchor, "z where U = u_-/2");
    cmd->add_option("--z-min", f.z_min, "left end of the profile samples");
    cmd->add_option("--z-max", f.z_max, "right end of the profile samples");
    cmd->add_option("--n-samples", f.n_samples, "number of profile samples");
    cmd->add_option("--domain", f.domain, "spatial domain A B")->expected(2);
    cmd->add_option("--h", f.h, "grid spacing");
    cmd->add_option("--tau", f.tau, "time step");
    cmd->add_option("--t-end", f.t_end, "final time");
    cmd->add_option("--newton-tol", f.newton_tol, "Newton residual tolerance (default 1e-10)");
    cmd->add_option("--max-iter", f.max_iter, "Newton iteration cap (default 50)");
    cmd->add_option("--snapshot-stride", f.snapshot_stride, "steps between stored snapshots");
    cmd->add_option("--initial", f.initial, "initial data: reference or wave");
    cmd->add_option("--snapshots", f.snapshots, "directory of a previous simulate run");
    cmd->add_option("--levels", f.levels, "grid spacings of the refinement study");
    cmd->add_option("--convergence-t-end", f.convergence_t_end, "final time of the refinement study");
    cmd->add_option("--out", f.out, "output directory (CHEMOWAVE_OUT overrides)");
    cmd->add_option("--workers", f.workers, "concurrent simulations");
}

template <class T>
void set_if(T& target, const std::optional<T>& value) {
    if (value) {
        target = *value;
    }
}

chemowave::RunConfig build_config(const std::string& subcommand, const Flags& f) {
    chemowave::RunConfig cfg;
    if (!f.config_file.empty()) {
        cfg = chemowave::parse_config(chemowave::io::read_text(f.config_file));
    }
    cfg.subcommand = subcommand;
    set_if(cfg.p, f.p);
    set_if(cfg.chi, f.chi);
    set_if(cfg.u_minus, f.u_minus);
    set_if(cfg.w_plus, f.w_plus);
    set_if(cfg.anchor, f.anchor);
    set_if(cfg.z_min, f.z_min);
    set_if(cfg.z_max, f.z_max);
    set_if(cfg.n_samples, f.n_samples);
    if (f.domain.size() == 2) {
        cfg.x_left = f.domain[0];
        cfg.x_right = f.domain[1];
    }
    set_if(cfg.h, f.h);
    set_if(cfg.tau, f.tau);
    set_if(cfg.t_end, f.t_end);
    set_if(cfg.newton_tol, f.newton_tol);
    set_if(cfg.max_iter, f.max_iter);
    set_if(cfg.snapshot_stride, f.snapshot_stride);
    set_if(cfg.initial, f.initial);
    set_if(cfg.snapshots, f.snapshots);
    if (!f.levels.empty()) {
        cfg.levels = f.levels;
    }
    set_if(cfg.convergence_t_end, f.convergence_t_end);
    set_if(cfg.out, f.out);
    set_if(cfg.workers, f.workers);
    chemowave::app::apply_environment(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Traveling waves of a fast-diffusion chemotaxis model"};
    cli.set_help_flag("--help", "print this help and exit");
    cli.require_subcommand(1);
    Flags flags;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"profile", "tabulate the traveling wave and fit its tails"},
        {"simulate", "integrate the PDE and write snapshots"},
        {"diagnose", "compare a simulate run against the traveling wave"},
        {"convergence", "grid refinement study"},
        {"reproduce-figures", "data behind the published figures"},
    };
    for (const auto& [name, help] : commands) {
        add_flags(cli.add_subcommand(name, help), flags);
    }
    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return cli.exit(e) == 0 ? 0 : chemowave::app::kUsage;
    }
    const std::string subcommand = cli.get_subcommands().front()->get_name();
    chemowave::RunConfig cfg;
    try {
        cfg = build_config(subcommand, flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return chemowave::app::kUsage;
    }
    return chemowave::app::run(cfg, std::cout, std::cerr);
}
