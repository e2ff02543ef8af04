#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "chemowave/app.hpp"

using namespace chemowave;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("chemowave_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(RunConfig cfg, std::string* err_text = nullptr) {
    std::ostringstream log;
    std::ostringstream err;
    const int rc = app::run(cfg, log, err);
    if (err_text) {
        *err_text = err.str();
    }
    return rc;
}

int shell(const std::string& args) {
    const std::string cmd = std::string(CHEMOWAVE_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(CliProfile, WritesTableAndMetadata) {
    RunConfig cfg;
    cfg.subcommand = "profile";
    cfg.out = scratch("profile").string();
    ASSERT_EQ(run(cfg), 0);
    const auto meta = io::read_json(fs::path(cfg.out) / "profile.json");
    EXPECT_EQ(meta["params"]["s"].get<double>(), 1.0);
    EXPECT_NEAR(meta["tails"]["algebraic_exponent"].get<double>(), -2.0, 0.06);
    const auto table = io::read_csv(fs::path(cfg.out) / "profile.csv");
    EXPECT_EQ(table.header, (std::vector<std::string>{"z", "U", "V", "W"}));
    EXPECT_EQ(table.rows(), cfg.n_samples);
}

TEST(CliProfile, ValidationErrors) {
    RunConfig cfg;
    cfg.subcommand = "profile";
    cfg.out = scratch("profile_bad").string();
    cfg.p = 0.99;
    cfg.z_max = 60.0;
    EXPECT_EQ(run(cfg), 0);
    cfg.p = 1.0;
    std::string err;
    EXPECT_NE(run(cfg, &err), 0);
    EXPECT_NE(err.find("p must lie in (0, 1)"), std::string::npos);
    cfg.p = 0.5;
    cfg.z_min = 1.0;
    EXPECT_NE(run(cfg), 0);
}

TEST(CliSimulate, ZeroEndTimeAndValidation) {
    RunConfig cfg;
    cfg.subcommand = "simulate";
    cfg.out = scratch("sim0").string();
    cfg.t_end = 0.0;
    ASSERT_EQ(run(cfg), 0);
    std::size_t csv = 0;
    for (const auto& e : fs::directory_iterator(cfg.out)) {
        csv += e.path().extension() == ".csv";
    }
    EXPECT_EQ(csv, 1u);
    EXPECT_TRUE(fs::exists(fs::path(cfg.out) / "snap_t0.0000.csv"));
    cfg.tau = -0.05;
    EXPECT_EQ(run(cfg), app::kUsage);
}

TEST(CliSimulate, OutputsAreByteDeterministic) {
    RunConfig cfg;
    cfg.subcommand = "simulate";
    cfg.t_end = 2.0;
    cfg.out = scratch("det_a").string();
    ASSERT_EQ(run(cfg), 0);
    const std::string a = cfg.out;
    cfg.out = scratch("det_b").string();
    ASSERT_EQ(run(cfg), 0);
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        if (e.path().filename() == "timing.json") {
            continue;
        }
        EXPECT_EQ(io::read_text(e.path()), io::read_text(fs::path(cfg.out) / e.path().filename()))
            << e.path().filename();
        ++compared;
    }
    EXPECT_GE(compared, 3u);
    const auto meta = io::read_json(fs::path(a) / "run.json");
    EXPECT_EQ(meta["total_clamped"].get<std::size_t>(), 0u);
    EXPECT_EQ(meta["step_iterations"].size(), 40u);
    EXPECT_EQ(meta["snapshots"].size(), 5u);
}

TEST(CliDiagnose, SyntheticRigidTranslate) {
    const fs::path dir = scratch("synthetic");
    const auto params = make_params(0.5, 1.0, 1.0, 1.0);
    const auto prof = compute_profile(params, -30.0, 200.0, 512);
    const Grid1D g = make_grid_with_spacing(-30.0, 30.0, 0.05);
    const double c = 0.8;
    io::Json snaps = io::Json::array();
    for (int k = 0; k <= 20; ++k) {
        const double t = 0.5 * k;
        State s;
        s.t = t;
        for (std::size_t i = 0; i < g.nx; ++i) {
            s.u.push_back(prof.U_at(g.x(i) - c * t));
            s.v.push_back(-s.u.back() / params.s);
        }
        const std::string name = io::snapshot_filename(t);
        io::write_snapshot_csv(dir / name, g, s);
        snaps.push_back({{"t", t}, {"file", name}});
    }
    io::Json meta;
    meta["params"] = io::params_json(params);
    meta["grid"] = io::grid_json(g);
    meta["snapshots"] = snaps;
    io::write_json(dir / "run.json", meta);

    RunConfig cfg;
    cfg.subcommand = "diagnose";
    cfg.snapshots = dir.string();
    cfg.out = (dir / "diag").string();
    ASSERT_EQ(run(cfg), 0);
    const auto summary = io::read_json(fs::path(cfg.out) / "diagnostics.json");
    EXPECT_NEAR(summary["speed"]["measured"].get<double>(), c, 1e-3);
    const auto table = io::read_csv(fs::path(cfg.out) / "diagnostics.csv");
    const std::vector<std::string> header{"t",       "sup_u",   "sup_v",   "front",   "s_window",
                                          "N_t",     "norm_w1", "norm_w2", "norm_w3", "norm_w4",
                                          "norm_w5", "norm_w6", "phi_end", "psi_end"};
    EXPECT_EQ(table.header, header);
    EXPECT_EQ(table.rows(), 21u);

    cfg.p = 0.1;
    std::string err;
    EXPECT_NE(run(cfg, &err), 0);
    EXPECT_NE(err.find("metadata mismatch"), std::string::npos);
}

TEST(CliDiagnose, EmptyDirectoryIsAnError) {
    RunConfig cfg;
    cfg.subcommand = "diagnose";
    cfg.snapshots = scratch("empty").string();
    cfg.out = cfg.snapshots;
    EXPECT_EQ(run(cfg), app::kFailure);
    cfg.snapshots = (fs::path(cfg.out) / "missing").string();
    EXPECT_EQ(run(cfg), app::kFailure);
}

TEST(CliDiagnose, AfterSimulate) {
    RunConfig cfg;
    cfg.subcommand = "simulate";
    cfg.out = scratch("sim_diag").string();
    ASSERT_EQ(run(cfg), 0);
    cfg.subcommand = "diagnose";
    ASSERT_EQ(run(cfg), 0);
    const auto summary = io::read_json(fs::path(cfg.out) / "diagnostics.json");
    EXPECT_NEAR(summary["speed"]["measured"].get<double>(), 1.0, 0.05);
    EXPECT_EQ(summary["speed"]["window"][0].get<double>(), 10.0);
}

TEST(CliConvergence, LevelValidation) {
    RunConfig cfg;
    cfg.subcommand = "convergence";
    cfg.out = scratch("conv").string();
    cfg.levels = {0.1};
    EXPECT_EQ(run(cfg), app::kUsage);
    cfg.levels = {0.1, 0.04, 0.02};
    EXPECT_EQ(run(cfg), app::kUsage);
}

TEST(CliBinary, FlagsConfigFileAndEnvironment) {
    const fs::path dir = scratch("binary");
    EXPECT_EQ(shell("--help"), 0);
    EXPECT_EQ(shell(""), app::kUsage);
    EXPECT_EQ(shell("simulate --no-such-flag 1"), app::kUsage);
    EXPECT_EQ(shell("simulate --tau -1 --out " + (dir / "neg").string()), app::kUsage);

    RunConfig file_cfg;
    file_cfg.p = 0.9;
    file_cfg.t_end = 5.0;
    io::write_text(dir / "run.ini", serialize_config(file_cfg));
    ASSERT_EQ(shell("simulate --config " + (dir / "run.ini").string() + " --t-end 0.5 --domain -20 20 --out " +
                    (dir / "flags").string()),
              0);
    const auto meta = io::read_json(dir / "flags" / "run.json");
    EXPECT_EQ(meta["params"]["p"].get<double>(), 0.9);
    EXPECT_EQ(meta["t_end"].get<double>(), 0.5);
    EXPECT_EQ(meta["grid"]["x_left"].get<double>(), -20.0);

    ASSERT_EQ(setenv("CHEMOWAVE_OUT", (dir / "env").c_str(), 1), 0);
    const int rc = shell("profile --z-max 60 --out " + (dir / "ignored").string());
    unsetenv("CHEMOWAVE_OUT");
    EXPECT_EQ(rc, 0);
    EXPECT_TRUE(fs::exists(dir / "env" / "profile.csv"));
    EXPECT_FALSE(fs::exists(dir / "ignored"));
}

TEST(CliBinary, ReproduceFigures) {
    const fs::path dir = scratch("figures");
    ASSERT_EQ(shell("reproduce-figures --workers 2 --out " + dir.string()), 0);
    const auto manifest = io::read_json(dir / "manifest.json");
    EXPECT_EQ(manifest["status"].get<std::string>(), "complete");
    ASSERT_EQ(manifest["figures"].size(), 7u);
    for (const auto& f : manifest["figures"]) {
        EXPECT_TRUE(fs::exists(dir / f["file"].get<std::string>()));
    }
    const auto& st = manifest["steepness"];
    EXPECT_GT(st["p0.1"].get<double>(), st["p0.5"].get<double>());
    EXPECT_GT(st["p0.5"].get<double>(), st["p0.9"].get<double>());
    const auto fig2 = io::read_csv(dir / "fig2_profiles_p0.1.csv");
    EXPECT_EQ(fig2.rows(), 5u * 1201u);
}

TEST(CliBinary, FailedFigureRunLeavesPartialManifest) {
    const fs::path dir = scratch("figures_fail");
    EXPECT_EQ(shell("reproduce-figures --t-end 1 --max-iter 2 --out " + dir.string()), app::kFailure);
    const auto manifest = io::read_json(dir / "manifest.json");
    EXPECT_EQ(manifest["status"].get<std::string>(), "partial");
    EXPECT_EQ(manifest["runs"][0]["status"].get<std::string>(), "failed");
}
