#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chemowave/convergence.hpp"
#include "chemowave/diagnostics.hpp"
#include "chemowave/pde.hpp"
#include "chemowave/profile.hpp"

using namespace chemowave;

namespace {

const WaveProfile& profile_p05() {
    static const WaveProfile prof = compute_profile(make_params(0.5, 1.0, 1.0, 1.0), -30.0, 200.0, 1024);
    return prof;
}

const Grid1D& ref_grid() {
    static const Grid1D g = make_grid_with_spacing(-30.0, 30.0, 0.05);
    return g;
}

std::vector<double> translate(const WaveProfile& prof, const Grid1D& g, double shift) {
    std::vector<double> u(g.nx);
    for (std::size_t i = 0; i < g.nx; ++i) {
        u[i] = prof.U_at(g.x(i) + shift);
    }
    return u;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]) / std::abs(b[i]));
    }
    return m;
}

}  // namespace

TEST(HopfCole, ForwardOnExactCases) {
    const auto g = make_grid(-2.0, 3.0, 51);
    std::vector<double> w(g.nx);
    std::vector<double> c(g.nx, 2.5);
    for (std::size_t i = 0; i < g.nx; ++i) {
        w[i] = std::exp(-g.x(i));
    }
    for (double v : hopf_cole_forward(w, g)) {
        EXPECT_NEAR(v, 1.0, 1e-12);
    }
    for (double v : hopf_cole_forward(c, g)) {
        EXPECT_EQ(v, 0.0);
    }
    c[4] = 0.0;
    EXPECT_THROW(hopf_cole_forward(c, g), DomainError);
}

TEST(HopfCole, ForwardIsSecondOrder) {
    double prev = 0.0;
    for (std::size_t nx : {101u, 201u, 401u}) {
        const auto g = make_grid(0.0, 4.0, nx);
        std::vector<double> w(nx);
        for (std::size_t i = 0; i < nx; ++i) {
            w[i] = std::exp(std::cos(g.x(i)));  // v = sin x
        }
        const auto v = hopf_cole_forward(w, g);
        double err = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            err = std::max(err, std::abs(v[i] - std::sin(g.x(i))));
        }
        if (prev > 0.0) {
            EXPECT_NEAR(prev / err, 4.0, 0.3);
        }
        prev = err;
    }
}

TEST(HopfCole, RoundTrip) {
    const auto g = make_grid_with_spacing(-10.0, 10.0, 0.0125);
    std::vector<double> w(g.nx);
    for (std::size_t i = 0; i < g.nx; ++i) {
        const double x = g.x(i);
        w[i] = 2.0 + std::tanh(x) + 0.3 * std::sin(2.0 * x);
    }
    const auto back = hopf_cole_inverse(hopf_cole_forward(w, g), g, w.back());
    EXPECT_LE(max_rel(back, w), 1e-6);
    EXPECT_THROW(hopf_cole_inverse(std::vector<double>(g.nx, 0.0), g, 0.0), DomainError);
}

TEST(HopfCole, HistoryReconstruction) {
    const auto g = make_grid(0.0, 1.0, 11);
    const std::vector<double> w0(11, 3.0);
    std::vector<State> zero;
    std::vector<State> ones;
    for (int k = 0; k <= 4; ++k) {
        zero.push_back({0.5 * k, std::vector<double>(11, 0.0), std::vector<double>(11, 0.0)});
        ones.push_back({0.5 * k, std::vector<double>(11, 1.0), std::vector<double>(11, 0.0)});
    }
    EXPECT_EQ(reconstruct_w_from_history(w0, zero, g), w0);
    for (double w : reconstruct_w_from_history(w0, ones, g)) {
        EXPECT_NEAR(w, 3.0 * std::exp(-2.0), 1e-14);
    }
    ones[2].t = 0.9;
    EXPECT_THROW(reconstruct_w_from_history(w0, ones, g), DimensionError);
}

TEST(HopfCole, ReconstructionAgreesWithSimulatedSignal) {
    const auto& g = ref_grid();
    const auto run = run_simulation(g, {0.05, 5.0, 1}, {}, 1.0, 0.5, reference_initial_state(g));
    const auto& v0 = run.snapshots.front().v;
    const auto w0 = hopf_cole_inverse(v0, g, 1.0);
    const auto w = reconstruct_w_from_history(w0, run.snapshots, g);
    const auto v = hopf_cole_forward(w, g);
    const auto& v_sim = run.snapshots.back().v;
    double err = 0.0;
    for (std::size_t i = 0; i < g.nx; ++i) {
        err = std::max(err, std::abs(v[i] - v_sim[i]));
    }
    EXPECT_LE(err, 5e-3);
}

TEST(Shift, RecoversTranslations) {
    const auto& prof = profile_p05();
    const auto& g = ref_grid();
    EXPECT_NEAR(estimate_shift(translate(prof, g, 0.0), prof, g).x0, 0.0, 1e-9);
    for (double a : {-5.0, -3.0, 1.5, 4.0, 5.0}) {
        const auto est = estimate_shift(translate(prof, g, a), prof, g);
        EXPECT_NEAR(est.x0, a, 2e-3) << "a=" << a;
        EXPECT_LE(std::abs(est.mass_residual), 1e-9);
    }
}

TEST(Shift, ReferenceInitialData) {
    const auto& prof = profile_p05();
    const auto& g = ref_grid();
    const State s0 = reference_initial_state(g);
    const auto est = estimate_shift(s0.u, prof, g, s0.v);
    EXPECT_TRUE(std::isfinite(est.x0));
    EXPECT_LE(std::abs(est.mass_residual), 1e-6 * g.length());
    EXPECT_NEAR(est.x0, est.x0_closed_form, 1e-2);
    EXPECT_NEAR(est.gamma, 0.0, 1e-9);  // v0 = -u0 carries no diffusion-wave mass
}

TEST(Shift, MissingFrontIsAnError) {
    const auto& prof = profile_p05();
    const auto& g = ref_grid();
    EXPECT_THROW(estimate_shift(std::vector<double>(g.nx, 0.9), prof, g), ShiftError);
}

TEST(Shift, FirstCharacteristicIsAnEigenvector) {
    const auto pr = make_params(0.5, 2.0, 1.5, 1.0);
    const auto r = detail::first_characteristic(pr);
    // A = [[-chi v, -chi u], [-1, 0]] at the left state
    const double a11 = -pr.chi * pr.v_minus;
    const double a12 = -pr.chi * pr.u_minus;
    const double au = a11 * r[0] + a12 * r[1];
    const double av = -r[0];
    EXPECT_NEAR(au * r[1] - av * r[0], 0.0, 1e-12);
}

TEST(Antiderivatives, VanishOnTheWave) {
    const auto& prof = profile_p05();
    const auto& g = ref_grid();
    const auto w = shifted_wave(prof, 0.4, 2.0, g);
    const auto a = antiderivatives(w.U, w.V, prof, 0.4, 2.0, g);
    for (std::size_t i = 0; i < g.nx; ++i) {
        ASSERT_EQ(a.phi[i], 0.0);
        ASSERT_EQ(a.psi[i], 0.0);
    }
}

TEST(Antiderivatives, RecoverABump) {
    const auto& prof = profile_p05();
    const auto g = make_grid_with_spacing(-30.0, 30.0, 0.01);
    const auto bump = [](double x) { return std::abs(x) < 1 ? std::pow(1 - x * x, 4) : 0.0; };
    const auto dbump = [](double x) { return std::abs(x) < 1 ? -8 * x * std::pow(1 - x * x, 3) : 0.0; };
    const auto w = shifted_wave(prof, 0.0, 0.0, g);
    std::vector<double> u(g.nx);
    for (std::size_t i = 0; i < g.nx; ++i) {
        u[i] = w.U[i] + dbump(g.x(i));
    }
    const auto a = antiderivatives(u, w.V, prof, 0.0, 0.0, g);
    for (std::size_t i = 0; i < g.nx; ++i) {
        ASSERT_NEAR(a.phi[i], bump(g.x(i)), 1e-4);
    }
    EXPECT_NEAR(a.phi_end, 0.0, 1e-12);
}

TEST(Weights, AlphaCaseSplit) {
    EXPECT_EQ(weight_alpha(0.75), 0.5);
    EXPECT_EQ(make_weight(1, 0.75).exponent_of_U, -1.5);
    EXPECT_EQ(weight_alpha(0.3), 0.0);
    EXPECT_EQ(make_weight(1, 0.3).exponent_of_U, -1.0);
    EXPECT_EQ(weight_alpha(0.5), 0.0);
    EXPECT_EQ(make_weight(2, 0.75).exponent_of_U, -0.5);
    EXPECT_EQ(make_weight(3, 0.75).exponent_of_U, -2.0);
    EXPECT_EQ(make_weight(4, 0.75).exponent_of_U, -1.0);
    EXPECT_DOUBLE_EQ(make_weight(5, 0.75).exponent_of_U, 0.75 - 0.5 - 2.0);
    EXPECT_DOUBLE_EQ(make_weight(6, 0.75).exponent_of_U, 0.75 - 3.0);
    EXPECT_THROW(make_weight(0, 0.5), ParameterError);
    EXPECT_THROW(make_weight(7, 0.5), ParameterError);
}

TEST(WeightedNorm, TrivialCases) {
    const auto g = make_grid(0.0, 2.0, 21);
    const std::vector<double> U(g.nx, 0.25);
    const auto zero = weighted_norm(std::vector<double>(g.nx, 0.0), make_weight(3, 0.5), U, g, 1e-6);
    EXPECT_EQ(zero.norm, 0.0);
    EXPECT_FALSE(zero.truncated);
    const auto n4 = weighted_norm(U, make_weight(4, 0.5), U, g, 1e-6);
    EXPECT_NEAR(n4.integral, 0.25 * 2.0, 1e-14);
}

TEST(WeightedNorm, TruncatesBelowTheCut) {
    const auto g = make_grid(0.0, 2.0, 21);
    std::vector<double> U(g.nx);
    for (std::size_t i = 0; i < g.nx; ++i) {
        U[i] = i < 15 ? 1.0 : 1e-9;
    }
    const auto n = weighted_norm(std::vector<double>(g.nx, 1.0), make_weight(4, 0.5), U, g, 1e-6);
    EXPECT_TRUE(n.truncated);
    EXPECT_NEAR(n.cut_x, g.x(15), 1e-14);
    EXPECT_NEAR(n.integral, 14 * g.h, 1e-14);
}

TEST(RunningSupremum, Semantics) {
    const std::vector<double> c(5, 0.5);
    for (double v : compute_N(c, c, c, c)) {
        EXPECT_EQ(v, 2.0);
    }
    const std::vector<double> dec{4, 3, 2, 1};
    const std::vector<double> z(4, 0.0);
    for (double v : compute_N(dec, z, z, z)) {
        EXPECT_EQ(v, 4.0);
    }
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    std::array<std::vector<double>, 4> s;
    for (auto& v : s) {
        for (int k = 0; k < 200; ++k) {
            v.push_back(d(rng));
        }
    }
    const auto n = compute_N(s[0], s[1], s[2], s[3]);
    for (std::size_t k = 1; k < n.size(); ++k) {
        ASSERT_GE(n[k], n[k - 1]);
    }
    EXPECT_THROW(compute_N(dec, z, z, c), DimensionError);
}

TEST(Front, Position) {
    const auto& prof = profile_p05();
    const auto& g = ref_grid();
    EXPECT_NEAR(front_position(translate(prof, g, 0.0), g, 0.5), 0.0, 1e-12);
    for (double a : {-2.3, 0.71, 3.33}) {
        EXPECT_NEAR(front_position(translate(prof, g, -a), g, 0.5), a, g.h * g.h);
    }
    EXPECT_THROW(front_position(std::vector<double>(g.nx, 0.9), g, 0.5), TrackingError);
    std::vector<double> twice(g.nx);
    for (std::size_t i = 0; i < g.nx; ++i) {
        twice[i] = 0.5 + 0.4 * std::cos(g.x(i));
    }
    EXPECT_THROW(front_position(twice, g, 0.5), TrackingError);
    EXPECT_NO_THROW(front_position(twice, g, 0.5, std::make_pair(0.0, 3.0)));
}

TEST(Front, Speed) {
    const std::vector<double> t{0, 1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(measure_speed(t, t, {0, 4}), 1.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> noise(-0.05, 0.05);
    std::vector<double> tt;
    std::vector<double> xf;
    for (int k = 0; k <= 200; ++k) {
        tt.push_back(0.1 * k);
        xf.push_back(0.8 * tt.back() + noise(rng));
    }
    EXPECT_NEAR(measure_speed(tt, xf, {10, 20}), 0.8, 0.04);
    EXPECT_THROW(measure_speed(t, t, {10, 20}), TrackingError);
}

TEST(Front, RigidTranslationChain) {
    const auto& prof = profile_p05();
    const auto& g = ref_grid();
    for (double c : {0.5, 0.9, 1.3, 2.0}) {
        std::vector<double> times;
        std::vector<double> fronts;
        for (int k = 0; k <= 100; ++k) {
            const double t = 0.1 * k;
            times.push_back(t);
            fronts.push_back(front_position(translate(prof, g, -c * t), g, 0.5));
        }
        EXPECT_NEAR(measure_speed(times, fronts, {0, 10}), c, 1e-3 * c) << "c=" << c;
    }
}

TEST(SupDistance, Values) {
    const auto& prof = profile_p05();
    const auto& g = ref_grid();
    const auto w = shifted_wave(prof, 0.3, 1.5, g);
    State s{1.5, w.U, w.V};
    auto d = sup_distance(s, prof, prof.s, 0.3, g);
    EXPECT_EQ(d.first, 0.0);
    EXPECT_EQ(d.second, 0.0);
    for (std::size_t i = 0; i < g.nx; ++i) {
        s.u[i] += 0.01 * std::exp(-g.x(i) * g.x(i));
    }
    d = sup_distance(s, prof, prof.s, 0.3, g);
    EXPECT_NEAR(d.first, 0.01, 1e-15);
    EXPECT_EQ(d.second, 0.0);
}

TEST(Diagnose, RigidTranslateHasInjectedSpeed) {
    const auto& prof = profile_p05();
    const auto& g = ref_grid();
    std::vector<State> snaps;
    for (int k = 0; k <= 20; ++k) {
        const double t = 0.5 * k;
        State s{t, translate(prof, g, -0.7 * t), {}};
        for (double u : s.u) {
            s.v.push_back(-u / prof.s);
        }
        snaps.push_back(std::move(s));
    }
    const auto rep = diagnose(snaps, g, prof);
    EXPECT_NEAR(rep.summary.shift.x0, 0.0, 1e-9);
    EXPECT_NEAR(rep.summary.measured_speed, 0.7, 1e-3);
    EXPECT_EQ(rep.summary.speed_window.first, 5.0);
    EXPECT_EQ(rep.series.times.size(), 21u);
}

TEST(Diagnose, ReferenceRunSeries) {
    const auto& prof = profile_p05();
    const auto& g = ref_grid();
    const auto run = run_simulation(g, {0.05, 20.0, 20}, {}, 1.0, 0.5, reference_initial_state(g));
    const auto rep = diagnose(run.snapshots, g, prof);
    const auto& ser = rep.series;
    EXPECT_NEAR(rep.summary.measured_speed, 1.0, 0.05);
    for (std::size_t k = 1; k < ser.N_t.size(); ++k) {
        ASSERT_GE(ser.N_t[k], ser.N_t[k - 1]);
    }
    // the running supremum is set during the transient and stays there
    std::size_t k10 = 0;
    while (ser.times[k10] < 10.0) {
        ++k10;
    }
    EXPECT_EQ(ser.N_t.back(), ser.N_t[k10]);
    // w3-weighted perturbation decays while the front is far from the right
    // wall; later the tail held back by the wall is amplified by U^{-2}
    for (std::size_t k = 1; k <= k10; ++k) {
        ASSERT_LT(ser.weighted_norms[2][k], ser.weighted_norms[2][k - 1]) << "t=" << ser.times[k];
    }
    for (std::size_t k = 0; k < ser.times.size(); ++k) {
        ASSERT_TRUE(std::isfinite(ser.weighted_norms[2][k]));
    }
    // The right wall stops the wave tail from leaving the domain, so the
    // perturbation mass at t = 10 equals the tail mass the moving wave
    // would have carried out through x = 30.
    const double x0 = rep.summary.shift.x0;
    double carried = 0.0;
    const int n = 2000;
    for (int k = 0; k < n; ++k) {
        const double tau = 10.0 * (k + 0.5) / n;
        carried += prof.s * prof.U_at(30.0 + x0 - prof.s * tau) * 10.0 / n;
    }
    EXPECT_NEAR(ser.phi_end[k10], carried, 1e-3);
    EXPECT_LE(ser.sup_dist_u.back(), 0.5 * ser.sup_dist_u[10]);
}

TEST(Diagnose, WeightedNormDecaysWithoutTheWall) {
    const auto& prof = profile_p05();
    const auto g = make_grid_with_spacing(-30.0, 60.0, 0.05);
    const auto run = run_simulation(g, {0.05, 20.0, 20}, {}, 1.0, 0.5, reference_initial_state(g));
    const auto rep = diagnose(run.snapshots, g, prof);
    const auto& w3 = rep.series.weighted_norms[2];
    for (std::size_t k = 1; k < w3.size(); ++k) {
        ASSERT_LT(w3[k], w3[k - 1]) << "t=" << rep.series.times[k];
    }
}
