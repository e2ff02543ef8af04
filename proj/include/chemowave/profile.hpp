#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "chemowave/error.hpp"
#include "chemowave/params.hpp"
#include "chemowave/quadrature.hpp"

namespace chemowave {

/// Right-tail model: solution of dU/dz = -(chi u_- / (s p)) U^{2-p} with U(0) = u_-/2.
inline double asymptotic_U_hat(double z, const WaveParams& params) {
    if (!(z >= 0.0)) {
        throw DomainError("asymptotic_U_hat is defined for z >= 0");
    }
    const double p = params.p;
    const double kappa = params.slope_scale() * params.u_minus;
    const double base = std::pow(0.5 * params.u_minus, p - 1.0) + kappa * (1.0 - p) * z;
    return std::pow(base, -1.0 / (1.0 - p));
}

/// Left-tail model: linearization of the profile ODE at u_-, anchored at U(0) = u_-/2.
inline double asymptotic_U_bar(double z, const WaveParams& params) {
    if (!(z <= 0.0)) {
        throw DomainError("asymptotic_U_bar is defined for z <= 0");
    }
    return params.u_minus - 0.5 * params.u_minus * std::exp(params.left_tail_rate() * z);
}

struct ProfileOptions {
    double anchor = 0.0;             // z at which U = u_-/2
    double u_min_fraction = 1e-10;   // table starts at U_min = fraction * u_-
    double deficit_fraction = 1e-10; // table ends at u_- - fraction * u_-
    std::size_t table_multiplier = 4;
    std::size_t min_table_cells = 4096;
    std::size_t max_table_cells = 1u << 16;
    double quad_abs_tol = 1e-12;
    double quad_rel_tol = 1e-14;
};

/// Exact traveling wave (U, V, W) of the transformed system, evaluable at
/// any z. Built from the quadrature z = H(U) on a U-table clustered toward
/// both end states; between table nodes the inverse is a monotone cubic
/// Hermite guess polished by Newton on H. Beyond the table the asymptotic
/// models take over, re-anchored at the table ends.
///
/// Immutable after construction.
class TravelingWave {
public:
    struct Point {
        double U;       // cell density
        double deficit; // u_- - U, accurate even where U rounds to u_-
        double slope;   // dU/dz = h(U)
    };

    TravelingWave(const WaveParams& params, std::size_t table_cells, const ProfileOptions& options = {})
        : params_(params), options_(options) {
        if (table_cells < 4) {
            throw ParameterError("TravelingWave: need at least 4 table cells");
        }
        if (table_cells % 2 != 0) {
            ++table_cells;
        }
        build_table(table_cells);
    }

    const WaveParams& params() const noexcept { return params_; }
    double anchor() const noexcept { return options_.anchor; }
    std::size_t table_size() const noexcept { return z_.size(); }

    /// z-range covered by quadrature; outside it the tail models apply.
    double table_z_min() const noexcept { return z_.back(); }
    double table_z_max() const noexcept { return z_.front(); }

    Point at(double z) const {
        const WaveParams& pr = params_;
        const double um = pr.u_minus;
        if (z >= z_.front()) {
            const double U = right_tail(z);
            const double d = um - U;
            return {U, d, slope_from_deficit(U, d, pr)};
        }
        if (z <= z_.back()) {
            const double d = deficit_.back() * std::exp(pr.left_tail_rate() * (z - z_.back()));
            const double U = um - d;
            return {U, d, slope_from_deficit(U, d, pr)};
        }
        const std::size_t j = locate(z);
        const double y = invert_in_cell(j, z);
        if (j < mid_) {
            return {y, um - y, slope_from_deficit(y, um - y, pr)};
        }
        return {um - y, y, slope_from_deficit(um - y, y, pr)};
    }

    double U(double z) const { return at(z).U; }
    double V(double z) const { return -at(z).U / params_.s; }
    double deficit(double z) const { return at(z).deficit; }
    double slope(double z) const { return at(z).slope; }

    /// Integral of U over (z, +infinity).
    double mass_to_right(double z) const {
        const WaveParams& pr = params_;
        const double tail0 = right_tail_mass(U_.front());
        if (z >= z_.front()) {
            return right_tail_mass(right_tail(z));
        }
        if (z <= z_.back()) {
            const double r = pr.left_tail_rate();
            const double dz = z_.back() - z;
            return tail0 + mass_.back() + pr.u_minus * dz - deficit_.back() * (-std::expm1(-r * dz)) / r;
        }
        const std::size_t j = locate(z);
        const Point pt = at(z);
        const auto neg_u_over_h = [&](double U, double d) { return -U / slope_from_deficit(U, d, pr); };
        double partial = 0.0;
        if (j < mid_) {
            partial = checked_integral([&](double U) { return neg_u_over_h(U, pr.u_minus - U); }, U_[j], pt.U, j);
        } else {
            partial = checked_integral([&](double d) { return neg_u_over_h(pr.u_minus - d, d); }, pt.deficit,
                                       deficit_[j], j);
        }
        return tail0 + mass_[j] + partial;
    }

    /// W = w_+ exp(-(1/s) * integral of U over (z, infinity)).
    double W(double z) const { return params_.w_plus * std::exp(-mass_to_right(z) / params_.s); }

private:
    void build_table(std::size_t cells) {
        const WaveParams& pr = params_;
        const double um = pr.u_minus;
        const double u_min = options_.u_min_fraction * um;
        const double delta = options_.deficit_fraction * um;
        const double center = 0.5 * um;
        const double radius = center - u_min;
        if (std::abs(u_min - delta) > 1e-300 || !(radius > 0.0)) {
            throw ParameterError("TravelingWave: the U-table must be symmetric about u_-/2");
        }
        // tanh stretching: cells grow geometrically away from both ends.
        const double beta = 0.5 * std::log(center / u_min);
        const std::size_t n = cells + 1;
        mid_ = cells / 2;
        U_.resize(n);
        deficit_.resize(n);
        z_.resize(n);
        slope_.resize(n);
        mass_.assign(n, 0.0);
        const double tb = std::tanh(beta);
        const double cb = std::cosh(beta);
        for (std::size_t j = 0; j < n; ++j) {
            const double xi = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(cells);
            const double cx = std::cosh(beta * xi);
            const double one_plus_t = std::sinh(beta * (1.0 + xi)) / (cb * cx * tb);
            const double one_minus_t = std::sinh(beta * (1.0 - xi)) / (cb * cx * tb);
            if (j < mid_) {
                U_[j] = u_min + radius * one_plus_t;
                deficit_[j] = um - U_[j];
            } else if (j == mid_) {
                U_[j] = center;
                deficit_[j] = center;
            } else {
                deficit_[j] = delta + radius * one_minus_t;
                U_[j] = um - deficit_[j];
            }
            slope_[j] = slope_from_deficit(U_[j], deficit_[j], pr);
        }

        // Cell integrals of dz/dU and of U dz.
        std::vector<double> dz(cells);
        std::vector<double> dm(cells);
        for (std::size_t j = 0; j < cells; ++j) {
            if (j < mid_) {
                const auto inv_h = [&](double U) { return 1.0 / slope_from_deficit(U, um - U, pr); };
                const auto neg_u_over_h = [&](double U) { return -U / slope_from_deficit(U, um - U, pr); };
                dz[j] = checked_integral(inv_h, U_[j], U_[j + 1], j);
                dm[j] = checked_integral(neg_u_over_h, U_[j], U_[j + 1], j);
            } else {
                // integrate in the deficit variable, d from deficit_[j] down to deficit_[j+1]
                const auto inv_h = [&](double d) { return 1.0 / slope_from_deficit(um - d, d, pr); };
                const auto neg_u_over_h = [&](double d) { return -(um - d) / slope_from_deficit(um - d, d, pr); };
                dz[j] = checked_integral(inv_h, deficit_[j + 1], deficit_[j], j);
                dm[j] = checked_integral(neg_u_over_h, deficit_[j + 1], deficit_[j], j);
            }
        }

        z_[mid_] = options_.anchor;
        for (std::size_t j = mid_ + 1; j < n; ++j) {
            z_[j] = z_[j - 1] + dz[j - 1];
        }
        for (std::size_t j = mid_; j-- > 0;) {
            z_[j] = z_[j + 1] - dz[j];
        }
        for (std::size_t j = 1; j < n; ++j) {
            mass_[j] = mass_[j - 1] + dm[j - 1];
        }
        for (std::size_t j = 0; j + 1 < n; ++j) {
            if (!(z_[j + 1] < z_[j])) {
                throw ProfileError("quadrature table is not strictly monotone", U_[j], U_[j + 1]);
            }
        }
    }

    template <typename F>
    double checked_integral(F&& f, double a, double b, std::size_t cell) const {
        const auto res = quad::adaptive_gauss(f, a, b, options_.quad_abs_tol, options_.quad_rel_tol);
        if (!res.converged || !std::isfinite(res.value)) {
            throw ProfileError("adaptive quadrature did not converge", U_[cell], U_[cell + 1]);
        }
        return res.value;
    }

    double right_tail(double z) const {
        const double p = params_.p;
        const double kappa = params_.slope_scale() * params_.u_minus;
        const double base = std::pow(U_.front(), p - 1.0) + kappa * (1.0 - p) * (z - z_.front());
        return std::pow(base, -1.0 / (1.0 - p));
    }

    double right_tail_mass(double U) const {
        return std::pow(U, params_.p) * params_.s / (params_.chi * params_.u_minus);
    }

    // Index j with z_[j+1] <= z <= z_[j]; z_ is strictly decreasing.
    std::size_t locate(double z) const {
        auto it = std::upper_bound(z_.begin(), z_.end(), z, [](double value, double elem) { return value > elem; });
        std::size_t k = static_cast<std::size_t>(it - z_.begin());
        if (k == 0) {
            return 0;
        }
        return std::min(k - 1, z_.size() - 2);
    }

    // Primary variable is U below the anchor value and the deficit above it.
    double invert_in_cell(std::size_t j, double z) const {
        const WaveParams& pr = params_;
        const double um = pr.u_minus;
        const bool lower = j < mid_;
        const double y0 = lower ? U_[j] : deficit_[j];
        const double y1 = lower ? U_[j + 1] : deficit_[j + 1];
        const double m0 = lower ? slope_[j] : -slope_[j];
        const double m1 = lower ? slope_[j + 1] : -slope_[j + 1];
        const double z0 = z_[j];
        const double z1 = z_[j + 1];
        const double dzc = z1 - z0;
        const double t = (z - z0) / dzc;

        // Hermite cubic with the exact end slopes, clamped to the bracket.
        const double t2 = t * t;
        const double t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        const double ylo = std::min(y0, y1);
        const double yhi = std::max(y0, y1);
        double y = h00 * y0 + h10 * dzc * m0 + h01 * y1 + h11 * dzc * m1;
        y = std::clamp(y, ylo, yhi);

        const auto dz_dy = [&](double yy) {
            return lower ? 1.0 / slope_from_deficit(yy, um - yy, pr) : -1.0 / slope_from_deficit(um - yy, yy, pr);
        };
        const bool from_left = t < 0.5;
        const double y_ref = from_left ? y0 : y1;
        const double z_ref = from_left ? z0 : z1;
        for (int it = 0; it < 8; ++it) {
            const double residual = z_ref + quad::gauss(dz_dy, y_ref, y) - z;
            const double step = residual / dz_dy(y);
            double next = std::clamp(y - step, ylo, yhi);
            const double change = std::abs(next - y);
            y = next;
            if (change <= 4e-16 * std::abs(y)) {
                break;
            }
        }
        return y;
    }

    WaveParams params_;
    ProfileOptions options_;
    std::size_t mid_ = 0;
    std::vector<double> U_;       // ascending
    std::vector<double> deficit_; // u_- - U_
    std::vector<double> z_;       // strictly decreasing
    std::vector<double> slope_;
    std::vector<double> mass_;    // integral of U from z_[j] to z_[0]
};

/// Tabulated traveling wave on a uniform z-grid.
struct WaveProfile {
    std::vector<double> z;
    std::vector<double> U;
    std::vector<double> V;
    std::vector<double> W;
    std::vector<double> Uz;      // h(U) at each sample
    std::vector<double> deficit; // u_- - U at each sample
    double s = 0.0;
    WaveParams params;
    std::shared_ptr<const TravelingWave> wave;

    std::size_t size() const noexcept { return z.size(); }
    double U_at(double zz) const { return wave->U(zz); }
    double V_at(double zz) const { return wave->V(zz); }
};

inline WaveProfile compute_profile(const WaveParams& params, double z_min, double z_max, std::size_t n_samples,
                                   const ProfileOptions& options = {}) {
    if (!(z_min < options.anchor && options.anchor < z_max)) {
        throw ParameterError("compute_profile: the z-range must contain the anchor point");
    }
    if (n_samples < 16) {
        throw ParameterError("compute_profile: need at least 16 samples");
    }
    std::size_t cells = options.table_multiplier * n_samples;
    cells = std::clamp(cells, options.min_table_cells, options.max_table_cells);
    auto wave = std::make_shared<const TravelingWave>(params, cells, options);

    WaveProfile prof;
    prof.params = params;
    prof.s = params.s;
    prof.wave = wave;
    prof.z.resize(n_samples);
    prof.U.resize(n_samples);
    prof.V.resize(n_samples);
    prof.W.resize(n_samples);
    prof.Uz.resize(n_samples);
    prof.deficit.resize(n_samples);
    const double dz = (z_max - z_min) / static_cast<double>(n_samples - 1);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double z = (i + 1 == n_samples) ? z_max : z_min + static_cast<double>(i) * dz;
        const auto pt = wave->at(z);
        prof.z[i] = z;
        prof.U[i] = pt.U;
        prof.V[i] = -pt.U / params.s;
        prof.Uz[i] = pt.slope;
        prof.deficit[i] = pt.deficit;
        prof.W[i] = wave->W(z);
    }
    return prof;
}

struct TailModel {
    double algebraic_exponent = 0.0;
    double algebraic_prefactor = 0.0;
    double exp_rate = 0.0;
    double exp_prefactor = 0.0;
    std::pair<double, double> right_window{0.0, 0.0};
    std::pair<double, double> left_window{0.0, 0.0};
    double target_exponent = 0.0; // -1/(1-p)
    double target_rate = 0.0;     // chi u_-^{2-p} / (s p)
};

namespace detail {

struct LineFit {
    double slope;
    double intercept;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

}  // namespace detail

/// Least-squares fits of both tails. The right window is
/// [max(50, z_max/2), z_max] in log-log coordinates; the left window is
/// [z_min, min(-5, z_min/2)] in semilog coordinates of u_- - U.
inline TailModel fit_tails(const WaveProfile& profile) {
    if (profile.size() < 2) {
        throw FitError("fit_tails: empty profile");
    }
    TailModel model;
    model.target_exponent = profile.params.right_tail_exponent();
    model.target_rate = profile.params.left_tail_rate();
    const double z_min = profile.z.front();
    const double z_max = profile.z.back();
    model.right_window = {std::max(50.0, 0.5 * z_max), z_max};
    model.left_window = {z_min, std::min(-5.0, 0.5 * z_min)};

    std::vector<double> xr;
    std::vector<double> yr;
    std::vector<double> xl;
    std::vector<double> yl;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const double z = profile.z[i];
        if (z >= model.right_window.first && z <= model.right_window.second) {
            const double lx = std::log(z);
            const double ly = std::log(profile.U[i]);
            if (!std::isfinite(lx) || !std::isfinite(ly)) {
                throw FitError("fit_tails: non-finite log U in the right window");
            }
            xr.push_back(lx);
            yr.push_back(ly);
        }
        if (z >= model.left_window.first && z <= model.left_window.second) {
            const double ly = std::log(profile.deficit[i]);
            if (!std::isfinite(ly)) {
                throw FitError("fit_tails: non-finite log(u_- - U) in the left window");
            }
            xl.push_back(z);
            yl.push_back(ly);
        }
    }
    if (xr.size() < 2) {
        throw FitError("fit_tails: right window holds fewer than two samples (extend z_max past 50)");
    }
    if (xl.size() < 2) {
        throw FitError("fit_tails: left window holds fewer than two samples (extend z_min below -5)");
    }
    const auto right = detail::least_squares(xr, yr);
    const auto left = detail::least_squares(xl, yl);
    model.algebraic_exponent = right.slope;
    model.algebraic_prefactor = std::exp(right.intercept);
    model.exp_rate = left.slope;
    model.exp_prefactor = std::exp(left.intercept);
    return model;
}

}  // namespace chemowave
