#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "chemowave/error.hpp"

namespace chemowave {

/// Physical parameters of the transformed chemotaxis system together with
/// the derived wave speed and left Hopf-Cole state.
struct WaveParams {
    double p = 0.5;        // diffusion exponent, 0 < p < 1
    double chi = 1.0;      // chemotactic coefficient
    double u_minus = 1.0;  // left cell density
    double w_plus = 1.0;   // right signal concentration
    double s = 1.0;        // wave speed, sqrt(chi * u_minus)
    double v_minus = -1.0; // -u_minus / s

    /// chi / (s p): prefactor of the profile slope h(U).
    double slope_scale() const noexcept { return chi / (s * p); }
    /// Exponential rate of the left tail, chi u_-^{2-p} / (s p).
    double left_tail_rate() const noexcept { return slope_scale() * std::pow(u_minus, 2.0 - p); }
    /// Algebraic exponent of the right tail, -1 / (1 - p).
    double right_tail_exponent() const noexcept { return -1.0 / (1.0 - p); }
};

inline WaveParams make_params(double p, double chi, double u_minus, double w_plus) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ParameterError("diffusion exponent p must lie in (0, 1), got " + std::to_string(p));
    }
    if (!(chi > 0.0) || !std::isfinite(chi)) {
        throw ParameterError("chemotactic coefficient chi must be positive, got " + std::to_string(chi));
    }
    if (!(u_minus > 0.0) || !std::isfinite(u_minus)) {
        throw ParameterError("u_minus must be positive, got " + std::to_string(u_minus));
    }
    if (!(w_plus > 0.0) || !std::isfinite(w_plus)) {
        throw ParameterError("w_plus must be positive, got " + std::to_string(w_plus));
    }
    WaveParams params;
    params.p = p;
    params.chi = chi;
    params.u_minus = u_minus;
    params.w_plus = w_plus;
    params.s = std::sqrt(chi * u_minus);
    params.v_minus = -u_minus / params.s;
    return params;
}

/// Residuals of the two jump relations (s u_- + chi u_- v_-, s v_- + u_-).
inline std::pair<double, double> check_rankine_hugoniot(const WaveParams& params) {
    const double r1 = params.s * params.u_minus + params.chi * params.u_minus * params.v_minus;
    const double r2 = params.s * params.v_minus + params.u_minus;
    return {r1, r2};
}

/// h(U) written with the deficit d = u_- - U supplied separately, so that
/// values of U within rounding distance of u_- keep full relative accuracy.
inline double slope_from_deficit(double U, double deficit, const WaveParams& params) noexcept {
    return -params.slope_scale() * std::pow(U, 2.0 - params.p) * deficit;
}

/// dU/dz along the traveling wave: h(U) = chi U^{2-p} (U - u_-) / (s p).
inline double profile_slope(double U, const WaveParams& params) {
    if (U == params.u_minus) {
        return 0.0;
    }
    if (!(U > 0.0 && U < params.u_minus)) {
        throw DomainError("profile_slope: U must lie in (0, u_minus), got " + std::to_string(U));
    }
    return slope_from_deficit(U, params.u_minus - U, params);
}

}  // namespace chemowave
