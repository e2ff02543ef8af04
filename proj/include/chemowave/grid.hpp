#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "chemowave/error.hpp"

namespace chemowave {

/// Uniform mesh on [x_left, x_right] with nx nodes including both ends.
struct Grid1D {
    double x_left = -30.0;
    double x_right = 30.0;
    std::size_t nx = 1201;
    double h = 0.05;

    double x(std::size_t i) const noexcept {
        return i + 1 == nx ? x_right : x_left + static_cast<double>(i) * h;
    }

    std::vector<double> nodes() const {
        std::vector<double> xs(nx);
        for (std::size_t i = 0; i < nx; ++i) {
            xs[i] = x(i);
        }
        return xs;
    }

    double length() const noexcept { return x_right - x_left; }
};

inline Grid1D make_grid(double x_left, double x_right, std::size_t nx) {
    if (!(x_left < x_right) || !std::isfinite(x_left) || !std::isfinite(x_right)) {
        throw ParameterError("grid: need x_left < x_right");
    }
    if (nx < 3) {
        throw ParameterError("grid: need at least 3 nodes");
    }
    Grid1D g;
    g.x_left = x_left;
    g.x_right = x_right;
    g.nx = nx;
    g.h = (x_right - x_left) / static_cast<double>(nx - 1);
    return g;
}

/// Grid from a target spacing; the interval length must be a whole number
/// of cells.
inline Grid1D make_grid_with_spacing(double x_left, double x_right, double h) {
    if (!(h > 0.0)) {
        throw ParameterError("grid: spacing must be positive");
    }
    const double cells = (x_right - x_left) / h;
    const double rounded = std::round(cells);
    if (rounded < 2.0 || std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells)) {
        throw ParameterError("grid: domain length " + std::to_string(x_right - x_left) +
                             " is not a whole multiple of h = " + std::to_string(h));
    }
    return make_grid(x_left, x_right, static_cast<std::size_t>(rounded) + 1);
}

/// Solution of the transformed system at one time level.
struct State {
    double t = 0.0;
    std::vector<double> u;
    std::vector<double> v;

    std::size_t size() const noexcept { return u.size(); }
};

}  // namespace chemowave
