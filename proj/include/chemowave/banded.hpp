#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "chemowave/error.hpp"

namespace chemowave {

namespace detail {

inline constexpr std::size_t kGuardLength = 8;
inline constexpr double kGuardValue = -7.77e77;

// Contiguous storage bracketed by canary values on both sides.
class GuardedBuffer {
public:
    GuardedBuffer() = default;
    explicit GuardedBuffer(std::size_t n) : data_(n + 2 * kGuardLength, 0.0) {
        std::fill_n(data_.begin(), kGuardLength, kGuardValue);
        std::fill_n(data_.end() - static_cast<std::ptrdiff_t>(kGuardLength), kGuardLength, kGuardValue);
    }

    double* data() noexcept { return data_.data() + kGuardLength; }
    const double* data() const noexcept { return data_.data() + kGuardLength; }
    std::size_t size() const noexcept { return data_.size() - 2 * kGuardLength; }

    bool intact() const noexcept {
        for (std::size_t k = 0; k < kGuardLength; ++k) {
            if (data_[k] != kGuardValue || data_[data_.size() - 1 - k] != kGuardValue) {
                return false;
            }
        }
        return true;
    }

private:
    std::vector<double> data_;
};

}  // namespace detail

/// Square band matrix stored row by row: row i keeps columns
/// [i - kl, i + ku] at offsets 0 .. kl + ku. Slots that fall outside the
/// logical matrix stay zero.
class BandedMatrix {
public:
    BandedMatrix() = default;
    BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku)
        : n_(n), kl_(kl), ku_(ku), storage_(n * (kl + ku + 1)) {}

    std::size_t n() const noexcept { return n_; }
    std::size_t kl() const noexcept { return kl_; }
    std::size_t ku() const noexcept { return ku_; }
    std::size_t width() const noexcept { return kl_ + ku_ + 1; }

    bool in_band(std::size_t i, std::size_t j) const noexcept {
        return i < n_ && j < n_ && j + kl_ >= i && j <= i + ku_;
    }

    /// Entry (i, j); zero outside the band.
    double get(std::size_t i, std::size_t j) const noexcept {
        return in_band(i, j) ? storage_.data()[i * width() + (j + kl_ - i)] : 0.0;
    }

    double& at(std::size_t i, std::size_t j) {
        if (!in_band(i, j)) {
            throw DimensionError("BandedMatrix: entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                 ") lies outside the band");
        }
        return storage_.data()[i * width() + (j + kl_ - i)];
    }

    void add(std::size_t i, std::size_t j, double value) { at(i, j) += value; }

    std::span<const double> bands() const noexcept { return {storage_.data(), storage_.size()}; }

    bool guards_intact() const noexcept { return storage_.intact(); }

    std::vector<double> multiply(std::span<const double> x) const {
        if (x.size() != n_) {
            throw DimensionError("BandedMatrix::multiply: size mismatch");
        }
        std::vector<double> y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t lo = i > kl_ ? i - kl_ : 0;
            const std::size_t hi = std::min(n_ - 1, i + ku_);
            double acc = 0.0;
            for (std::size_t j = lo; j <= hi; ++j) {
                acc += get(i, j) * x[j];
            }
            y[i] = acc;
        }
        return y;
    }

private:
    std::size_t n_ = 0;
    std::size_t kl_ = 0;
    std::size_t ku_ = 0;
    detail::GuardedBuffer storage_;
};

/// In-band LU factorization with partial pivoting. Row interchanges widen
/// the upper factor to kl + ku superdiagonals. Immutable once built, so
/// concurrent solves on one factorization are safe.
class BandedLU {
public:
    static constexpr double kSingularPivot = 1e-300;

    explicit BandedLU(const BandedMatrix& a)
        : n_(a.n()), kl_(a.kl()), ku_(a.ku()), upper_(a.n() * row_width(a)), lower_(a.n() * a.kl()),
          pivots_(a.n()) {
        if (n_ == 0) {
            throw DimensionError("BandedLU: empty matrix");
        }
        const std::size_t reach = kl_ + ku_;
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t lo = i > kl_ ? i - kl_ : 0;
            const std::size_t hi = std::min(n_ - 1, i + ku_);
            for (std::size_t j = lo; j <= hi; ++j) {
                u(i, j) = a.get(i, j);
            }
        }
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t last_row = std::min(n_ - 1, k + kl_);
            const std::size_t last_col = std::min(n_ - 1, k + reach);
            std::size_t piv = k;
            double best = std::abs(u(k, k));
            for (std::size_t i = k + 1; i <= last_row; ++i) {
                const double mag = std::abs(u(i, k));
                if (mag > best) {
                    best = mag;
                    piv = i;
                }
            }
            if (!(best >= kSingularPivot)) {
                throw SingularMatrixError(k);
            }
            pivots_[k] = piv;
            if (piv != k) {
                for (std::size_t c = k; c <= last_col; ++c) {
                    std::swap(u(k, c), u(piv, c));
                }
            }
            const double diag = u(k, k);
            for (std::size_t i = k + 1; i <= last_row; ++i) {
                const double l = u(i, k) / diag;
                lower_.data()[k * kl_ + (i - k - 1)] = l;
                u(i, k) = 0.0;
                if (l == 0.0) {
                    continue;
                }
                for (std::size_t c = k + 1; c <= last_col; ++c) {
                    u(i, c) -= l * u(k, c);
                }
            }
        }
    }

    std::size_t n() const noexcept { return n_; }

    std::vector<double> solve(std::span<const double> rhs) const {
        if (rhs.size() != n_) {
            throw DimensionError("banded_solve: right-hand side has length " + std::to_string(rhs.size()) +
                                 ", expected " + std::to_string(n_));
        }
        std::vector<double> x(rhs.begin(), rhs.end());
        for (std::size_t k = 0; k < n_; ++k) {
            std::swap(x[k], x[pivots_[k]]);
            const std::size_t last_row = std::min(n_ - 1, k + kl_);
            for (std::size_t i = k + 1; i <= last_row; ++i) {
                x[i] -= lower_.data()[k * kl_ + (i - k - 1)] * x[k];
            }
        }
        const std::size_t reach = kl_ + ku_;
        for (std::size_t k = n_; k-- > 0;) {
            const std::size_t last_col = std::min(n_ - 1, k + reach);
            double acc = x[k];
            for (std::size_t c = k + 1; c <= last_col; ++c) {
                acc -= u(k, c) * x[c];
            }
            x[k] = acc / u(k, k);
        }
        return x;
    }

    bool guards_intact() const noexcept { return upper_.intact() && lower_.intact(); }

private:
    static std::size_t row_width(const BandedMatrix& a) noexcept { return 2 * a.kl() + a.ku() + 1; }
    std::size_t width() const noexcept { return 2 * kl_ + ku_ + 1; }

    // Row i holds columns [i - kl, i + kl + ku].
    double& u(std::size_t i, std::size_t c) noexcept { return upper_.data()[i * width() + (c + kl_ - i)]; }
    double u(std::size_t i, std::size_t c) const noexcept { return upper_.data()[i * width() + (c + kl_ - i)]; }

    std::size_t n_;
    std::size_t kl_;
    std::size_t ku_;
    detail::GuardedBuffer upper_;
    detail::GuardedBuffer lower_;
    std::vector<std::size_t> pivots_;
};

inline BandedLU banded_lu_factor(const BandedMatrix& a) { return BandedLU(a); }

inline std::vector<double> banded_solve(const BandedLU& lu, std::span<const double> rhs) { return lu.solve(rhs); }

}  // namespace chemowave
