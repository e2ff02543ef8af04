#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chemowave {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physical or numerical parameter outside its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a closed-form function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Quadrature failed while tabulating the wave profile.
class ProfileError : public Error {
public:
    ProfileError(const std::string& what, double u_lo, double u_hi)
        : Error(what + " on U-interval [" + std::to_string(u_lo) + ", " + std::to_string(u_hi) + "]"),
          u_lo_(u_lo), u_hi_(u_hi) {}

    double u_lo() const noexcept { return u_lo_; }
    double u_hi() const noexcept { return u_hi_; }

private:
    double u_lo_;
    double u_hi_;
};

/// Least-squares tail fit could not be formed.
class FitError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or inadmissible negativity inside the solver.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Newton iteration exhausted its budget.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : Error(what + " (last residual " + std::to_string(last_residual) + ")"), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

class SingularMatrixError : public Error {
public:
    explicit SingularMatrixError(std::size_t pivot)
        : Error("banded LU: numerically singular pivot at index " + std::to_string(pivot)), pivot_(pivot) {}

    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// A time step failed inside a simulation run.
class SimulationError : public Error {
public:
    SimulationError(const std::string& what, double t_fail)
        : Error(what + " (at t=" + std::to_string(t_fail) + ")"), t_fail_(t_fail) {}

    double failing_time() const noexcept { return t_fail_; }

private:
    double t_fail_;
};

class ShiftError : public Error {
public:
    using Error::Error;
};

class TrackingError : public Error {
public:
    using Error::Error;
};

}  // namespace chemowave
