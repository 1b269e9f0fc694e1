#pragma once

#include <stdexcept>
#include <string>

namespace msjlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: a configuration, flag, or document that violates a
/// documented invariant. The CLI maps these to exit status 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A well-formed request that could not be computed. The CLI maps these
/// to exit status 2.
class ComputeError : public Error {
public:
    using Error::Error;
};

/// A size limit (vector materialization cap, state-space cap) was exceeded.
class CapacityError : public ComputeError {
public:
    using ComputeError::ComputeError;
};

/// A linear solve failed or left a residual above its tolerance.
class SolverError : public ComputeError {
public:
    SolverError(const std::string& what, double residual)
        : ComputeError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// The simulated queue grew past its configured bound.
class InstabilityError : public ComputeError {
public:
    using ComputeError::ComputeError;
};

/// No asymptotic formula is available for the requested regime.
class UnsupportedError : public ComputeError {
public:
    using ComputeError::ComputeError;
};

}  // namespace msjlab
