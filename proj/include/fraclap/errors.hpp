#pragma once

#include <stdexcept>
#include <string>

namespace fraclap {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: bad orders, grids, windows, or parameters.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Numerical failure during a computation (singular solve, size cap, no convergence).
class ComputeError : public Error {
public:
    using Error::Error;
};

/// Request refused because an energy lies within the guard band of a threshold.
class ThresholdGuardError : public Error {
public:
    using Error::Error;
};

/// Energy at which id + R0 W is numerically singular.
class ExceptionalEnergy : public ComputeError {
public:
    using ComputeError::ComputeError;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

} // namespace fraclap
