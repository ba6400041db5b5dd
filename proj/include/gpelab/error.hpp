#pragma once

#include <stdexcept>
#include <string>

namespace gpelab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sample that must be strictly positive (background density, density) was not.
class PositivityViolation : public Error {
public:
    using Error::Error;
};

/// Operands disagree on grid or on component count.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// Caller supplied a parameter outside the documented domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An iterative procedure ran out of its iteration or step budget.
class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(const std::string& what, double estimate)
        : Error(what), estimate_(estimate) {}

    /// Solver-specific diagnostic (condition estimate for CG, last dt for time stepping).
    double estimate() const noexcept { return estimate_; }

private:
    double estimate_;
};

/// Time step violates the advective stability bound dt <= c dx / max|v|.
class CflViolation : public Error {
public:
    using Error::Error;
};

/// Raised while parsing scenario configuration; carries the offending line when known.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, long line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    long line() const noexcept { return line_; }

private:
    long line_;
};

}  // namespace gpelab
