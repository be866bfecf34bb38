#pragma once

#include <stdexcept>
#include <string>

namespace kexp {

/// Raised when a caller passes arguments outside an operation's domain
/// (bad indices, unnormalized rows, parameters out of range).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a function is evaluated where it is undefined, e.g. the
/// objective at a zero occupancy entry with positive complexity.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised by iterative procedures that hit their iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kexp
