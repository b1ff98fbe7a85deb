#pragma once

#include <stdexcept>
#include <string>

namespace shf {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Carries the error estimate reached before giving up.
struct NumericError : std::runtime_error {
    double achieved_error;
    NumericError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
          achieved_error(achieved) {}
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CapacityError : std::length_error {
    using std::length_error::length_error;
};

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace shf
