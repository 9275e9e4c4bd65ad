#pragma once

#include <stdexcept>
#include <string>

namespace htev {

// Error families. The CLI maps ParameterError to exit code 2 and the
// numeric ones to exit code 3.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct UnsupportedError : std::logic_error {
    using std::logic_error::logic_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : NumericError {
    SolverError(const std::string& what, double last_residual, int iterations);
    double last_residual;
    int iterations;
};

}  // namespace htev
