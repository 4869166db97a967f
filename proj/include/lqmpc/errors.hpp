#pragma once

#include <stdexcept>
#include <string>

namespace lqmpc {

/// Dimension mismatch, non-finite entries, or a violated precondition on shape.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain of an operation (unstable loop,
/// K outside the region of decreasing, unbounded polytope, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative method hit its cap. Carries the iteration count and the last
/// residual so callers can report how far off the iterate was.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, long iterations, double residual)
        : std::runtime_error(what + " (iterations=" + std::to_string(iterations) +
                             ", residual=" + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}

    long iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    long iterations_;
    double residual_;
};

}  // namespace lqmpc
