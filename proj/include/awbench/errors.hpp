#pragma once

#include <stdexcept>
#include <string>

namespace awbench {

/// Matrix or vector shapes that do not fit together.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A parameter record violates one of its invariants.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Iterative solver gave up. Carries the last residual it reached.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// The pair (A, B) could not be stabilized by the computed feedback.
class StabilizabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedDimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InfeasibleProblemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Metrics or margins requested on a run that did not stay bounded.
class MetricsUnavailableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace awbench
