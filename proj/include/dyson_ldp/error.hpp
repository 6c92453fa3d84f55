#pragma once

#include <stdexcept>
#include <string>

namespace dyson_ldp {

/// A parameter is outside the range an operation accepts.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The argument lies outside the mathematical domain of a formula
/// (e.g. below the bulk edge, or a point mass asked for a density).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A path dips below the wall phi(t) = 2 sqrt(t) by more than the clamp tolerance.
class WallViolation : public std::domain_error {
public:
    WallViolation(double t, double value)
        : std::domain_error("path below the wall 2*sqrt(t) at t=" + std::to_string(t) +
                            " (value " + std::to_string(value) + ")"),
          time(t) {}
    double time;
};

/// A path touches an atom of the measure it is tested against.
class SingularDrift : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The particle integrator produced a non-finite state.
class IntegrationFailure : public std::runtime_error {
public:
    IntegrationFailure(double t, double min_gap)
        : std::runtime_error("non-finite eigenvalue at t=" + std::to_string(t) +
                             " (min gap " + std::to_string(min_gap) + ")"),
          time(t), gap(min_gap) {}
    double time;
    double gap;
};

}  // namespace dyson_ldp
