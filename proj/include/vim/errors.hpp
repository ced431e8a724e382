#pragma once

#include <stdexcept>
#include <string>

namespace vim {

/// Argument outside the domain of an operation (negative state, bad ordering, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An operation was called in a state it does not support (wrong regime, failed assumption).
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Quadrature, root finding or a linear solve did not converge.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A work budget (node cap, retry cap) was exhausted.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace vim
