#pragma once

#include <stdexcept>
#include <string>

namespace pinn_spectral {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or out-of-range argument.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Kernel family has no representation for the requested operation.
class UnsupportedFamilyError : public Error {
public:
    using Error::Error;
};

/// Requested derivative order or stencil cannot be provided.
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature did not reach its tolerance.
class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Invalid or incomplete experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Factorization failed even after jitter escalation.
class IllConditionedError : public Error {
public:
    IllConditionedError(const std::string& what, double condition_estimate)
        : Error(what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
          condition_estimate_(condition_estimate) {}

    double condition_estimate() const noexcept { return condition_estimate_; }

private:
    double condition_estimate_;
};

}  // namespace pinn_spectral
