#pragma once

#include <stdexcept>
#include <string>

namespace sbspec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidShapeError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Quadrature or root refinement could not reach the requested accuracy.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double achieved)
        : Error(what + " (achieved estimate " + std::to_string(achieved) + ")"), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double location)
        : Error(what + " at t=" + std::to_string(location)), location_(location) {}
    double location() const noexcept { return location_; }

private:
    double location_;
};

/// Operation is undefined for the given input (degenerate resonance, theta = 0, ...).
class NotApplicableError : public Error {
public:
    using Error::Error;
};

/// A solvability condition that must hold by construction was violated.
class InconsistencyError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace sbspec
