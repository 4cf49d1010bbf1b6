#pragma once

#include <stdexcept>
#include <string>

namespace levitation {

/// Malformed configuration text. Carries the 1-based line when known.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

/// A configuration value parsed fine but violates an invariant.
class ValidationError : public ConfigError {
public:
    ValidationError(const std::string& field, const std::string& message)
        : ConfigError(field + ": " + message), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Bad arguments to a command or operation (empty regions, oversized scans, ...).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateGeometryError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InfeasibleError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UnstableSiteError : public NumericalError {
public:
    UnstableSiteError(const std::string& message, double eigenvalue)
        : NumericalError(message), eigenvalue_(eigenvalue) {}

    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace levitation
