#pragma once

#include <stdexcept>
#include <string>

namespace gravipanel {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad input data, schema mismatch, or invalid configuration. CLI exit code 1.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Numerical failure inside an estimator or test (rank deficiency,
/// insufficient degrees of freedom, degenerate fit). CLI exit code 2.
class EstimationError : public Error {
public:
    explicit EstimationError(const std::string& what) : Error(what) {}
};

}  // namespace gravipanel
