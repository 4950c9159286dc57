#pragma once

#include <stdexcept>

namespace mitosc {

/// Invalid parameters, arguments or configuration. The CLI maps this to exit status 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure while a simulation or analysis is running. The CLI maps this to exit status 2.
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Not enough data (e.g. oscillation onsets) to compute the requested quantity.
class AnalysisError : public RuntimeError {
public:
    using RuntimeError::RuntimeError;
};

}  // namespace mitosc
