#pragma once

#include <stdexcept>
#include <string>

namespace vibench {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration: bad plans, selections, percentiles, fold specs.
/// CLI exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data violates a precondition: shape mismatches, out-of-range
/// segments, constant channels, missing files. CLI exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical failure during computation: diverged training, degenerate
/// spectra, empty clusters after retries. CLI exit code 3.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace vibench
