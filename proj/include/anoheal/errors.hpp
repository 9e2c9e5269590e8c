#pragma once

#include <stdexcept>
#include <string>

namespace anoheal {

// Error taxonomy. The CLI maps these onto distinct exit codes:
// ConfigError -> 2, DataError -> 3, ComputeError -> 4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid parameters, malformed configuration, out-of-domain arguments.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Tensor shape disagreement between operands.
class ShapeError : public ConfigError {
public:
    explicit ShapeError(const std::string& msg) : ConfigError(msg) {}
};

// Out-of-range index (e.g. timestep lookup).
class IndexError : public ConfigError {
public:
    explicit IndexError(const std::string& msg) : ConfigError(msg) {}
};

// Missing, unreadable, or inconsistent on-disk data.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

class MalformedHeaderError : public DataError {
public:
    explicit MalformedHeaderError(const std::string& msg) : DataError(msg) {}
};

class TruncatedPayloadError : public DataError {
public:
    explicit TruncatedPayloadError(const std::string& msg) : DataError(msg) {}
};

class DtypeError : public DataError {
public:
    explicit DtypeError(const std::string& msg) : DataError(msg) {}
};

// Metric is undefined for the given inputs (e.g. no positive labels).
class UndefinedMetricError : public DataError {
public:
    explicit UndefinedMetricError(const std::string& msg) : DataError(msg) {}
};

// Runtime failures: non-finite losses, exhausted retries.
class ComputeError : public Error {
public:
    explicit ComputeError(const std::string& msg) : Error(msg) {}
};

} // namespace anoheal
