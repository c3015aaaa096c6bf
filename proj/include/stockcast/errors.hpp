#pragma once

#include <stdexcept>
#include <string>

namespace stockcast {

// Bad files, malformed CSV, missing columns, empty series. CLI exit code 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric or model-level failures: divergence, singular regressions,
// degenerate models. CLI exit code 1.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Transport failures in the fetch client. CLI exit code 3.
class NetworkError : public std::runtime_error {
public:
    explicit NetworkError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace stockcast
