#ifndef FLOWLM_ERROR_HPP
#define FLOWLM_ERROR_HPP

#include <stdexcept>
#include <string>

namespace flowlm {

/// Raised for malformed input data, inconsistent model files and any other
/// condition caused by what the pipeline was fed rather than how it was
/// invoked. The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for invalid configuration values (bad dimensions, unknown keys).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace flowlm

#endif
