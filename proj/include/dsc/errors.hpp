#ifndef DSC_ERRORS_HPP
#define DSC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dsc {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad user input: malformed config files, invalid parameters, unknown keys.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Numerical failure: non-PD matrices after jitter, degenerate models.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// Requested tensor/table would exceed the configured memory cap.
class CapacityError : public Error {
public:
    explicit CapacityError(const std::string& msg) : Error(msg) {}
};

/// On-disk artifact violates a structural invariant; message names it.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

} // namespace dsc

#endif
