#pragma once

#include <stdexcept>
#include <string>

namespace lab {

/// Base of every error raised by the library. The CLI maps the subclasses
/// onto process exit codes.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong dimension, out-of-range parameter, bad index.
class InputError : public Error {
  public:
    using Error::Error;
};

/// A parameter outside the mathematical domain of an operation
/// (e.g. a divergent series exponent).
class DomainError : public InputError {
  public:
    using InputError::InputError;
};

/// Invalid or inconsistent experiment configuration.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A hard size cap was exceeded.
class ResourceError : public Error {
  public:
    using Error::Error;
};

/// An iterative method failed to converge or produced an invalid result.
class NumericalError : public Error {
  public:
    using Error::Error;
};

namespace detail {
[[noreturn]] inline void throw_input(const std::string& what) { throw InputError(what); }
}  // namespace detail

#define LAB_REQUIRE(cond, msg)                      \
    do {                                            \
        if (!(cond)) ::lab::detail::throw_input(msg); \
    } while (0)

}  // namespace lab
