#pragma once

#include <stdexcept>
#include <string>

namespace kgads {

/// Raised when an operation is called outside its domain (bad parameters,
/// malformed input files, violated preconditions). The CLI maps it to exit 2.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot deliver its contract
/// (non-positive discrete form, eigensolver failure, tolerance not held).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw PreconditionError(message);
}

}  // namespace kgads
