#pragma once

#include <stdexcept>
#include <string>

namespace nbof {

// Shape/dimension violations: bad ranks, mismatched operands.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Violated operation contract: non-scalar loss, invalid label, empty input.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// Illegal state transition: double backward sweep, missing gradient.
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// Invalid configuration value or file.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed on-disk data; the message carries the byte offset of the failure.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value where a finite one is required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace nbof
