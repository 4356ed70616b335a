#pragma once

#include <stdexcept>
#include <string>

namespace hogscan {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or truncated image stream.
struct DecodeError : Error { using Error::Error; };

// Malformed line-oriented text input (annotations, config files).
struct ParseError : Error { using Error::Error; };

// HogConfig invariant violation.
struct ConfigError : Error { using Error::Error; };

// Scalar parameter outside its admissible range.
struct ParamError : Error { using Error::Error; };

// Rectangle out of bounds or vector length mismatch.
struct DimensionError : Error { using Error::Error; };

// Unusable training set or hyperparameters.
struct TrainError : Error { using Error::Error; };

// Model file that cannot be loaded; message names the offending field.
struct LoadError : Error { using Error::Error; };

}  // namespace hogscan
