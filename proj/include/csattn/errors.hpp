#pragma once

#include <stdexcept>
#include <string>

namespace csattn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/width mismatches between vectors and the configured head layout.
struct DimensionError : Error {
    using Error::Error;
};

// Out-of-range or inconsistent parameters (K, C, alpha, ...).
struct ParameterError : Error {
    using Error::Error;
};

// Anything wrong with external data (files, dumps).
struct DataError : Error {
    using Error::Error;
};

struct BadMagicError : DataError {
    using DataError::DataError;
};

struct VersionError : DataError {
    using DataError::DataError;
};

struct TruncatedError : DataError {
    using DataError::DataError;
};

// File parsed but the loaded structures violate an invariant.
struct CorruptError : DataError {
    using DataError::DataError;
};

// A runtime-checked property (bounded work, selected-set size) failed.
struct PropertyError : Error {
    using Error::Error;
};

// An input stream ran out before the requested number of decode steps.
struct StreamExhaustedError : Error {
    using Error::Error;
};

}  // namespace csattn
