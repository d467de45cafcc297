#pragma once

#include <stdexcept>
#include <string>

namespace fginpaint {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or size disagreement between operands.
struct DimensionError : Error {
    using Error::Error;
};

/// Entries outside the declared domain (value range, non-binary mask, ...).
struct ValueError : Error {
    using Error::Error;
};

/// Bad or inconsistent configuration (unknown keys, missing labels, ...).
struct ConfigError : Error {
    using Error::Error;
};

/// Dataset directory problems: missing counterpart files, degenerate masks.
struct IngestionError : Error {
    using Error::Error;
};

/// Mask generation could not satisfy its constraints.
struct GenerationError : Error {
    using Error::Error;
};

/// Non-finite values where finite ones are required.
struct NumericError : Error {
    using Error::Error;
};

/// File I/O failures.
struct IoError : Error {
    using Error::Error;
};

} // namespace fginpaint
