// Error taxonomy shared across the library. Everything derives from
// sdd::Error so callers can catch a single type at the boundary.
#pragma once

#include <stdexcept>

namespace sdd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument value.
struct InputError : Error {
  using Error::Error;
};

// Tensor shape disagreement; the message carries both shapes.
struct ShapeError : Error {
  using Error::Error;
};

// Misuse of stateful machinery (backward twice, missing gradients).
struct StateError : Error {
  using Error::Error;
};

// Non-finite value where the contract requires finite data.
struct NumericError : Error {
  using Error::Error;
};

// Filesystem / stream failure.
struct IoError : Error {
  using Error::Error;
};

// IDX parsing: unexpected magic number.
struct MagicError : IoError {
  using IoError::IoError;
};

// IDX parsing: file shorter than its header promises.
struct TruncatedError : IoError {
  using IoError::IoError;
};

// IDX parsing: image and label sample counts disagree.
struct CountMismatchError : IoError {
  using IoError::IoError;
};

// Config file syntax or validation problem (CLI exit code 1).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace sdd
