#pragma once

#include <stdexcept>
#include <string>

namespace xgrasp {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor/volume shapes do not line up.
struct DimensionError : Error {
  using Error::Error;
};

// Rejected input data (non-finite values, out-of-range spec fields).
struct ValidationError : Error {
  using Error::Error;
};

// A documented precondition was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};

// Unusable run configuration (e.g. empty training set).
struct ConfigError : Error {
  using Error::Error;
};

// File read/write failure.
struct IoError : Error {
  using Error::Error;
};

// Training produced a non-finite loss.
struct TrainingDiverged : Error {
  using Error::Error;
};

}  // namespace xgrasp
