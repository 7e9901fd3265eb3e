#pragma once

#include <stdexcept>
#include <string>

namespace fcdlif {

// Root of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents that do not fit the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid model, phantom, schedule or training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf values, singular models, undefined statistics.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Autograd misuse (non-scalar loss, graph reused after backward).
class GraphError : public Error {
 public:
  using Error::Error;
};

// The fixed-length baseline received T != 42 frames.
class FixedLengthError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated or corrupted files.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace fcdlif
