#pragma once

#include <stdexcept>

namespace morphouq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unknown configuration key; the message names the key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Coordinate outside every flume sub-zone.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or foreign file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Not enough rows or observations for the requested operation.
class SizingError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or negative depth during time stepping.
class SolverError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class InferenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace morphouq
