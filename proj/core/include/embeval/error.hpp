#pragma once

#include <stdexcept>
#include <string>

namespace embeval {

/// Base class for every error raised by the harness.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition on shapes or dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or out-of-range input data (files, labels, scores).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Training diverged or was given unusable splits.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for the given input (empty, constant, ...).
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Encoder failures: protocol violations, child exit, dimension drift.
class EncoderError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace embeval
