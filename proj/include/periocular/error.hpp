#pragma once

#include <stdexcept>
#include <string>

namespace periocular {

// Every failure raised by the library derives from Error. The subclasses map
// onto the CLI exit codes: ConfigError -> 2, DataError family -> 3, the rest
// -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input-data problems: unreadable files, malformed landmark or label files.
class DataError : public Error {
 public:
  using Error::Error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// Eye geometry that cannot be normalized (coincident centers, absurd scale).
class GeometryError : public DataError {
 public:
  using DataError::DataError;
};

class PartitionError : public Error {
 public:
  using Error::Error;
};

class BlockTooSmallError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A Gabor bank whose highest frequency exceeds the Nyquist limit.
class AliasingError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace periocular
