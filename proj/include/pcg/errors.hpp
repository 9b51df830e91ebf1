#pragma once

#include <stdexcept>
#include <string>

namespace pcg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector / matrix shapes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid topology, clamp or schedule parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (IDX, PGM, checkpoint header).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A dataset or checkpoint file that cannot be opened.
class DataError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Energy became NaN or infinite during training or a query.
class DivergenceError : public Error {
 public:
  DivergenceError(long step, const std::string& what)
      : Error("diverged at step " + std::to_string(step) + ": " + what), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

void require_same_size(long a, long b, const char* what);

}  // namespace pcg
