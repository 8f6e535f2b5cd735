#pragma once

#include <stdexcept>
#include <string>

namespace pcsid {

// Root of all library errors. Numerical failures and invalid inputs are kept
// apart so that front ends can map them to distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeError : public InvalidArgumentError {
 public:
  using InvalidArgumentError::InvalidArgumentError;
};

class DimensionMismatchError : public InvalidArgumentError {
 public:
  using InvalidArgumentError::InvalidArgumentError;
};

class InvalidMaskError : public InvalidArgumentError {
 public:
  using InvalidArgumentError::InvalidArgumentError;
};

class InsufficientDataError : public InvalidArgumentError {
 public:
  using InvalidArgumentError::InvalidArgumentError;
};

class ConfigError : public InvalidArgumentError {
 public:
  using InvalidArgumentError::InvalidArgumentError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularGeometryError : public NumericalError {
 public:
  SingularGeometryError(const std::string& what, int segment_index)
      : NumericalError(what), segment_index_(segment_index) {}
  int segment_index() const { return segment_index_; }

 private:
  int segment_index_;
};

class IllConditionedMassError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, double time)
      : NumericalError(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace pcsid
